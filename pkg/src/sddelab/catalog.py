"""Named model catalog.

All drifts and diffusions are module-level functions bound with
``functools.partial`` so model specs survive pickling into worker processes.
"""

from __future__ import annotations

import inspect
import math
from functools import partial

from .types import ModelSpec, ModulusFamily

__all__ = ["catalog", "get_model", "MODEL_NAMES"]


# -- population model: dy = [a*y(t-1) - b*y(t)] dt + y(t)**p dW ---------------

def _population_drift(a: float, b: float, x: float, x_delayed: float) -> float:
    return a * x_delayed - b * x


def _power_diffusion(p: float, x: float) -> float:
    # state is conceptually positive; clamp so a transient negative Euler
    # iterate cannot produce complex powers before the barrier check fires
    return max(x, 0.0) ** p


# -- its image under x = -log y ----------------------------------------------

def _neglog_drift(a: float, b: float, p: float, x: float, x_delayed: float) -> float:
    return -math.exp(x) * (a * math.exp(-x_delayed) - b * math.exp(-x)) + 0.5 * math.exp(
        2.0 * (1.0 - p) * x
    )


def _neglog_diffusion(p: float, x: float) -> float:
    return math.exp((1.0 - p) * x)


# -- explosive test model and friends ----------------------------------------

def _explosive_drift(x: float, x_delayed: float) -> float:
    return x * x + x_delayed


def _linear_drift(x: float, x_delayed: float) -> float:
    return -x + 0.1 * x_delayed


def _delay_only_drift(x: float, x_delayed: float) -> float:
    return x_delayed


def _scaled_identity_diffusion(c: float, x: float) -> float:
    return c * x


def _zero_diffusion(x: float) -> float:
    return 0.0


def _monotonicity_from_gain(a: float) -> str:
    return "increasing" if a >= 0.0 else "decreasing"


def population(a: float = 1.0, b: float = 1.0, p: float = 0.75) -> ModelSpec:
    """Delayed birth / instantaneous death with state-power noise."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"noise exponent p must lie in (0, 1), got {p}")
    return ModelSpec(
        name="population",
        drift_delayed=partial(_population_drift, a, b),
        diffusion=partial(_power_diffusion, p),
        delay=1.0,
        modulus=ModulusFamily.power(1.0, min(p, 1.0)),
        delay_monotonicity=_monotonicity_from_gain(a),
        positive_state=True,
        params={"a": a, "b": b, "p": p},
    )


def population_det(a: float = 1.0, b: float = 1.0, p: float = 0.75) -> ModelSpec:
    """Population drift with the noise switched off."""
    spec = population(a, b, p)
    return ModelSpec(
        name="population-det",
        drift_delayed=spec.drift_delayed,
        diffusion=_zero_diffusion,
        delay=1.0,
        modulus=ModulusFamily.lipschitz(1.0),
        delay_monotonicity=spec.delay_monotonicity,
        positive_state=True,
        params={"a": a, "b": b, "p": p},
    )


def population_neglog(a: float = 1.0, b: float = 1.0, p: float = 0.75, C: float = 0.0) -> ModelSpec:
    """The population model seen through x = -log y.

    Extinction of the population corresponds to escape of x to +infinity, so
    this spec lives on the whole line and has no extinction barrier.  ``C``
    is the reference value at which the delayed argument is frozen when the
    companion instantaneous equation is built; it is carried in the params
    and does not enter the delayed drift itself.
    """
    if not 0.0 < p < 1.0:
        raise ValueError(f"noise exponent p must lie in (0, 1), got {p}")
    # the diffusion exp((1-p)x) is only locally Lipschitz; the declared
    # constant is the slope bound on states up to ~8, generous for every
    # experiment shipped here
    slope = (1.0 - p) * math.exp((1.0 - p) * 8.0)
    return ModelSpec(
        name="population-neglog",
        drift_delayed=partial(_neglog_drift, a, b, p),
        diffusion=partial(_neglog_diffusion, p),
        delay=1.0,
        modulus=ModulusFamily.lipschitz(slope),
        delay_monotonicity=_monotonicity_from_gain(a),
        positive_state=False,
        params={"a": a, "b": b, "p": p, "C": C},
    )


def explosive() -> ModelSpec:
    """F(x, y) = x**2 + y with small multiplicative noise; blows up fast."""
    return ModelSpec(
        name="explosive",
        drift_delayed=_explosive_drift,
        diffusion=partial(_scaled_identity_diffusion, 0.1),
        delay=1.0,
        modulus=ModulusFamily.lipschitz(0.1),
        delay_monotonicity="increasing",
        positive_state=False,
        params={},
    )


def explosive_det() -> ModelSpec:
    """The explosive drift alone: a delayed Riccati equation."""
    return ModelSpec(
        name="explosive-det",
        drift_delayed=_explosive_drift,
        diffusion=_zero_diffusion,
        delay=1.0,
        modulus=ModulusFamily.lipschitz(1.0),
        delay_monotonicity="increasing",
        positive_state=False,
        params={},
    )


def linear() -> ModelSpec:
    """Stable linear drift with weak delayed feedback; never escapes."""
    return ModelSpec(
        name="linear",
        drift_delayed=_linear_drift,
        diffusion=partial(_scaled_identity_diffusion, 0.1),
        delay=1.0,
        modulus=ModulusFamily.lipschitz(0.1),
        delay_monotonicity="increasing",
        positive_state=False,
        params={},
    )


def delay_only_det() -> ModelSpec:
    """x'(t) = x(t-1): the textbook method-of-steps example."""
    return ModelSpec(
        name="delay-only-det",
        drift_delayed=_delay_only_drift,
        diffusion=_zero_diffusion,
        delay=1.0,
        modulus=ModulusFamily.lipschitz(1.0),
        delay_monotonicity="increasing",
        positive_state=False,
        params={},
    )


_FACTORIES = {
    "population": population,
    "population-det": population_det,
    "population-neglog": population_neglog,
    "explosive": explosive,
    "explosive-det": explosive_det,
    "linear": linear,
    "delay-only-det": delay_only_det,
}

MODEL_NAMES = tuple(_FACTORIES)


def catalog() -> list[ModelSpec]:
    """Every named model with its default parameters."""
    return [factory() for factory in _FACTORIES.values()]


def get_model(name: str, **params: float) -> ModelSpec:
    """Build a catalog model by name, validating parameter names eagerly."""
    try:
        factory = _FACTORIES[name]
    except KeyError:
        known = ", ".join(sorted(_FACTORIES))
        raise ValueError(f"unknown model {name!r}; known models: {known}") from None
    allowed = set(inspect.signature(factory).parameters)
    for key in params:
        if key not in allowed:
            raise ValueError(
                f"unknown parameter {key!r} for model {name!r}; allowed: {sorted(allowed) or 'none'}"
            )
    return factory(**params)
