"""Smooth one-to-one changes of state variable for instantaneous equations.

For y following dy = b(y) dt + sigma(y) dW and a C^2 bijection f, the process
x = f(y) follows

    dx = [f'(y) b(y) + 1/2 f''(y) sigma(y)^2] dt + f'(y) sigma(y) dW,

with y = f_inverse(x).  Note the pushed diffusion keeps the sign of f': that
is what makes the transformed path follow the *same* Brownian motion, which
the pathwise consistency check exploits.  Flipping the sign gives the usual
nonnegative-diffusion representative of the same law (``normalize_sign``).

The workhorse here is x = -log y on (0, infinity), which swaps hitting zero
with escaping to +infinity: an extinction barrier eps corresponds to the
level -log(eps) of the transformed ladder.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .noise import NoiseSource
from .sde import IntegratorConfig, SdeProblem, _StopMonitor
from .types import IntegrationFaultError, PathResult, StoppingEvent

__all__ = [
    "DomainError",
    "SmoothMap",
    "neg_log_map",
    "exp_neg_map",
    "identity_map",
    "push_coefficients",
    "transformed_problem",
    "transformed_config",
    "TransformConsistency",
    "run_transform_pair",
    "pathwise_consistency",
]


class DomainError(ValueError):
    """A transformed coordinate fell outside the image of the map."""


@dataclass(frozen=True)
class SmoothMap:
    """A C^2 bijection f from an open interval onto an open interval."""

    f: Callable[[float], float]
    f_prime: Callable[[float], float]
    f_double_prime: Callable[[float], float]
    f_inverse: Callable[[float], float]
    domain: tuple[float, float]
    image: tuple[float, float]
    name: str = "custom"

    def check_inverse(self, xs) -> float:
        """Largest round-trip error |f_inverse(f(x)) - x| over probe points."""
        worst = 0.0
        for x in np.asarray(xs, dtype=float):
            if not self.domain[0] < x < self.domain[1]:
                raise DomainError(f"probe point {x} outside domain {self.domain}")
            worst = max(worst, abs(self.f_inverse(self.f(x)) - x))
        return worst


def _neg_log(y: float) -> float:
    return -math.log(y)


def _neg_log_prime(y: float) -> float:
    return -1.0 / y


def _neg_log_double(y: float) -> float:
    return 1.0 / (y * y)


def _exp_neg(x: float) -> float:
    return math.exp(-x)


def _exp_neg_prime(x: float) -> float:
    return -math.exp(-x)


def _identity(x: float) -> float:
    return x


def _one(x: float) -> float:
    return 1.0


def _zero(x: float) -> float:
    return 0.0


def neg_log_map() -> SmoothMap:
    """x = -log y from (0, inf) onto the whole line."""
    return SmoothMap(
        f=_neg_log,
        f_prime=_neg_log_prime,
        f_double_prime=_neg_log_double,
        f_inverse=_exp_neg,
        domain=(0.0, math.inf),
        image=(-math.inf, math.inf),
        name="neg-log",
    )


def exp_neg_map() -> SmoothMap:
    """y = exp(-x) from the whole line onto (0, inf); inverse of neg_log_map."""
    return SmoothMap(
        f=_exp_neg,
        f_prime=_exp_neg_prime,
        f_double_prime=_exp_neg,
        f_inverse=_neg_log,
        domain=(-math.inf, math.inf),
        image=(0.0, math.inf),
        name="exp-neg",
    )


def identity_map() -> SmoothMap:
    return SmoothMap(
        f=_identity,
        f_prime=_one,
        f_double_prime=_zero,
        f_inverse=_identity,
        domain=(-math.inf, math.inf),
        image=(-math.inf, math.inf),
        name="identity",
    )


def push_coefficients(
    drift: Callable[[float], float],
    diffusion: Callable[[float], float],
    smap: SmoothMap,
    *,
    normalize_sign: bool = False,
):
    """Coefficients of the transformed coordinate x = f(y).

    Returns closures (drift_t, diffusion_t) in the transformed variable.
    With ``normalize_sign`` the diffusion is replaced by its absolute value —
    same law, but no longer coupled pathwise to the original equation.
    """
    lo, hi = smap.image

    def _pull_back(z: float) -> float:
        if not lo < z < hi:
            raise DomainError(
                f"transformed state {z} outside the image ({lo}, {hi}) of map {smap.name!r}"
            )
        return smap.f_inverse(z)

    def drift_t(z: float) -> float:
        y = _pull_back(z)
        s = diffusion(y)
        return smap.f_prime(y) * drift(y) + 0.5 * smap.f_double_prime(y) * s * s

    def diffusion_t(z: float) -> float:
        y = _pull_back(z)
        v = smap.f_prime(y) * diffusion(y)
        return abs(v) if normalize_sign else v

    return drift_t, diffusion_t


def transformed_problem(
    problem: SdeProblem, smap: SmoothMap, *, normalize_sign: bool = False
) -> SdeProblem:
    """The same dynamics expressed in the coordinate x = f(y)."""
    drift_t, diffusion_t = push_coefficients(
        problem.drift, problem.diffusion, smap, normalize_sign=normalize_sign
    )
    return SdeProblem(
        drift=drift_t,
        diffusion=diffusion_t,
        x0=smap.f(problem.x0),
        positive_state=False,
    )


def transformed_config(config: IntegratorConfig) -> IntegratorConfig:
    """Ladder for the -log coordinate: logs of the direct rungs.

    The direct extinction barrier eps corresponds to the transformed level
    -log(eps); the ladder is extended so its top reaches at least that level,
    otherwise extinction of the direct run could never register as escape of
    the transformed one.
    """
    rungs = [math.log(r) for r in config.ladder if r > 1.0]
    if not rungs:
        raise ValueError("direct ladder has no rung above 1; cannot build a log ladder")
    needed = -math.log(config.extinction_eps)
    if rungs[-1] < needed - 1e-9:
        rungs.append(needed)
    return replace(config, ladder=tuple(rungs))


@dataclass(frozen=True)
class TransformConsistency:
    """Coupled direct/transformed runs and their pathwise gap."""

    sup_discrepancy: float
    direct: PathResult
    transformed: PathResult
    dt: float


def run_transform_pair(
    problem: SdeProblem,
    smap: SmoothMap,
    config: IntegratorConfig,
    seed: int,
    *,
    noise: NoiseSource | None = None,
) -> TransformConsistency:
    """Step y and x = f(y) on identical increments and a fixed shared grid.

    sup |f_inverse(x(t)) - y(t)| is taken over the grid points where both
    runs are still alive.  The grid is fixed (dt_max rounded to the noise
    resolution) rather than adaptive: two adaptive runs would shrink their
    steps at different states and lose pathwise comparability.
    """
    if noise is None:
        noise = NoiseSource(seed, config.dt_max)
    base = noise.base_dt
    if base > config.dt_max * (1.0 + 1e-9):
        raise ValueError(f"noise base_dt={base} exceeds dt_max={config.dt_max}")
    m = max(1, round(config.dt_max / base))
    dt = m * base

    cfg_t = transformed_config(config)
    prob_t = transformed_problem(problem, smap)

    states = [float(problem.x0), float(prob_t.x0)]
    drifts = (problem.drift, prob_t.drift)
    diffusions = (problem.diffusion, prob_t.diffusion)
    monitors = [
        _StopMonitor(config, problem.positive_state),
        _StopMonitor(cfg_t, prob_t.positive_state),
    ]
    configs = (config, cfg_t)
    events: list[StoppingEvent | None] = [m_.observe(0.0, s) for m_, s in zip(monitors, states)]
    times = [[0.0], [0.0]]
    paths = [[states[0]], [states[1]]]

    sup = 0.0
    if events[0] is None and events[1] is None:
        sup = abs(smap.f_inverse(states[1]) - states[0])

    k = 0
    consumed = 0
    t = 0.0
    while any(e is None for e in events):
        dw = noise.increment_sum(k, m)
        k += m
        consumed += m
        t_new = consumed * base
        for i in range(2):
            if events[i] is not None:
                continue
            b = drifts[i](states[i])
            s = diffusions[i](states[i])
            if not (math.isfinite(b) and math.isfinite(s)):
                raise _fault_with_sup(t, states[i], sup)
            x_new = states[i] + b * dt + s * dw
            if not math.isfinite(x_new):
                raise _fault_with_sup(t_new, states[i], sup)
            states[i] = x_new
            times[i].append(t_new)
            paths[i].append(x_new)
            events[i] = monitors[i].observe(t_new, x_new)
        if events[0] is None and events[1] is None:
            sup = max(sup, abs(smap.f_inverse(states[1]) - states[0]))
        t = t_new

    results = [
        PathResult(
            np.array(times[i]),
            np.array(paths[i]),
            events[i] if events[i] is not None else StoppingEvent.censored(configs[i].horizon),
            crossings=tuple(monitors[i].crossings),
        )
        for i in range(2)
    ]
    return TransformConsistency(
        sup_discrepancy=sup, direct=results[0], transformed=results[1], dt=dt
    )


def _fault_with_sup(t: float, x: float, sup: float) -> IntegrationFaultError:
    err = IntegrationFaultError(t, f"non-finite arithmetic at x={x} in coupled transform run")
    err.partial_sup = sup
    return err


def pathwise_consistency(
    problem: SdeProblem,
    smap: SmoothMap,
    config: IntegratorConfig,
    seed: int,
    *,
    noise: NoiseSource | None = None,
) -> float:
    """sup-norm gap between the direct run and the pulled-back transformed run."""
    return run_transform_pair(problem, smap, config, seed, noise=noise).sup_discrepancy
