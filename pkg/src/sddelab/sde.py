"""Explicit Euler integration of dx = b(x) dt + sigma(x) dW with escape detection.

Blow-up cannot be observed directly on a finite machine, so a path is marked
explosive when it climbs a ladder of thresholds (default 10^1..10^8) and the
gaps between successive rung-crossing times shrink — the signature of escape
in finite time.  Positive-state problems instead report extinction when the
state falls below a small barrier.  Anything still alive at the horizon is
censored.

Step sizes follow dt = min(dt_max, 0.1 / (1 + |b| + sigma^2)), quantized to
whole multiples of the noise source's base resolution so that refined and
coarsened runs consume the same Brownian path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import partial
from typing import Callable

import numpy as np

from .noise import NoiseSource
from .types import (
    IntegrationFaultError,
    ModelSpec,
    PathResult,
    StoppingEvent,
)

__all__ = [
    "DEFAULT_LADDER",
    "IntegratorConfig",
    "SdeProblem",
    "step",
    "blow_up_certificate",
    "simulate_sde",
    "freeze_delay",
    "write_trajectory_csv",
]

DEFAULT_LADDER = tuple(10.0**k for k in range(1, 9))

#: actual step sizes below this are treated as an integration fault
DT_UNDERFLOW = 1e-12

#: slack when deciding that the horizon has been reached
_HORIZON_TOL = 1e-12

_CERT_TOL = 1e-12


@dataclass(frozen=True)
class IntegratorConfig:
    """Numerical policy for a single run."""

    dt_max: float
    horizon: float
    ladder: tuple[float, ...] = DEFAULT_LADDER
    extinction_eps: float = 1e-8

    def __post_init__(self) -> None:
        if not (self.dt_max > 0.0 and math.isfinite(self.dt_max)):
            raise ValueError(f"dt_max must be positive and finite, got {self.dt_max}")
        if not (self.horizon > 0.0 and math.isfinite(self.horizon)):
            raise ValueError(f"horizon must be positive and finite, got {self.horizon}")
        ladder = tuple(float(r) for r in self.ladder)
        object.__setattr__(self, "ladder", ladder)
        if not ladder:
            raise ValueError("ladder must contain at least one rung")
        if ladder[0] <= 0.0 or any(b <= a for a, b in zip(ladder, ladder[1:])):
            raise ValueError("ladder rungs must be positive and strictly increasing")
        if not 0.0 < self.extinction_eps < ladder[0]:
            raise ValueError(
                f"extinction_eps must lie in (0, first rung), got {self.extinction_eps}"
            )


@dataclass(frozen=True)
class SdeProblem:
    """Instantaneous problem dx = drift(x) dt + diffusion(x) dW from x0."""

    drift: Callable[[float], float]
    diffusion: Callable[[float], float]
    x0: float
    positive_state: bool = False


def step(x: float, b: float, sigma: float, dt: float, dw: float) -> float:
    """One explicit Euler update: x + b*dt + sigma*dw."""
    return x + b * dt + sigma * dw


def blow_up_certificate(crossings) -> bool | None:
    """Decide whether ladder crossings look like finite-time escape.

    True iff the gaps between successive crossing times are nonincreasing
    over the last four rungs (several rungs crossed in one step give zero
    gaps, the extreme case of shrinking).  Fewer than four crossings is
    inconclusive and reported as None; callers treat that as censoring.
    """
    if len(crossings) < 4:
        return None
    t0, t1, t2, t3 = (t for _, t in crossings[-4:])
    g0, g1, g2 = t1 - t0, t2 - t1, t3 - t2
    return g1 <= g0 + _CERT_TOL and g2 <= g1 + _CERT_TOL


class _StopMonitor:
    """Tracks ladder crossings and terminal conditions for one process."""

    def __init__(self, config: IntegratorConfig, positive_state: bool):
        self.config = config
        self.positive_state = positive_state
        self.crossings: list[tuple[float, float]] = []
        self._rung = 0

    def observe(self, t: float, x: float) -> StoppingEvent | None:
        """Inspect the post-step state; return the stopping event if any."""
        config = self.config
        ladder = config.ladder
        ax = abs(x)
        while self._rung < len(ladder) and ax > ladder[self._rung]:
            self.crossings.append((ladder[self._rung], t))
            self._rung += 1
        if self._rung == len(ladder):
            if blow_up_certificate(self.crossings):
                if x > 0.0:
                    return StoppingEvent.blow_up_plus(t)
                return StoppingEvent.blow_up_minus(t)
            # escaped the computational domain without the escape signature;
            # the verdict stays open
            return StoppingEvent.censored(config.horizon)
        if self.positive_state and x <= config.extinction_eps:
            return StoppingEvent.extinction(t)
        if t >= config.horizon - _HORIZON_TOL:
            return StoppingEvent.censored(config.horizon)
        return None


def _quantized_dt(dt_max: float, b: float, sigma: float, remaining: float, base_dt: float):
    """Adaptive step as a whole number of base increments (at least one)."""
    want = 0.1 / (1.0 + abs(b) + sigma * sigma)
    if dt_max < want:
        want = dt_max
    if remaining < want:
        want = remaining
    m = int(want / base_dt)
    return m if m >= 1 else 1


def _advance(
    drift,
    diffusion,
    x0: float,
    config: IntegratorConfig,
    noise: NoiseSource,
    *,
    positive_state: bool,
    t0: float = 0.0,
    start_index: int = 0,
    record_path: bool = True,
    log_drift: bool = False,
    on_step=None,
) -> PathResult:
    """Shared stepping loop; ``drift`` is called as drift(t, x)."""
    base = noise.base_dt
    if base > config.dt_max * (1.0 + 1e-9):
        raise ValueError(
            f"noise base_dt={base} exceeds dt_max={config.dt_max}; "
            "steps cannot be aligned to the increment grid"
        )
    monitor = _StopMonitor(config, positive_state)
    k = start_index
    consumed = 0
    t = t0
    x = float(x0)

    times = [t]
    values = [x]
    drifts: list[float] | None = [] if log_drift else None

    def _partial_path() -> PathResult:
        return PathResult(
            np.array(times),
            np.array(values),
            StoppingEvent.censored(config.horizon),
            crossings=tuple(monitor.crossings),
        )

    if not math.isfinite(x):
        raise IntegrationFaultError(t, f"non-finite initial state {x0}")

    event = monitor.observe(t, x)
    while event is None:
        b = drift(t, x)
        s = diffusion(x)
        if not (math.isfinite(b) and math.isfinite(s)):
            raise IntegrationFaultError(
                t, f"non-finite coefficients b={b}, sigma={s} at x={x}", _partial_path()
            )
        if drifts is not None:
            drifts.append(b)
        m = _quantized_dt(config.dt_max, b, s, config.horizon - t, base)
        dt = m * base
        if dt < DT_UNDERFLOW:
            raise IntegrationFaultError(t, f"step size underflow: dt={dt}", _partial_path())
        dw = noise.increment_sum(k, m)
        x_new = x + b * dt + s * dw
        k += m
        consumed += m
        t_new = t0 + consumed * base
        if not math.isfinite(x_new):
            raise IntegrationFaultError(
                t_new, f"non-finite state after step from x={x}", _partial_path()
            )
        if on_step is not None:
            on_step(t_new, x_new)
        if record_path:
            times.append(t_new)
            values.append(x_new)
        event = monitor.observe(t_new, x_new)
        t = t_new
        x = x_new

    if not record_path:
        times.append(t)
        values.append(x)

    return PathResult(
        np.array(times),
        np.array(values),
        event,
        crossings=tuple(monitor.crossings),
        drift_log=np.array(drifts) if drifts is not None else None,
    )


def _timeless_drift(b, t, x):
    return b(x)


def simulate_sde(
    problem: SdeProblem,
    config: IntegratorConfig,
    noise: NoiseSource,
    *,
    record_path: bool = True,
) -> PathResult:
    """Integrate an instantaneous problem until it stops or is censored."""
    return _advance(
        partial(_timeless_drift, problem.drift),
        problem.diffusion,
        problem.x0,
        config,
        noise,
        positive_state=problem.positive_state,
        record_path=record_path,
    )


def _frozen_drift(F, a, x):
    return F(x, a)


def freeze_delay(model: ModelSpec, a: float, x0: float) -> SdeProblem:
    """The instantaneous equation obtained by pinning the delayed argument at ``a``."""
    return SdeProblem(
        drift=partial(_frozen_drift, model.drift_delayed, a),
        diffusion=model.diffusion,
        x0=x0,
        positive_state=model.positive_state,
    )


def write_trajectory_csv(result: PathResult, path, timestamp: str | None = None) -> None:
    """Write ``t,x`` rows with the stopping event in a trailing comment line."""
    with open(path, "w") as fh:
        if timestamp is not None:
            fh.write(f"# generated={timestamp}\n")
        fh.write("t,x\n")
        for t, x in zip(result.times, result.values):
            fh.write(f"{float(t)!r},{float(x)!r}\n")
        fh.write(f"# event={result.event.kind.value},t={result.event.time!r}\n")
