"""Pathwise sandwich of a delay equation between two instantaneous ones.

For a drift that is monotone in its delayed argument, freezing that argument
at the extremes (a1, a2) of the initial segment's range produces two
instantaneous processes that bound the delay process from below and above on
[0, min(tau, first stopping time)], provided all three are driven by the very
same Brownian increments.  The coupled run here steps the three processes in
lockstep on one grid and counts pointwise ordering violations beyond a
numerical slack delta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .noise import NoiseSource
from .sde import IntegratorConfig, _quantized_dt, _StopMonitor
from .sdde import HistoryBuffer
from .types import Fault, ModelSpec, Segment, StoppingEvent

__all__ = [
    "NoUniformBoundError",
    "bound_constants",
    "SandwichReport",
    "coupled_sandwich",
    "write_sandwich_csv",
]

DEFAULT_PROBE_BOX = (-5.0, 5.0)

_TIE_TOL = 1e-12


class NoUniformBoundError(ValueError):
    """No constant delayed value bounds the drift uniformly over the probe states."""


def bound_constants(
    model: ModelSpec,
    segment_range: tuple[float, float],
    grid: int = 201,
    probe_box: tuple[float, float] = DEFAULT_PROBE_BOX,
) -> tuple[float, float]:
    """Constants (a1, a2) freezing the delayed argument at its drift-extremes.

    With declared monotonicity the answer is the ends of the segment range.
    For ``unknown`` monotonicity a grid search looks for delayed values that
    minimize / maximize F(x, .) uniformly over probe states x; the result is
    then only as trustworthy as the probe grid.  If the minimizing delayed
    value depends on x, no uniform constant exists and the search refuses.
    """
    lo, hi = float(segment_range[0]), float(segment_range[1])
    if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi:
        raise ValueError(f"segment range must be a finite interval, got {segment_range}")

    if model.delay_monotonicity == "increasing":
        return lo, hi
    if model.delay_monotonicity == "decreasing":
        return hi, lo

    if grid < 2:
        raise ValueError("grid search needs at least two points")
    ys = np.linspace(lo, hi, grid) if hi > lo else np.array([lo])
    xs = np.linspace(probe_box[0], probe_box[1], grid)
    F = model.drift_delayed
    M = np.array([[F(x, y) for y in ys] for x in xs])
    row_min = M.min(axis=1)
    row_max = M.max(axis=1)
    low_uniform = (M <= row_min[:, None] + _TIE_TOL).all(axis=0)
    high_uniform = (M >= row_max[:, None] - _TIE_TOL).all(axis=0)
    if not low_uniform.any() or not high_uniform.any():
        raise NoUniformBoundError(
            "no uniform bounding constant for the delayed argument on the probe "
            "set: the extremal delayed value depends on the state"
        )
    a1 = float(ys[int(np.argmax(low_uniform))])
    a2 = float(ys[int(np.argmax(high_uniform))])
    return a1, a2


@dataclass(frozen=True)
class SandwichReport:
    """Outcome of one coupled three-process run."""

    seed: int
    a1: float
    a2: float
    delta: float
    grid_points: int
    violations_low: int  # lower process exceeded the delay process
    violations_high: int  # delay process exceeded the upper process
    events: tuple[StoppingEvent | Fault, StoppingEvent | Fault, StoppingEvent | Fault]

    @property
    def violation_fraction(self) -> float:
        """Violations per compared inequality (two inequalities per grid point)."""
        if self.grid_points == 0:
            return 0.0
        return (self.violations_low + self.violations_high) / (2.0 * self.grid_points)


def coupled_sandwich(
    model: ModelSpec,
    phi: Segment,
    config: IntegratorConfig,
    seed: int,
    *,
    delta: float = 1e-6,
    noise: NoiseSource | None = None,
    grid: int = 201,
    probe_box: tuple[float, float] = DEFAULT_PROBE_BOX,
) -> SandwichReport:
    """Run (lower SDE, delay SDE, upper SDE) on shared increments and compare.

    All three start at phi(0).  The comparison window is [0, min(tau,
    horizon)] and ordering is only scored while all three are still running;
    after the first stop the survivors are integrated on (to record their own
    events) but no longer compared.  Each step is sized by the most demanding
    of the still-running processes and applied identically to all three, so
    the paths stay pathwise comparable and every process keeps its own rung
    crossings resolved.
    """
    tau = model.delay
    window_end = min(tau, config.horizon)
    cfg = replace(config, horizon=window_end)
    if noise is None:
        noise = NoiseSource(seed, cfg.dt_max)
    base = noise.base_dt
    if base > cfg.dt_max * (1.0 + 1e-9):
        raise ValueError(f"noise base_dt={base} exceeds dt_max={cfg.dt_max}")

    a1, a2 = bound_constants(model, phi.range(), grid=grid, probe_box=probe_box)
    x0 = phi.initial_value
    F = model.drift_delayed
    g = model.diffusion
    buffer = HistoryBuffer(phi)

    xs = [x0, x0, x0]  # lower, delay, upper
    monitors = [_StopMonitor(cfg, model.positive_state) for _ in range(3)]
    events: list[StoppingEvent | Fault | None] = [m.observe(0.0, x0) for m in monitors]

    grid_points = 0
    violations_low = 0
    violations_high = 0
    k = 0
    consumed = 0
    t = 0.0
    comparing = all(e is None for e in events)

    while any(e is None for e in events):
        # coefficients for the processes still running
        bs: list[float | None] = [None, None, None]
        ss: list[float | None] = [None, None, None]
        if events[1] is None:
            bs[1] = F(xs[1], buffer.lookup(t - tau))
        if events[0] is None:
            bs[0] = F(xs[0], a1)
        if events[2] is None:
            bs[2] = F(xs[2], a2)
        for i in range(3):
            if events[i] is None:
                ss[i] = g(xs[i])
                if not (math.isfinite(bs[i]) and math.isfinite(ss[i])):
                    events[i] = Fault(t, f"non-finite coefficients at x={xs[i]}")

        if all(e is not None for e in events):
            break

        # one shared grid: the most demanding alive process drives the step,
        # so every process's rung crossings stay resolved for its certificate
        m = min(
            _quantized_dt(cfg.dt_max, bs[i], ss[i], window_end - t, base)
            for i in range(3)
            if events[i] is None
        )
        dt = m * base
        dw = noise.increment_sum(k, m)
        k += m
        consumed += m
        t_new = consumed * base

        stepped = [False, False, False]
        for i in range(3):
            if events[i] is not None:
                continue
            x_new = xs[i] + bs[i] * dt + ss[i] * dw
            if not math.isfinite(x_new):
                events[i] = Fault(t_new, f"non-finite state after step from x={xs[i]}")
                continue
            xs[i] = x_new
            stepped[i] = True
            if i == 1:
                buffer.append(t_new, x_new)
            events[i] = monitors[i].observe(t_new, x_new)

        if comparing and all(stepped) and t_new <= window_end + 1e-12:
            grid_points += 1
            if xs[0] > xs[1] + delta:
                violations_low += 1
            if xs[1] > xs[2] + delta:
                violations_high += 1
        if any(e is not None for e in events):
            comparing = False
        t = t_new

    final = tuple(
        e if e is not None else StoppingEvent.censored(window_end) for e in events
    )
    return SandwichReport(
        seed=seed,
        a1=a1,
        a2=a2,
        delta=delta,
        grid_points=grid_points,
        violations_low=violations_low,
        violations_high=violations_high,
        events=final,  # type: ignore[arg-type]
    )


def write_sandwich_csv(reports, path, timestamp: str | None = None) -> None:
    """One row per coupled run."""
    with open(path, "w") as fh:
        if timestamp is not None:
            fh.write(f"# generated={timestamp}\n")
        fh.write(
            "seed,a1,a2,grid_points,violations_low,violations_high,"
            "event_x1,event_x,event_x2\n"
        )
        for r in reports:
            ev = ",".join(e.compact() for e in r.events)
            fh.write(
                f"{r.seed},{r.a1!r},{r.a2!r},{r.grid_points},"
                f"{r.violations_low},{r.violations_high},{ev}\n"
            )
