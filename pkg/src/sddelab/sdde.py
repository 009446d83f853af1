"""Method-of-steps integration for one-delay stochastic equations.

dx(t) = F(x(t), x(t - tau)) dt + g(x(t)) dW(t),  x(t) = phi(t) on [-tau, 0].

The delayed argument is read from a history buffer that starts as the initial
segment and grows one node per accepted step, so the drift at time t only
ever interrogates the past.  Stopping semantics (ladder, extinction barrier,
horizon) are shared with the instantaneous engine.
"""

from __future__ import annotations

import bisect
import math

import numpy as np

from .noise import NoiseSource
from .sde import IntegratorConfig, _advance
from .types import EventKind, ModelSpec, PathResult, Segment

__all__ = [
    "HistoryBuffer",
    "simulate_sdde",
    "build_initial_from_constant",
    "build_initial_from_path",
]


class HistoryBuffer:
    """Append-only record of (time, value) nodes with piecewise-linear lookup.

    Lookups are exact at stored nodes and move a cursor forward, so the
    monotone queries issued by the integrator cost O(1) each.  Desk-scale
    runs keep the full history; nothing older than t - tau is ever read back.
    """

    def __init__(self, segment: Segment):
        self._times: list[float] = [float(t) for t in segment.times]
        self._values: list[float] = [float(v) for v in segment.values]
        self._cursor = 0

    @property
    def newest_time(self) -> float:
        return self._times[-1]

    def append(self, t: float, x: float) -> None:
        if t <= self._times[-1]:
            raise ValueError(f"history nodes must advance in time: {t} <= {self._times[-1]}")
        self._times.append(t)
        self._values.append(x)

    def lookup(self, s: float) -> float:
        ts = self._times
        if s < ts[0] - 1e-12 or s > ts[-1] + 1e-12:
            raise ValueError(f"history lookup at {s} outside [{ts[0]}, {ts[-1]}]")
        c = self._cursor
        if ts[c] > s:  # non-monotone caller; fall back to bisection
            c = max(bisect.bisect_right(ts, s) - 1, 0)
        else:
            last = len(ts) - 1
            while c < last and ts[c + 1] <= s:
                c += 1
        self._cursor = c
        if s == ts[c] or c == len(ts) - 1:
            return self._values[c]
        t0, t1 = ts[c], ts[c + 1]
        v0, v1 = self._values[c], self._values[c + 1]
        return v0 + (s - t0) * (v1 - v0) / (t1 - t0)


def simulate_sdde(
    model: ModelSpec,
    segment: Segment,
    config: IntegratorConfig,
    noise: NoiseSource,
    *,
    record_path: bool = True,
    log_drift: bool = False,
) -> PathResult:
    """Integrate the delay equation from its initial segment.

    The returned trajectory includes the segment nodes (negative times).
    With ``log_drift`` the drift value used at each step is recorded; entry i
    of the log belongs to the i-th node at time >= 0.
    """
    if abs(segment.delay - model.delay) > 1e-12:
        raise ValueError(
            f"segment covers delay {segment.delay} but the model has delay {model.delay}"
        )
    buffer = HistoryBuffer(segment)
    tau = model.delay
    F = model.drift_delayed

    def drift(t: float, x: float) -> float:
        return F(x, buffer.lookup(t - tau))

    result = _advance(
        drift,
        model.diffusion,
        segment.initial_value,
        config,
        noise,
        positive_state=model.positive_state,
        record_path=record_path,
        log_drift=log_drift,
        on_step=buffer.append,
    )
    times = np.concatenate([segment.times[:-1], result.times])
    values = np.concatenate([segment.values[:-1], result.values])
    return PathResult(
        times,
        values,
        result.event,
        crossings=result.crossings,
        drift_log=result.drift_log,
    )


def build_initial_from_constant(a: float, x0: float, eps: float, delay: float) -> Segment:
    """History that sits at ``a`` until t = -eps, then ramps linearly to ``x0``.

    This is the generic way to hand an instantaneous equation's starting
    point to the delay engine while pinning the delayed argument at a chosen
    constant over most of the lookback window.
    """
    for label, v in (("a", a), ("x0", x0)):
        if not math.isfinite(v):
            raise ValueError(f"{label} must be finite, got {v}")
    if not 0.0 < eps < delay:
        raise ValueError(f"ramp width eps must lie in (0, delay={delay}), got {eps}")
    times = np.array([-delay, -eps, 0.0])
    values = np.array([a, a, x0], dtype=float)
    return Segment(times, values)


def build_initial_from_path(path: PathResult, n: float, delay: float) -> Segment:
    """Window [n - delay, n] of an earlier run, shifted to [-delay, 0].

    The path must cover the window and must not stop inside it: restarting
    from an exploded or extinguished stretch of history is meaningless.
    """
    if not math.isfinite(n):
        raise ValueError(f"window end must be finite, got {n}")
    lo = n - delay
    if path.times[0] > lo + 1e-12 or path.times[-1] < n - 1e-12:
        raise ValueError(
            f"path covers [{path.times[0]}, {path.times[-1]}] but the window is [{lo}, {n}]"
        )
    if path.event.kind is not EventKind.CENSORED and path.event.time <= n + 1e-12:
        raise ValueError(
            f"path stops ({path.event.compact()}) inside or before the window [{lo}, {n}]"
        )

    inside = (path.times > lo + 1e-12) & (path.times < n - 1e-12)
    mid_t = path.times[inside] - n
    mid_v = path.values[inside]
    times = np.concatenate([[-delay], mid_t, [0.0]])
    values = np.concatenate([[path.value_at(lo)], mid_v, [path.value_at(n)]])
    return Segment(times, values)
