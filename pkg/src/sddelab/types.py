"""Core value types shared across the lab.

A delay model prescribes a drift F(x, x_delayed), an instantaneous diffusion
g(x), a single discrete delay, and a modulus of continuity for g.  Runs are
classified by a stopping event: escape through the threshold ladder to +/-
infinity, hitting the extinction barrier, or censoring at the horizon.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Mapping

import numpy as np

__all__ = [
    "EventKind",
    "StoppingEvent",
    "Fault",
    "IntegrationFaultError",
    "ModulusUndecidableError",
    "ModulusFamily",
    "ModelSpec",
    "Segment",
    "PathResult",
    "MONOTONICITIES",
]

MONOTONICITIES = ("increasing", "decreasing", "unknown")


class EventKind(str, Enum):
    BLOW_UP_PLUS = "BlowUpPlus"
    BLOW_UP_MINUS = "BlowUpMinus"
    EXTINCTION = "Extinction"
    CENSORED = "Censored"


@dataclass(frozen=True)
class StoppingEvent:
    """Terminal classification of a single path."""

    kind: EventKind
    time: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.time) or self.time < 0.0:
            raise ValueError(f"event time must be finite and >= 0, got {self.time}")

    @classmethod
    def blow_up_plus(cls, t: float) -> "StoppingEvent":
        return cls(EventKind.BLOW_UP_PLUS, t)

    @classmethod
    def blow_up_minus(cls, t: float) -> "StoppingEvent":
        return cls(EventKind.BLOW_UP_MINUS, t)

    @classmethod
    def extinction(cls, t: float) -> "StoppingEvent":
        return cls(EventKind.EXTINCTION, t)

    @classmethod
    def censored(cls, horizon: float) -> "StoppingEvent":
        return cls(EventKind.CENSORED, horizon)

    @property
    def is_blow_up(self) -> bool:
        return self.kind in (EventKind.BLOW_UP_PLUS, EventKind.BLOW_UP_MINUS)

    def compact(self) -> str:
        """Short CSV-safe label, e.g. ``BlowUpPlus@0.785``."""
        return f"{self.kind.value}@{self.time!r}"


@dataclass(frozen=True)
class Fault:
    """Marker for a replica that died of non-finite arithmetic.

    Deliberately not a :class:`StoppingEvent`: a fault is a failure of the
    integration, not a verdict about the path.
    """

    time: float
    message: str = ""

    def compact(self) -> str:
        return f"Fault@{self.time!r}"


class IntegrationFaultError(RuntimeError):
    """Raised when the integrator meets NaN/Inf state or an unusable step size."""

    def __init__(self, time: float, message: str, partial: "PathResult | None" = None):
        super().__init__(f"integration fault at t={time}: {message}")
        self.fault = Fault(time, message)
        self.partial = partial


class ModulusUndecidableError(ValueError):
    """Raised when a divergence question has no analytic answer for the family."""


@dataclass(frozen=True)
class ModulusFamily:
    """Modulus of continuity rho for the diffusion coefficient.

    ``power``     rho(u) = K * u**alpha
    ``lipschitz`` rho(u) = K * u  (power with alpha = 1)
    ``custom``    rho given by linear interpolation of (u, rho(u)) samples
    """

    kind: str
    coefficient: float = 1.0
    exponent: float = 1.0
    samples: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("power", "lipschitz", "custom"):
            raise ValueError(f"unknown modulus kind {self.kind!r}")
        if self.kind in ("power", "lipschitz"):
            if not (self.coefficient > 0.0 and math.isfinite(self.coefficient)):
                raise ValueError(f"modulus coefficient must be positive, got {self.coefficient}")
        if self.kind == "power":
            if not (self.exponent > 0.0 and math.isfinite(self.exponent)):
                raise ValueError(f"power modulus exponent must be positive, got {self.exponent}")
        if self.kind == "custom":
            if not self.samples or len(self.samples) < 2:
                raise ValueError("custom modulus needs at least two (u, rho) samples")
            us = [u for u, _ in self.samples]
            if any(b <= a for a, b in zip(us, us[1:])):
                raise ValueError("custom modulus samples must have strictly increasing u")

    @classmethod
    def power(cls, coefficient: float, exponent: float) -> "ModulusFamily":
        return cls("power", coefficient=coefficient, exponent=exponent)

    @classmethod
    def lipschitz(cls, coefficient: float) -> "ModulusFamily":
        return cls("lipschitz", coefficient=coefficient, exponent=1.0)

    @classmethod
    def custom(cls, samples) -> "ModulusFamily":
        return cls("custom", samples=tuple((float(u), float(r)) for u, r in samples))

    def __call__(self, u):
        """Evaluate rho(u) for a scalar or array of nonnegative gaps."""
        if self.kind == "custom":
            us = np.array([s[0] for s in self.samples])
            rs = np.array([s[1] for s in self.samples])
            return np.interp(u, us, rs)
        exponent = 1.0 if self.kind == "lipschitz" else self.exponent
        return self.coefficient * np.abs(u) ** exponent


@dataclass(frozen=True)
class ModelSpec:
    """A delay model dx = F(x(t), x(t - delay)) dt + g(x(t)) dW(t).

    ``delay_monotonicity`` declares how F depends on its delayed argument and
    is what the comparison machinery uses to freeze the delayed value at
    bounding constants.  ``positive_state`` marks models whose state lives on
    (0, inf) so that the extinction barrier is meaningful.
    """

    name: str
    drift_delayed: Callable[[float, float], float]
    diffusion: Callable[[float], float]
    delay: float
    modulus: ModulusFamily
    delay_monotonicity: str = "unknown"
    positive_state: bool = False
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not (self.delay > 0.0 and math.isfinite(self.delay)):
            raise ValueError(f"delay must be positive and finite, got {self.delay}")
        if self.delay_monotonicity not in MONOTONICITIES:
            raise ValueError(
                f"delay_monotonicity must be one of {MONOTONICITIES}, got {self.delay_monotonicity!r}"
            )


def _as_readonly(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Segment:
    """Piecewise-linear initial history on [-delay, 0], endpoints included."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        times = _as_readonly(self.times)
        values = _as_readonly(self.values)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)
        if times.ndim != 1 or times.shape != values.shape:
            raise ValueError("segment times and values must be 1-d arrays of equal length")
        if len(times) < 2:
            raise ValueError("segment needs at least the two endpoints of [-delay, 0]")
        if not np.all(np.isfinite(times)) or not np.all(np.isfinite(values)):
            raise ValueError("segment grid and values must be finite")
        if np.any(np.diff(times) <= 0.0):
            raise ValueError("segment grid must be strictly increasing")
        if abs(times[-1]) > 1e-12:
            raise ValueError(f"segment must end at t=0, got {times[-1]}")
        if times[0] >= 0.0:
            raise ValueError("segment must start at t=-delay < 0")

    @property
    def delay(self) -> float:
        return float(-self.times[0])

    @property
    def initial_value(self) -> float:
        """phi(0), the starting state of the run."""
        return float(self.values[-1])

    def __call__(self, t):
        """Evaluate the history at time(s) in [-delay, 0]; exact at grid nodes."""
        t_arr = np.asarray(t, dtype=float)
        if np.any(t_arr < self.times[0] - 1e-12) or np.any(t_arr > self.times[-1] + 1e-12):
            raise ValueError(f"history query {t} outside [{self.times[0]}, {self.times[-1]}]")
        out = np.interp(t_arr, self.times, self.values)
        return float(out) if np.isscalar(t) or t_arr.ndim == 0 else out

    def range(self) -> tuple[float, float]:
        """The interval [min phi, max phi] spanned by the history."""
        return float(self.values.min()), float(self.values.max())

    @classmethod
    def constant(cls, value: float, delay: float) -> "Segment":
        return cls(np.array([-delay, 0.0]), np.array([value, value], dtype=float))


@dataclass(frozen=True)
class PathResult:
    """One simulated path: recorded nodes, terminal event, ladder crossings."""

    times: np.ndarray
    values: np.ndarray
    event: StoppingEvent
    crossings: tuple[tuple[float, float], ...] = ()
    drift_log: np.ndarray | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "times", _as_readonly(self.times))
        object.__setattr__(self, "values", _as_readonly(self.values))
        if self.drift_log is not None:
            object.__setattr__(self, "drift_log", _as_readonly(self.drift_log))

    def value_at(self, t):
        """Linear interpolation on the recorded grid; exact at nodes."""
        t_arr = np.asarray(t, dtype=float)
        if np.any(t_arr < self.times[0] - 1e-9) or np.any(t_arr > self.times[-1] + 1e-9):
            raise ValueError(f"query time {t} outside recorded range")
        out = np.interp(t_arr, self.times, self.values)
        return float(out) if np.isscalar(t) or t_arr.ndim == 0 else out

    @property
    def final_time(self) -> float:
        return float(self.times[-1])

    @property
    def final_value(self) -> float:
        return float(self.values[-1])
