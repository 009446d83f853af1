"""Diagnostics for the time-change representation of a stochastic integral.

The integral I(t) of sigma(s) dW(s) is a Brownian motion run at the clock
T(t) = integral of sigma(s)^2 ds.  Discretely this shows up two ways: the
realized quadratic variation of I tracks T, and the increments of I scaled by
sqrt(increments of T) look standard normal.  Both are measured here from the
same increments that drove a simulation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .noise import NoiseSource

__all__ = [
    "TimeChangeDiagnostics",
    "diagnose_time_change",
    "ks_critical_value",
    "write_diagnostics_csv",
]


@dataclass(frozen=True)
class TimeChangeDiagnostics:
    """Cumulative quadratic variation and clock along a grid, plus a KS score."""

    t_grid: np.ndarray
    qv: np.ndarray
    clock: np.ndarray
    ks_statistic: float

    @property
    def n_steps(self) -> int:
        return len(self.t_grid) - 1


def diagnose_time_change(
    sigma_values,
    noise: NoiseSource,
    dt: float,
    start_index: int = 0,
) -> TimeChangeDiagnostics:
    """Accumulate the stochastic integral of a sampled sigma and compare clocks.

    ``sigma_values`` are sigma at the grid nodes k*dt (so n+1 values give n
    steps).  The increments come from ``noise`` starting at ``start_index``,
    coarsened so that each step consumes dt worth of fine increments — i.e.
    exactly the increments a simulation on the same grid used.
    """
    sig = np.asarray(sigma_values, dtype=float)
    if sig.ndim != 1 or len(sig) < 2:
        raise ValueError("sigma_values must be a 1-d array with at least two nodes")
    if not np.all(np.isfinite(sig)):
        raise ValueError("sigma_values must be finite")
    if np.any(sig * sig <= 0.0):
        raise ValueError(
            "time change requires strictly positive sigma^2 along the whole path"
        )
    m = round(dt / noise.base_dt)
    if m < 1 or abs(m * noise.base_dt - dt) > 1e-12 * max(1.0, dt):
        raise ValueError(
            f"dt={dt} is not a whole multiple of the noise resolution {noise.base_dt}"
        )

    n = len(sig) - 1
    if m == 1:
        dws = noise.increments(start_index, n)
    else:
        dws = np.array([noise.increment_sum(start_index + j * m, m) for j in range(n)])

    d_integral = sig[:-1] * dws
    d_clock = 0.5 * (sig[:-1] ** 2 + sig[1:] ** 2) * dt

    qv = np.concatenate([[0.0], np.cumsum(d_integral**2)])
    clock = np.concatenate([[0.0], np.cumsum(d_clock)])
    standardized = d_integral / np.sqrt(d_clock)
    ks = float(stats.kstest(standardized, "norm").statistic)

    t_grid = np.arange(n + 1) * dt
    return TimeChangeDiagnostics(t_grid=t_grid, qv=qv, clock=clock, ks_statistic=ks)


def ks_critical_value(n_steps: int, alpha: float = 0.05) -> float:
    """Two-sided one-sample Kolmogorov-Smirnov critical value."""
    if n_steps < 1:
        raise ValueError("need at least one step")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    return float(stats.kstwo.ppf(1.0 - alpha, n_steps))


def write_diagnostics_csv(diag: TimeChangeDiagnostics, path, timestamp: str | None = None) -> None:
    """Rows of t, qv, clock; the KS statistic rides in a trailing comment."""
    with open(path, "w") as fh:
        if timestamp is not None:
            fh.write(f"# generated={timestamp}\n")
        fh.write("t,qv,clock\n")
        for t, q, c in zip(diag.t_grid, diag.qv, diag.clock):
            fh.write(f"{float(t)!r},{float(q)!r},{float(c)!r}\n")
        fh.write(f"# ks_statistic={diag.ks_statistic!r}\n")
