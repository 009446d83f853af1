"""Modulus-of-continuity checks for diffusion coefficients.

The pathwise-uniqueness condition behind the comparison machinery asks that
|g(x) - g(y)| <= rho(|x - y|) for a modulus rho whose reciprocal square has a
divergent integral at 0+.  For the power family rho(u) = K * u**alpha the
integral diverges exactly when alpha >= 1/2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .types import ModelSpec, ModulusFamily, ModulusUndecidableError

__all__ = ["osgood_divergent", "validate_modulus", "ModulusReport"]

#: slack added to rho before a pair is counted as violating, to keep honest
#: floating-point noise out of the report
VIOLATION_TOLERANCE = 1e-12


def osgood_divergent(family: ModulusFamily) -> bool:
    """Whether the integral of rho(u)**-2 diverges at 0+.

    Power moduli answer analytically: divergence holds iff the exponent is at
    least 1/2 (Lipschitz is the exponent-1 case).  A sampled custom modulus
    carries no information about its behaviour below the smallest sample, so
    the question is refused rather than guessed.
    """
    if family.kind == "lipschitz":
        return True
    if family.kind == "power":
        return family.exponent >= 0.5
    raise ModulusUndecidableError(
        "custom modulus: divergence of the reciprocal-square integral is "
        "undecidable analytically from samples"
    )


@dataclass(frozen=True)
class ModulusReport:
    """Outcome of a brute-force modulus scan over a box."""

    n_pairs: int
    violations: tuple[tuple[float, float, float], ...]  # (x, y, excess)
    worst_ratio: float

    @property
    def passed(self) -> bool:
        return not self.violations


def validate_modulus(model: ModelSpec, box: tuple[float, float], n_samples: int) -> ModulusReport:
    """Scan |g(x) - g(y)| against rho(|x - y|) on a uniform grid in box x box.

    Reports every sampled pair exceeding the modulus by more than
    ``VIOLATION_TOLERANCE``, together with the worst observed ratio
    |g(x) - g(y)| / rho(|x - y|).
    """
    lo, hi = float(box[0]), float(box[1])
    if not hi > lo:
        raise ValueError(f"box must satisfy lo < hi, got {box}")
    if n_samples < 2:
        raise ValueError("need at least two samples per axis")

    xs = np.linspace(lo, hi, int(n_samples))
    g = np.array([model.diffusion(x) for x in xs])
    dg = np.abs(g[:, None] - g[None, :])
    dx = np.abs(xs[:, None] - xs[None, :])
    rho = np.asarray(model.modulus(dx), dtype=float)

    # off-diagonal upper triangle: each unordered pair once
    iu, ju = np.triu_indices(len(xs), k=1)
    dg_u, dx_u, rho_u = dg[iu, ju], dx[iu, ju], rho[iu, ju]

    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(rho_u > 0.0, dg_u / rho_u, np.where(dg_u > 0.0, np.inf, 0.0))
    worst = float(ratios.max()) if len(ratios) else 0.0

    bad = dg_u > rho_u + VIOLATION_TOLERANCE
    violations = tuple(
        (float(xs[i]), float(xs[j]), float(e))
        for i, j, e in zip(iu[bad], ju[bad], (dg_u - rho_u)[bad])
    )
    return ModulusReport(n_pairs=len(iu), violations=violations, worst_ratio=worst)
