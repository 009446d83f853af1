"""Tests for the modulus-of-continuity checks.

The divergence rule for power moduli is analytic: the integral of rho(u)**-2
near 0 diverges exactly when the exponent is at least 1/2.  The brute-force
scan is pinned on a genuine violation: |sqrt(x) - sqrt(y)| exceeds |x - y|**0.6
for small gaps, since 0.5 < 0.6 makes the claimed modulus too small near 0.
"""

from __future__ import annotations

import pytest

from sddelab import ModelSpec, ModulusFamily, osgood_divergent, validate_modulus
from sddelab.types import ModulusUndecidableError


def _spec(diffusion, modulus):
    return ModelSpec(
        name="probe",
        drift_delayed=lambda x, y: 0.0,
        diffusion=diffusion,
        delay=1.0,
        modulus=modulus,
    )


def test_lipschitz_is_divergent():
    assert osgood_divergent(ModulusFamily.lipschitz(2.0))


@pytest.mark.parametrize(
    "exponent,expected",
    [(0.5, True), (0.75, True), (1.0, True), (0.49, False), (0.25, False)],
)
def test_power_divergence_boundary_at_one_half(exponent, expected):
    assert osgood_divergent(ModulusFamily.power(1.0, exponent)) is expected


def test_custom_modulus_divergence_is_refused():
    rho = ModulusFamily.custom([(0.0, 0.0), (1.0, 1.0)])
    with pytest.raises(ModulusUndecidableError, match="undecidable"):
        osgood_divergent(rho)


def test_correct_power_modulus_passes_scan():
    spec = _spec(lambda x: max(x, 0.0) ** 0.75, ModulusFamily.power(1.0, 0.75))
    report = validate_modulus(spec, (0.0, 5.0), 101)
    assert report.passed
    assert report.violations == ()
    assert report.n_pairs == 101 * 100 // 2
    assert report.worst_ratio <= 1.0 + 1e-12


def test_sqrt_diffusion_saturates_its_own_modulus():
    spec = _spec(lambda x: x**0.5, ModulusFamily.power(1.0, 0.5))
    report = validate_modulus(spec, (0.0, 1.0), 51)
    assert report.passed
    # pairs touching 0 meet the bound with equality
    assert abs(report.worst_ratio - 1.0) <= 1e-12


def test_understated_modulus_is_caught_near_zero():
    # sqrt is 1/2-Hoelder; claiming exponent 0.6 understates it on small gaps
    spec = _spec(lambda x: x**0.5, ModulusFamily.power(1.0, 0.6))
    report = validate_modulus(spec, (0.0, 1e-5), 51)
    assert not report.passed
    assert report.worst_ratio > 1.0
    x, y, excess = report.violations[0]
    assert excess > 0.0
    assert abs(spec.diffusion(x) - spec.diffusion(y)) > abs(x - y) ** 0.6


def test_scan_box_and_sample_validation():
    spec = _spec(lambda x: x, ModulusFamily.lipschitz(1.0))
    with pytest.raises(ValueError, match="box"):
        validate_modulus(spec, (1.0, 1.0), 10)
    with pytest.raises(ValueError, match="two samples"):
        validate_modulus(spec, (0.0, 1.0), 1)
