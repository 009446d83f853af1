"""Tests for the coupled three-process comparison.

The deterministic ramp case has closed-form Riccati oracles: freezing the
delayed argument at 1 gives x' = x**2 + 1 (explodes at pi/4), freezing at 2
gives x' = x**2 + 2 (explodes at ~0.67551), and the delay process must stay
between them with zero ordering violations on the shared grid.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from sddelab import (
    Fault,
    IntegratorConfig,
    ModelSpec,
    ModulusFamily,
    NoUniformBoundError,
    NoiseSource,
    Segment,
    SandwichReport,
    StoppingEvent,
    bound_constants,
    build_initial_from_constant,
    coupled_sandwich,
    get_model,
    write_sandwich_csv,
)
from sddelab.types import EventKind


def _unknown_model(drift) -> ModelSpec:
    return ModelSpec(
        name="probe",
        drift_delayed=drift,
        diffusion=lambda x: 0.0,
        delay=1.0,
        modulus=ModulusFamily.lipschitz(1.0),
        delay_monotonicity="unknown",
    )


# -- bounding constants -----------------------------------------------------------


def test_bound_constants_use_declared_monotonicity():
    increasing = get_model("population", a=1.0)
    assert bound_constants(increasing, (0.5, 2.0)) == (0.5, 2.0)
    decreasing = get_model("population", a=-1.0)
    assert bound_constants(decreasing, (0.5, 2.0)) == (2.0, 0.5)


def test_bound_constants_grid_search_additive_drift():
    model = _unknown_model(lambda x, y: x + y)
    assert bound_constants(model, (-1.0, 1.0)) == (-1.0, 1.0)


def test_bound_constants_refuse_state_dependent_extremes():
    model = _unknown_model(lambda x, y: x * y)
    with pytest.raises(NoUniformBoundError, match="no uniform bounding constant"):
        bound_constants(model, (-1.0, 1.0))


def test_bound_constants_validation():
    model = get_model("population")
    with pytest.raises(ValueError, match="finite interval"):
        bound_constants(model, (math.nan, 1.0))
    with pytest.raises(ValueError, match="finite interval"):
        bound_constants(model, (2.0, 1.0))
    with pytest.raises(ValueError, match="at least two points"):
        bound_constants(_unknown_model(lambda x, y: x + y), (0.0, 1.0), grid=1)


# -- coupled runs -----------------------------------------------------------------


def test_constant_history_collapses_the_sandwich():
    # with phi constant the three processes follow identical recursions, so
    # even a zero slack records no ordering violations
    model = get_model("explosive")
    phi = Segment.constant(1.0, 1.0)
    config = IntegratorConfig(dt_max=1e-3, horizon=1.0)
    report = coupled_sandwich(model, phi, config, 4, delta=0.0)
    assert (report.a1, report.a2) == (1.0, 1.0)
    assert report.grid_points == 843
    assert report.violations_low == 0
    assert report.violations_high == 0
    assert report.violation_fraction == 0.0
    assert report.events[0] == report.events[1] == report.events[2]
    assert report.events[1] == StoppingEvent.censored(1.0)


def test_deterministic_ramp_is_strictly_sandwiched():
    model = get_model("explosive-det")
    phi = build_initial_from_constant(2.0, 1.0, 0.1, 1.0)
    config = IntegratorConfig(dt_max=1e-4, horizon=1.0)
    report = coupled_sandwich(model, phi, config, 0, delta=1e-12)
    assert (report.a1, report.a2) == (1.0, 2.0)
    assert report.violations_low == 0
    assert report.violations_high == 0
    assert report.grid_points == 6767

    lower, delay, upper = report.events
    assert all(e.kind is EventKind.BLOW_UP_PLUS for e in report.events)
    assert lower.time == pytest.approx(0.7866000000000001, abs=1e-12)
    assert delay.time == pytest.approx(0.6767000000000001, abs=1e-12)
    assert upper.time == delay.time
    # Riccati oracles: x' = x**2 + c from 1 explodes at pi/4 for c = 1 and at
    # (pi/2 - atan(1/sqrt 2))/sqrt 2 for c = 2; Euler lags slightly behind
    assert abs(lower.time - math.pi / 4.0) <= 2e-3
    upper_oracle = (math.pi / 2.0 - math.atan(1.0 / math.sqrt(2.0))) / math.sqrt(2.0)
    assert abs(upper.time - upper_oracle) <= 2e-3
    assert upper.time <= delay.time <= lower.time


def test_noisy_sandwich_tightens_under_refinement():
    model = get_model("population-neglog", a=1.0, b=1.0, p=0.75, C=0.5)
    phi = build_initial_from_constant(0.5, 0.0, 0.1, 1.0)
    fractions = []
    for dt, expected_grid in ((4e-4, 2500), (2e-4, 5000)):
        config = IntegratorConfig(dt_max=dt, horizon=1.0)
        report = coupled_sandwich(model, phi, config, 3)
        assert (report.a1, report.a2) == (0.0, 0.5)
        assert report.grid_points == expected_grid
        assert all(e == StoppingEvent.censored(1.0) for e in report.events)
        fractions.append(report.violation_fraction)
    assert fractions == [0.0, 0.0]
    assert fractions[1] <= fractions[0]


def test_sandwich_rejects_coarse_noise():
    model = get_model("explosive")
    phi = Segment.constant(1.0, 1.0)
    config = IntegratorConfig(dt_max=1e-3, horizon=1.0)
    with pytest.raises(ValueError, match="exceeds dt_max"):
        coupled_sandwich(model, phi, config, 0, noise=NoiseSource(0, 0.01))


# -- report arithmetic and export ---------------------------------------------------


def test_violation_fraction_counts_both_inequalities():
    events = (StoppingEvent.censored(1.0),) * 3
    report = SandwichReport(
        seed=0, a1=0.0, a2=1.0, delta=1e-6, grid_points=10,
        violations_low=1, violations_high=2, events=events,
    )
    assert report.violation_fraction == (1 + 2) / (2.0 * 10)
    empty = SandwichReport(
        seed=0, a1=0.0, a2=1.0, delta=1e-6, grid_points=0,
        violations_low=0, violations_high=0, events=events,
    )
    assert empty.violation_fraction == 0.0


def test_sandwich_csv_bytes(tmp_path):
    report = SandwichReport(
        seed=3, a1=1.0, a2=2.0, delta=1e-6, grid_points=10,
        violations_low=0, violations_high=1,
        events=(StoppingEvent.blow_up_plus(0.5), StoppingEvent.censored(1.0), Fault(0.25)),
    )
    out = tmp_path / "sandwich.csv"
    write_sandwich_csv([report], out)
    assert out.read_text() == (
        "seed,a1,a2,grid_points,violations_low,violations_high,"
        "event_x1,event_x,event_x2\n"
        "3,1.0,2.0,10,0,1,BlowUpPlus@0.5,Censored@1.0,Fault@0.25\n"
    )
    write_sandwich_csv([report], out, timestamp="2026-01-01T00:00:00+00:00")
    text = out.read_text()
    assert text.startswith("# generated=2026-01-01T00:00:00+00:00\n")
    assert "np.float64" not in text
