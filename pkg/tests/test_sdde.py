"""Tests for the method-of-steps delay integrator.

The workhorse oracle is x'(t) = x(t-1) with constant unit history, whose
solution is x(t) = 1 + t on [0, 1] and 1 + t + (t-1)^2/2 on [1, 2], so
x(1) = 2 and x(2) = 3.5 exactly.  Dyadic grids make delayed lookups hit
stored nodes bitwise, which pins down the drift-log bookkeeping.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from sddelab import (
    IntegratorConfig,
    ModelSpec,
    ModulusFamily,
    NoiseSource,
    Segment,
    build_initial_from_constant,
    build_initial_from_path,
    get_model,
    simulate_sdde,
)
from sddelab.sdde import HistoryBuffer
from sddelab.types import EventKind


def _delay_only_run(dt: float, horizon: float = 2.0):
    model = get_model("delay-only-det")
    segment = Segment.constant(1.0, 1.0)
    config = IntegratorConfig(dt_max=dt, horizon=horizon)
    return simulate_sdde(model, segment, config, NoiseSource(0, dt))


# -- method-of-steps accuracy ----------------------------------------------------


def test_delay_only_matches_piecewise_solution():
    result = _delay_only_run(1e-3)
    assert result.event.kind is EventKind.CENSORED
    assert result.event.time == 2.0
    assert result.times[0] == -1.0
    assert result.values[0] == 1.0
    assert result.times[1] == 0.0
    assert abs(result.value_at(1.0) - 2.0) <= 1e-9
    assert abs(result.value_at(2.0) - 3.5) <= 1e-3


def test_delay_only_refinement_shrinks_the_error():
    coarse = abs(_delay_only_run(1e-3).value_at(2.0) - 3.5)
    fine = abs(_delay_only_run(1e-4).value_at(2.0) - 3.5)
    assert fine < coarse
    assert coarse <= 1e-3


def test_equilibrium_history_stays_put():
    model = get_model("population-det", a=1.0, b=1.0, p=0.75)
    segment = Segment.constant(1.0, 1.0)
    config = IntegratorConfig(dt_max=0.01, horizon=3.0)
    result = simulate_sdde(model, segment, config, NoiseSource(0, 0.01))
    assert result.event.kind is EventKind.CENSORED
    assert result.event.time == 3.0
    assert np.all(result.values == 1.0)


def test_mismatched_segment_delay_is_rejected():
    model = get_model("delay-only-det")
    segment = Segment.constant(1.0, 0.5)
    config = IntegratorConfig(dt_max=1e-3, horizon=1.0)
    with pytest.raises(ValueError, match="covers delay"):
        simulate_sdde(model, segment, config, NoiseSource(0, 1e-3))


# -- drift logging on a dyadic grid ----------------------------------------------


def _noisy_delay_only() -> ModelSpec:
    return ModelSpec(
        name="delay-only-noisy",
        drift_delayed=lambda x, xd: xd,
        diffusion=lambda x: 0.05,
        delay=1.0,
        modulus=ModulusFamily.lipschitz(1.0),
        delay_monotonicity="increasing",
    )


def test_drift_log_reads_the_stored_past_bitwise():
    # dt = 2^-10 keeps every node and every delayed query on the dyadic grid,
    # so x(t - 1) is a stored node and the logged drift must equal it exactly
    dt = 2.0**-10
    segment = Segment.constant(1.0, 1.0)
    config = IntegratorConfig(dt_max=dt, horizon=2.0)
    result = simulate_sdde(
        _noisy_delay_only(), segment, config, NoiseSource(5, dt), log_drift=True
    )
    assert result.event.kind is EventKind.CENSORED
    assert len(result.values) == 2050  # 1 history node + 2049 grid nodes
    log = result.drift_log
    assert log is not None and len(log) == 2048
    assert np.all(log[:1024] == 1.0)
    # entry i >= 1024 is F at t = i*dt, whose delayed argument is node i-1024;
    # values[0] is the history node, so grid node j sits at values[1 + j]
    assert np.array_equal(log[1024:], result.values[1:1025])


def test_drift_log_absent_by_default():
    result = _delay_only_run(0.01)
    assert result.drift_log is None


# -- initial segment builders -----------------------------------------------------


def test_constant_ramp_segment_nodes_and_interpolation():
    seg = build_initial_from_constant(2.0, 1.0, 0.1, 1.0)
    assert np.array_equal(seg.times, [-1.0, -0.1, 0.0])
    assert np.array_equal(seg.values, [2.0, 2.0, 1.0])
    assert seg(-1.0) == 2.0
    assert seg(-0.05) == pytest.approx(1.5, abs=1e-12)
    assert seg.initial_value == 1.0
    assert seg.delay == 1.0


def test_constant_ramp_segment_validation():
    with pytest.raises(ValueError, match="ramp width eps"):
        build_initial_from_constant(2.0, 1.0, 0.0, 1.0)
    with pytest.raises(ValueError, match="ramp width eps"):
        build_initial_from_constant(2.0, 1.0, 1.0, 1.0)
    with pytest.raises(ValueError, match="a must be finite"):
        build_initial_from_constant(math.inf, 1.0, 0.1, 1.0)
    with pytest.raises(ValueError, match="x0 must be finite"):
        build_initial_from_constant(2.0, math.nan, 0.1, 1.0)


def test_window_segment_matches_the_source_path():
    path = _delay_only_run(1e-3)
    seg = build_initial_from_path(path, 2.0, 1.0)
    assert len(seg.times) == 1001
    assert seg(-1.0) == path.value_at(1.0)
    assert seg(0.0) == path.value_at(2.0)
    # interior nodes are carried over verbatim, just shifted
    assert seg(-0.5) == pytest.approx(path.value_at(1.5), abs=1e-12)


def test_window_segment_requires_coverage():
    path = _delay_only_run(1e-3)
    with pytest.raises(ValueError, match="path covers"):
        build_initial_from_path(path, 3.0, 1.0)


def test_window_segment_rejects_paths_that_stop_inside():
    model = get_model("explosive-det")
    segment = Segment.constant(1.0, 1.0)
    config = IntegratorConfig(dt_max=1e-4, horizon=1.0)
    path = simulate_sdde(model, segment, config, NoiseSource(0, 1e-4))
    assert path.event.kind is EventKind.BLOW_UP_PLUS
    assert path.event.time == pytest.approx(0.7866000000000001, abs=1e-12)
    # the path covers a window ending at the explosion itself, but restarting
    # from an exploded stretch of history is refused
    with pytest.raises(ValueError, match="stops"):
        build_initial_from_path(path, path.final_time, 0.5)
    seg = build_initial_from_path(path, 0.5, 0.5)
    assert seg.delay == 0.5
    assert seg(-0.5) == path.value_at(0.0)
    assert seg(0.0) == path.value_at(0.5)


# -- the history buffer itself -----------------------------------------------------


def test_history_buffer_lookup_and_append():
    buf = HistoryBuffer(Segment.constant(1.0, 1.0))
    assert buf.newest_time == 0.0
    assert buf.lookup(-1.0) == 1.0
    assert buf.lookup(-0.3) == 1.0
    buf.append(0.5, 2.0)
    assert buf.newest_time == 0.5
    assert buf.lookup(0.25) == pytest.approx(1.5, abs=1e-12)
    assert buf.lookup(0.5) == 2.0
    # moving the cursor forward must not break older (non-monotone) queries
    assert buf.lookup(-0.5) == 1.0


def test_history_buffer_bounds_and_ordering():
    buf = HistoryBuffer(Segment.constant(1.0, 1.0))
    assert buf.lookup(-1.0 - 1e-13) == 1.0  # within tolerance
    with pytest.raises(ValueError, match="outside"):
        buf.lookup(-1.0 - 1e-11)
    with pytest.raises(ValueError, match="outside"):
        buf.lookup(0.5)
    buf.append(0.5, 2.0)
    with pytest.raises(ValueError, match="advance in time"):
        buf.append(0.5, 3.0)
    with pytest.raises(ValueError, match="advance in time"):
        buf.append(0.4, 3.0)


# -- reproducibility ----------------------------------------------------------------


def test_noisy_runs_are_bitwise_reproducible():
    model = get_model("explosive")
    segment = Segment.constant(1.0, 1.0)
    config = IntegratorConfig(dt_max=1e-3, horizon=1.0)
    first = simulate_sdde(model, segment, config, NoiseSource(4, 1e-3))
    second = simulate_sdde(model, segment, config, NoiseSource(4, 1e-3))
    assert first.event == second.event
    assert np.array_equal(first.times, second.times)
    assert np.array_equal(first.values, second.values)
