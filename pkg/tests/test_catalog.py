"""Tests for the named model catalog.

Coefficient formulas are checked pointwise against hand evaluations, and the
-log-transformed population drift is checked against the change-of-variable
formula applied to the direct coefficients.
"""

from __future__ import annotations

import math
import pickle

import pytest

from sddelab import MODEL_NAMES, catalog, get_model


def test_catalog_names():
    assert MODEL_NAMES == (
        "population",
        "population-det",
        "population-neglog",
        "explosive",
        "explosive-det",
        "linear",
        "delay-only-det",
    )
    models = catalog()
    assert [m.name for m in models] == list(MODEL_NAMES)


def test_unknown_model_rejected_with_known_names():
    with pytest.raises(ValueError, match="known models.*population"):
        get_model("powerlaw")


def test_unknown_parameter_rejected():
    with pytest.raises(ValueError, match="'q'"):
        get_model("population", q=2.0)
    with pytest.raises(ValueError, match="allowed"):
        get_model("explosive", a=1.0)


def test_population_coefficients():
    m = get_model("population", a=2.0, b=3.0, p=0.75)
    assert m.drift_delayed(1.0, 4.0) == 2.0 * 4.0 - 3.0 * 1.0
    assert m.diffusion(16.0) == 16.0**0.75
    assert m.diffusion(-2.0) == 0.0  # clamp keeps transient negatives real
    assert m.positive_state
    assert m.delay == 1.0
    assert m.params == {"a": 2.0, "b": 3.0, "p": 0.75}


def test_population_monotonicity_follows_gain_sign():
    assert get_model("population", a=1.0).delay_monotonicity == "increasing"
    assert get_model("population", a=-1.0).delay_monotonicity == "decreasing"


@pytest.mark.parametrize("p", [0.0, 1.0, 1.5, -0.5])
def test_population_exponent_range(p):
    with pytest.raises(ValueError, match="exponent p"):
        get_model("population", p=p)


def test_population_det_silences_noise_only():
    det = get_model("population-det", a=2.0, b=3.0, p=0.75)
    sto = get_model("population", a=2.0, b=3.0, p=0.75)
    assert det.diffusion(16.0) == 0.0
    assert det.drift_delayed(1.0, 4.0) == sto.drift_delayed(1.0, 4.0)
    assert det.positive_state


def test_neglog_drift_matches_change_of_variable():
    # for x = -log y the drift is -f'(y) * F + 1/2 f''(y) sigma^2 with
    # y = exp(-x); written out: -e^x (a e^-xd - b e^-x) + 1/2 e^(2(1-p)x)
    a, b, p = 1.5, 0.5, 0.75
    m = get_model("population-neglog", a=a, b=b, p=p, C=0.3)
    for x, xd in [(0.0, 0.0), (1.0, -0.5), (-2.0, 3.0)]:
        y, yd = math.exp(-x), math.exp(-xd)
        direct_drift = a * yd - b * y
        want = (1.0 / y) * direct_drift * (-1.0) + 0.5 * (1.0 / y**2) * (y**p) ** 2
        assert m.drift_delayed(x, xd) == pytest.approx(want, abs=1e-12)
        assert m.diffusion(x) == pytest.approx((1.0 / y) * y**p, abs=1e-12)
    assert not m.positive_state
    assert m.params["C"] == 0.3


def test_explosive_and_linear_coefficients():
    e = get_model("explosive")
    assert e.drift_delayed(3.0, 5.0) == 14.0
    assert e.diffusion(2.0) == pytest.approx(0.2)
    d = get_model("explosive-det")
    assert d.drift_delayed(3.0, 5.0) == 14.0
    assert d.diffusion(2.0) == 0.0
    lin = get_model("linear")
    assert lin.drift_delayed(3.0, 5.0) == -3.0 + 0.5
    delay_only = get_model("delay-only-det")
    assert delay_only.drift_delayed(3.0, 5.0) == 5.0
    assert delay_only.diffusion(3.0) == 0.0


def test_every_model_survives_pickling():
    for spec in catalog():
        clone = pickle.loads(pickle.dumps(spec))
        assert clone.name == spec.name
        assert clone.drift_delayed(1.5, 2.5) == spec.drift_delayed(1.5, 2.5)
        assert clone.diffusion(1.5) == spec.diffusion(1.5)
