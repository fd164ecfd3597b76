import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blochspec import (ConfigurationError, OperatorSpec, PeriodicFunction, Regime, certify,
                       compute_C, derivative, l2_norm, load_spec, spec_from_dict)
from blochspec.coefficients import even_factor, odd_threshold

amplitudes = st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False)
series = st.dictionaries(st.integers(-8, 8), amplitudes, max_size=6).map(PeriodicFunction)


# -- PeriodicFunction ----------------------------------------------------------------

def test_zero_amplitudes_dropped():
    p = PeriodicFunction({1: 0.0, 2: 1.0})
    assert p.indices.tolist() == [2]


def test_harmonic_cap():
    with pytest.raises(ConfigurationError):
        PeriodicFunction({65: 1.0})
    assert PeriodicFunction({80: 1.0}, max_harmonic=80).coefficient(80) == 1


def test_non_finite_amplitude_rejected():
    with pytest.raises(ConfigurationError):
        PeriodicFunction({1: float("nan")})


@given(series, st.floats(-3, 3))
def test_period_one(p, x):
    assert abs(p(x + 1.0) - p(x)) <= 1e-12 * (1 + np.sum(np.abs(p.amplitudes)))


def test_conj_is_pointwise_conjugate():
    p = PeriodicFunction({1: 1 + 2j, -3: 0.5j})
    x = np.linspace(0, 1, 7)
    assert np.allclose(p.conj()(x), np.conj(p(x)))


# -- derivative ------------------------------------------------------------------------

def test_derivative_identity():
    p = PeriodicFunction({1: 1.0})
    assert derivative(p, 0) == p


def test_derivative_single_harmonic():
    d = derivative(PeriodicFunction({1: 1.0}), 1)
    assert d.coefficient(1) == pytest.approx(2j * np.pi)


def test_derivative_of_constant_vanishes():
    assert derivative(PeriodicFunction.constant(5.0), 1).is_zero


def test_derivative_negative_order_rejected():
    with pytest.raises(ValueError):
        derivative(PeriodicFunction({1: 1.0}), -1)


@given(series, st.integers(0, 3), st.integers(0, 3))
def test_derivative_composes(p, a, b):
    lhs = derivative(derivative(p, a), b)
    rhs = derivative(p, a + b)
    assert lhs.indices.tolist() == rhs.indices.tolist()
    assert np.allclose(lhs.amplitudes, rhs.amplitudes, rtol=1e-13, atol=0)


def test_derivative_matches_finite_difference():
    p = PeriodicFunction({2: 0.3, -1: 1 - 1j})
    x, h = 0.37, 1e-5
    fd = (p(x + h) - p(x - h)) / (2 * h)
    assert abs(derivative(p, 1)(x) - fd) < 1e-7


# -- l2_norm ---------------------------------------------------------------------------

def test_l2_norm_examples():
    assert l2_norm(PeriodicFunction.zero()) == 0
    assert l2_norm(PeriodicFunction({1: 1, -1: 1})) == pytest.approx(math.sqrt(2), abs=1e-15)
    assert l2_norm(PeriodicFunction({2: 3})) == pytest.approx(3, abs=1e-15)


@settings(max_examples=50)
@given(series)
def test_parseval_against_trapezoid(p):
    x = np.arange(4096) / 4096
    quad = np.mean(np.abs(p(x)) ** 2)
    exact = l2_norm(p) ** 2
    assert abs(quad - exact) <= 1e-10 * max(exact, 1e-300) + 1e-300


# -- OperatorSpec ----------------------------------------------------------------------

def test_spec_padding_and_regime():
    spec = OperatorSpec.build(4, 1.0, p3={1: 1.0})
    assert len(spec.coeffs) == 3
    assert spec.p(2).is_zero and not spec.p(3).is_zero
    assert spec.regime is Regime.EVEN_GENERAL
    assert OperatorSpec.build(2, 1.0).regime is Regime.EVEN_N2
    assert OperatorSpec.build(5).regime is Regime.ODD


@pytest.mark.parametrize("kwargs", [
    {"n": 1},
    {"n": 3, "c": 1.0},
    {"n": 2, "c": 1j},
    {"n": 3, "regime": "even_general"},
])
def test_invalid_specs(kwargs):
    with pytest.raises(ConfigurationError):
        OperatorSpec(**kwargs)


def test_json_roundtrip(tmp_path):
    spec = OperatorSpec.build(4, 2.5, p2={1: 0.3, -1: 0.3}, p4={2: 0.2 + 0.1j})
    path = tmp_path / "spec.json"
    path.write_text(json.dumps(spec.to_dict()))
    assert load_spec(path) == spec


@pytest.mark.parametrize("doc", [
    {"c": 1.0},
    {"n": "2"},
    {"n": 2, "c": "x"},
    {"n": 2, "coeffs": {"2": [[1, 0.5]]}},
    {"n": 2, "coeffs": {"5": [[1, 0.5, 0.0]]}},
    {"n": 2, "coeffs": {"2": [[0.5, 1.0, 0.0]]}},
])
def test_malformed_documents(doc):
    with pytest.raises(ConfigurationError):
        spec_from_dict(doc)


def test_unreadable_file(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigurationError):
        load_spec(bad)
    with pytest.raises(ConfigurationError):
        load_spec(tmp_path / "missing.json")


# -- compute_C and certify ---------------------------------------------------------------

def test_C_free_is_zero():
    assert compute_C(OperatorSpec.build(3)) == 0


def test_C_second_order_is_norm_of_q():
    q = PeriodicFunction({1: 0.9, -1: 0.9, 3: 0.2j})
    assert compute_C(OperatorSpec.build(2, 1.0, p2=q)) == pytest.approx(l2_norm(q), abs=1e-12)


def test_C_third_order_single_harmonic():
    assert compute_C(OperatorSpec.build(3, p3={1: 1.0})) == pytest.approx(1 / np.pi, abs=1e-12)


def test_C_double_sum_by_hand():
    # n = 3, p2 = e^{i2pi x}: v=2 gives s=0 (||p2|| = 1) and s=1 (||p2'|| = 2 pi, divisor pi)
    spec = OperatorSpec.build(3, p2={1: 1.0})
    assert compute_C(spec) == pytest.approx(1 + 2 * np.pi / np.pi, abs=1e-12)


@given(st.floats(0.01, 10))
def test_C_scales_linearly(r):
    spec = OperatorSpec.build(4, 1.0, p2={1: 0.3, -2: 0.1j}, p3={2: 1.0}, p4={1: 0.5})
    assert compute_C(spec.scaled(r)) == pytest.approx(r * compute_C(spec), rel=1e-12)


@given(st.integers(-8, 8), amplitudes, st.integers(2, 4))
def test_adding_harmonic_never_decreases_C(m, a, v):
    base = {"p2": {1: 0.3}, "p3": {-1: 0.2}, "p4": {2: 0.1}}
    spec = OperatorSpec.build(4, 1.0, **base)
    extended = dict(base)
    key = f"p{v}"
    h = dict(extended[key])
    if m in h:
        return  # adding to an existing amplitude can cancel it; not a new harmonic
    h[m] = a
    extended[key] = h
    assert compute_C(OperatorSpec.build(4, 1.0, **extended)) >= compute_C(spec) - 1e-12


def test_certify_odd_example():
    cert = certify(OperatorSpec.build(3, p3={1: 1.0}))
    assert cert.C == pytest.approx(0.3183, abs=1e-4)
    assert cert.threshold == pytest.approx(np.pi ** 2 * 2 ** -2.5)
    assert cert.threshold == pytest.approx(1.7447, abs=1e-4)
    assert cert.satisfied and cert.margin > 0 and cert.regime is Regime.ODD


def test_certify_second_order_example():
    cert = certify(OperatorSpec.build(2, 1.0, p2={1: 0.9, -1: 0.9}))
    assert cert.C == pytest.approx(0.9 * math.sqrt(2))
    assert cert.threshold == pytest.approx(0.6364, abs=1e-4)
    assert cert.satisfied and cert.margin > 0


def test_certify_fourth_order_free():
    cert = certify(OperatorSpec.build(4, 1.0))
    assert cert.C == 0 and cert.satisfied and cert.margin == 1.0


def test_even_threshold_formula():
    assert even_factor(4) == pytest.approx(1 / 6 + 16 / np.pi ** 2)
    spec = OperatorSpec.build(4, 1.0, p4={1: 1.0})
    cert = certify(spec)
    C = 1 / np.pi ** 2
    assert cert.threshold == pytest.approx(even_factor(4) * C ** 2)
    assert cert.margin == pytest.approx(1 - even_factor(4) * C ** 2)


def test_odd_boundary_is_satisfied():
    n = 3
    thr = odd_threshold(n)
    spec = OperatorSpec.build(n, p3={1: thr * np.pi})  # C = thr exactly
    cert = certify(spec)
    assert cert.C == pytest.approx(thr, rel=1e-15)
    assert cert.satisfied == (cert.margin >= 0)


def test_even_general_boundary_is_satisfied():
    # C = 1 with p4 = pi^2 e^{i2pi x}; choose c^2 equal to the threshold
    spec0 = OperatorSpec.build(4, 1.0, p4={1: np.pi ** 2})
    c = math.sqrt(certify(spec0).threshold)
    cert = certify(OperatorSpec.build(4, c, p4={1: np.pi ** 2}))
    assert abs(cert.margin) < 1e-12
    assert cert.satisfied == (cert.margin >= -1e-12)


def test_second_order_boundary_is_unsatisfied():
    # |c| = ||q|| / 2 exactly: strict inequality fails although margin is zero
    cert = certify(OperatorSpec.build(2, 0.5, p2={1: 1.0}))
    assert cert.margin == 0 and not cert.satisfied


def test_certify_unsatisfied_second_order():
    cert = certify(OperatorSpec.build(2, 0.1, p2={3: 1.0}))
    assert not cert.satisfied and cert.margin < 0


def test_certify_rejects_even_without_drift():
    with pytest.raises(ConfigurationError):
        certify(OperatorSpec.build(2, 0.0, p2={1: 1.0}))


def test_certificate_json_fields():
    doc = certify(OperatorSpec.build(3, p3={1: 1.0})).to_dict()
    assert set(doc) == {"C", "threshold", "satisfied", "margin", "regime"}
    assert doc["regime"] == "odd"
    json.dumps(doc)
