import math
import sys

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from csbp.errors import (
    BlowUpDomainError,
    EnvelopeNotApplicableError,
    InvalidCoefficientError,
    OracleRangeError,
)
from csbp.riccati import (
    RiccatiCase,
    blow_up_time,
    classify,
    envelope_check,
    evaluate,
    numeric_oracle,
)

nonneg = st.floats(0, 50, allow_nan=False, allow_infinity=False)


def test_classify_examples():
    assert classify(0, 0, 2).case is RiccatiCase.LINEAR_CONSTANT
    assert classify(0, 1, 2).case is RiccatiCase.LINEAR_EXPONENTIAL
    cl = classify(1, 3, 2)
    assert cl.case is RiccatiCase.REAL_ROOTS and cl.delta == 1.0
    assert cl.roots == (-1.0, -2.0)
    assert classify(1, 0, 0).case is RiccatiCase.TRIVIAL
    assert classify(1, 0, 1).case is RiccatiCase.TANGENT_PURE
    assert classify(1, 2, 1).case is RiccatiCase.DOUBLE_ROOT
    assert classify(1, 2, 2).case is RiccatiCase.COMPLEX_ROOTS


@pytest.mark.parametrize("coeffs", [(-1, 0, 0), (0, -1e-300, 0), (0, 0, -2), (math.nan, 1, 1)])
def test_invalid_coefficients(coeffs):
    with pytest.raises(InvalidCoefficientError):
        classify(*coeffs)


@given(nonneg, nonneg, nonneg)
def test_classification_exhaustive_and_consistent(a, b, c):
    cl = classify(a, b, c)
    if a == 0:
        assert cl.case in (RiccatiCase.LINEAR_CONSTANT, RiccatiCase.LINEAR_EXPONENTIAL)
    elif c == 0:
        assert cl.case is RiccatiCase.TRIVIAL
    if cl.case is RiccatiCase.REAL_ROOTS:
        r1, r2 = cl.roots
        # r1 ~ -c/b underflows to -0.0 for subnormal c
        assert r2 < r1 < 0 or (r1 == 0 and c < sys.float_info.min)
    assert blow_up_time(a, b, c).value > 0


def test_evaluate_examples():
    assert evaluate(0, 0, 2, 3.0) == 6.0
    assert evaluate(1, 0, 1, math.pi / 4) == pytest.approx(1.0, rel=1e-15)
    assert evaluate(1, 2, 1, 0.5) == pytest.approx(1.0, rel=1e-15)
    for t in (0.1, 0.3, 0.6):
        et = math.exp(t)
        assert evaluate(1, 3, 2, t) == pytest.approx((et - 1) / (1 - 0.5 * et), rel=1e-13)


def test_real_roots_initial_slope():
    eps = 1e-7
    assert evaluate(1, 3, 2, eps) / eps == pytest.approx(2.0, rel=1e-6)


def test_blow_up_examples():
    assert blow_up_time(1, 0, 1).value == pytest.approx(math.pi / 2, rel=1e-12)
    assert blow_up_time(1, 3, 2).value == pytest.approx(math.log(2), rel=1e-12)
    assert blow_up_time(1, 2, 1).value == pytest.approx(1.0, rel=1e-12)
    assert blow_up_time(1, 2, 2).value == pytest.approx(math.pi / 4, rel=1e-12)
    for coeffs in [(0, 0, 1), (0, 2, 1), (1, 1, 0)]:
        t = blow_up_time(*coeffs)
        assert not t.finite and float(t) == math.inf and t.exceeds(1e300)


def test_blow_up_matches_textbook_forms():
    # the evaluated forms are rewritten; compare with the textbook expressions
    a, b, c = 0.7, 3.1, 1.3
    s = math.sqrt(b * b - 4 * a * c)
    assert blow_up_time(a, b, c).value == pytest.approx(
        math.log((-b - s) / (-b + s)) / s, rel=1e-12)
    a, b, c = 0.7, 1.1, 2.3
    w = math.sqrt(4 * a * c - b * b)
    assert blow_up_time(a, b, c).value == pytest.approx(
        (math.pi - 2 * math.atan(b / w)) / w, rel=1e-12)


def test_evaluate_refuses_blow_up_domain():
    with pytest.raises(BlowUpDomainError) as info:
        evaluate(1, 0, 1, 2.0)
    assert info.value.t_star == pytest.approx(math.pi / 2)
    with pytest.raises(BlowUpDomainError):
        evaluate(1, 2, 1, 1.0)


def test_evaluate_array_and_zero():
    t = np.array([0.0, 0.1, 0.2])
    y = evaluate(1, 3, 2, t)
    assert y.shape == (3,) and y[0] == 0.0
    for coeffs in [(0, 0, 1), (0, 1, 1), (1, 0, 1), (1, 3, 2), (1, 2, 1), (1, 2, 2), (1, 1, 0)]:
        assert evaluate(*coeffs, 0.0) == 0.0


def _random_triple(case, rng):
    a, c = 10 ** rng.uniform(-2, 1, 2)
    b = 10 ** rng.uniform(-2, 1)
    g = 2 * math.sqrt(a * c)
    return {
        RiccatiCase.LINEAR_CONSTANT: (0.0, 0.0, c),
        RiccatiCase.LINEAR_EXPONENTIAL: (0.0, b, c),
        RiccatiCase.TANGENT_PURE: (a, 0.0, c),
        RiccatiCase.REAL_ROOTS: (a, g * rng.uniform(1.05, 5), c),
        RiccatiCase.DOUBLE_ROOT: (a, g, c),
        RiccatiCase.COMPLEX_ROOTS: (a, g * rng.uniform(0.05, 0.95), c),
        RiccatiCase.TRIVIAL: (a, b, 0.0),
    }[case]


@pytest.mark.parametrize("case", list(RiccatiCase))
def test_closed_form_monotone_and_satisfies_ode(case, rng):
    for _ in range(20):
        a, b, c = _random_triple(case, rng)
        assert classify(a, b, c).case is case
        t_star = blow_up_time(a, b, c)
        t_end = 0.9 * t_star.value if t_star.finite else 2.0
        t = np.linspace(0, t_end, 40)
        y = evaluate(a, b, c, t)
        if c > 0:
            assert np.all(np.diff(y) > 0)
        # centered difference against the right-hand side
        dt = 1e-5 * t_end
        for ti in t[1:-1]:
            fd = (evaluate(a, b, c, ti + dt) - evaluate(a, b, c, ti - dt)) / (2 * dt)
            yi = evaluate(a, b, c, ti)
            rhs = a * yi * yi + b * yi + c
            assert fd == pytest.approx(rhs, rel=1e-6, abs=1e-12)


@pytest.mark.parametrize("case", list(RiccatiCase))
def test_closed_form_matches_oracle(case, rng):
    for _ in range(10):
        a, b, c = _random_triple(case, rng)
        t_star = blow_up_time(a, b, c)
        t_end = 0.9 * t_star.value if t_star.finite else 2.0
        t = np.linspace(0, t_end, 20)
        z = numeric_oracle(a, b, c, t)
        y = evaluate(a, b, c, t)
        assert np.all(np.abs(y - z) <= 1e-6 * np.abs(z))


def test_oracle_examples():
    assert numeric_oracle(0, 1, 1, 1.0) == pytest.approx(math.e - 1, abs=1e-9)
    assert numeric_oracle(1, 0, 1, 1.0) == pytest.approx(math.tan(1.0), abs=1e-8)
    assert numeric_oracle(0, 0, 0, 5.0) == 0.0


def test_oracle_refuses_pole():
    with pytest.raises(OracleRangeError):
        numeric_oracle(1, 0, 1, 0.96 * math.pi / 2)
    with pytest.raises(OracleRangeError):
        numeric_oracle(1, 1, 1, 0.5, max_steps=2)


@pytest.mark.parametrize("a,b", [(1.0, 2.0), (0.3, 5.0), (2.0, 0.5)])
def test_continuity_across_double_root(a, b):
    c0 = b * b / (4 * a)
    t = 0.5 * blow_up_time(a, b, c0).value
    y0 = evaluate(a, b, c0, t)
    for sign in (-1, 1):
        c = c0 * (1 + sign * 1e-11)
        # just inside the threshold (double root) and then well outside it
        assert abs(evaluate(a, b, c, t) - y0) <= 1e-5
        c = c0 * (1 + sign * 1e-9)
        assert classify(a, b, c).case is not RiccatiCase.DOUBLE_ROOT
        assert abs(evaluate(a, b, c, t) - y0) <= 1e-5


@given(st.floats(1e-3, 10), st.floats(1e-3, 10), st.floats(1e-3, 10), st.floats(0, 0.99))
def test_solution_nonnegative_and_bounded_below_pole(a, b, c, frac):
    t_star = blow_up_time(a, b, c)
    t = frac * (t_star.value if t_star.finite else 1.0)
    y = evaluate(a, b, c, t)
    assume(math.isfinite(y))
    assert y >= 0


def test_envelope_zero_series_passes():
    t = np.linspace(0.01, 0.5, 50)
    res = envelope_check(t, np.zeros_like(t), (1.0, 1.0, 1.0))
    assert res.passed and np.all(res.margins >= 0)


def test_envelope_negative_control():
    t = np.linspace(0.01, 0.5, 50)
    y = evaluate(1.0, 1.0, 1.0, t)
    z = 0.5 * y
    z[17] = 1.01 * y[17]
    res = envelope_check(t, z, (1.0, 1.0, 1.0))
    assert not res.passed
    assert res.violations.tolist() == [17]


def test_envelope_not_applicable():
    t = np.linspace(0.1, 2.0, 5)
    with pytest.raises(EnvelopeNotApplicableError) as info:
        envelope_check(t, np.zeros_like(t), (1.0, 0.0, 1.0))
    assert info.value.t_star == pytest.approx(math.pi / 2)
