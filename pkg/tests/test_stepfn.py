import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sharpweights.stepfn import (
    AnalyticForm,
    DomainError,
    Exponent,
    Interval,
    StepFunction,
    compare_measure,
    integrate,
    level_measure,
    pointwise_power,
)
from sharpweights.weights import build_weight_small_p


@st.composite
def step_functions(draw, positive=True, max_pieces=12):
    n = draw(st.integers(1, max_pieces))
    widths = draw(st.lists(st.floats(0.05, 5.0), min_size=n, max_size=n))
    lo = 1e-3 if positive else 0.0
    vals = draw(st.lists(st.floats(lo, 1e3), min_size=n, max_size=n))
    a = draw(st.floats(-10, 10))
    return StepFunction(np.concatenate(([a], a + np.cumsum(widths))), vals, 1.0 if positive else 0.0)


def test_integrate_examples():
    assert integrate(StepFunction.indicator(0, 3), Interval(1, 2)) == 1.0
    assert integrate(StepFunction([0, 1], [1.0], period=1.0), Interval(0, 5)) == pytest.approx(5.0, rel=1e-15)
    f = StepFunction([0, 1, 2], [2.0, 3.0])
    assert integrate(f, Interval(0.5, 1.5)) == pytest.approx(2.5)


def test_integrate_empty_overlap_is_zero():
    assert integrate(StepFunction.indicator(0, 1), Interval(5, 6)) == 0.0


def test_integrate_periodic_partial_periods():
    f = StepFunction([0, 1, 3], [4.0, 1.0], period=3.0)
    # two full periods plus [0, 1.5): 2*(4+2) + 4 + 0.5
    assert integrate(f, Interval(0, 7.5)) == pytest.approx(16.5)
    assert integrate(f, Interval(-3, 0)) == pytest.approx(6.0)


@given(step_functions(), st.floats(0.01, 0.99))
@settings(max_examples=60, deadline=None)
def test_integrate_additive(f, t):
    I = f.support
    c = I.a + t * I.length
    whole = integrate(f, I)
    assert integrate(f, Interval(I.a, c)) + integrate(f, Interval(c, I.b)) == pytest.approx(whole, rel=1e-12)


def test_integrate_many_pieces_against_closed_form():
    n = 10_000
    f = StepFunction(np.arange(n + 1, dtype=float), np.arange(1, n + 1, dtype=float))
    assert integrate(f, f.support) == pytest.approx(n * (n + 1) / 2, rel=1e-12)


def test_pointwise_power_examples():
    assert pointwise_power(StepFunction.constant(4.0), 0.5).values[0] == 2.0
    p = 2.0
    c = 7.0
    dual = pointwise_power(StepFunction.constant(c), -1.0 / (p - 1.0))
    assert dual.values[0] == pytest.approx(1.0 / c)


def test_pointwise_power_rejects_nonpositive():
    f = StepFunction([0, 1, 2], [0.0, 1.0])
    with pytest.raises(DomainError):
        pointwise_power(f, -1.0)
    with pytest.raises(DomainError):
        pointwise_power(StepFunction([0, 1], [-1.0]), 0.5)


@given(step_functions(), st.sampled_from([0.3, 0.5, 2.0, 3.0, -0.5]))
@settings(max_examples=60, deadline=None)
def test_pointwise_power_inverse(f, s):
    back = pointwise_power(pointwise_power(f, s), 1.0 / s)
    np.testing.assert_allclose(back.values, f.values, rtol=1e-12)


def test_pointwise_power_identity_and_monotone():
    f = StepFunction([0, 1, 2, 3], [1.0, 2.0, 5.0])
    g = f * 1.5
    assert np.array_equal(pointwise_power(f, 1.0).values, f.values)
    assert np.all(pointwise_power(f, 0.7).values <= pointwise_power(g, 0.7).values)


def test_level_measure_examples():
    f = StepFunction([0, 3], [2.0])
    assert level_measure(f, 1.0, Interval(0, 3)) == 3.0
    assert level_measure(f, 2.0, Interval(0, 3)) == 0.0
    g = StepFunction([0, 1, 2, 3], [1.0, 3.0, 5.0])
    assert level_measure(g, 2.0, Interval(0, 3)) == 2.0


@given(step_functions())
@settings(max_examples=40, deadline=None)
def test_level_measure_nonincreasing_with_jumps_at_values(f):
    alphas = np.linspace(0, f.max() * 1.1, 40)
    m = [level_measure(f, a, f.support) for a in alphas]
    assert all(x >= y for x, y in zip(m, m[1:]))
    # constant between consecutive piece values
    vals = np.unique(f.values)
    for lo, hi in zip(vals, vals[1:]):
        a, b = lo + 0.25 * (hi - lo), lo + 0.75 * (hi - lo)
        assert level_measure(f, a, f.support) == level_measure(f, b, f.support)


def test_compare_measure_examples():
    f = StepFunction([0, 4], [2.0])
    assert compare_measure(f, AnalyticForm("identity"), Interval(0, 4)) == 2.0
    assert compare_measure(StepFunction([0, 4], [0.0]), AnalyticForm("identity", 3.0), Interval(0, 4)) == 0.0
    w = build_weight_small_p(10, 1.5)
    val = compare_measure(pointwise_power(w, 1 / 1.5), AnalyticForm("identity"), Interval(1, 2.0**11))
    assert val >= sum(range(3, 11)) == 52


def test_compare_measure_reciprocal_and_constant():
    f = StepFunction([1, 2, 4], [1.0, 0.5])
    # f > 1/x: on [1,2) x > 1; on [2,4) x > 2
    assert compare_measure(f, AnalyticForm("reciprocal"), Interval(1, 4)) == pytest.approx(3.0)
    assert compare_measure(f, AnalyticForm("constant", 0.75), Interval(1, 4)) == 1.0


def test_compare_measure_unsupported_form():
    with pytest.raises(ValueError):
        AnalyticForm("cosine")
    with pytest.raises(TypeError):
        compare_measure(StepFunction.constant(1.0), 3.0, Interval(0, 1))


def test_invariants_enforced():
    with pytest.raises(ValueError):
        StepFunction([0, 0, 1], [1.0, 2.0])
    with pytest.raises(ValueError):
        StepFunction([0, 1], [1.0, 2.0])
    with pytest.raises(ValueError):
        StepFunction([0, 1, 2], [1.0, 2.0], period=3.0)
    with pytest.raises(ValueError):
        Interval(1.0, 1.0)
    with pytest.raises(ValueError):
        Exponent(1.0)
    e = Exponent(3.0)
    assert e.p * e.conjugate == pytest.approx(e.p + e.conjugate)


def test_periodic_evaluation_wraps():
    f = StepFunction([0, 1, 4], [5.0, 2.0], period=4.0)
    assert f(8.5) == 5.0
    assert f(-0.5) == 2.0


def test_json_roundtrip_bit_exact():
    rng = np.random.default_rng(3)
    bp = np.cumsum(rng.random(30)) * math.pi
    f = StepFunction(bp, rng.random(29) * 1e-7, outside_value=0.1, period=None)
    g = StepFunction.from_json(json.dumps(json.loads(f.to_json())))
    assert np.array_equal(f.breakpoints, g.breakpoints)
    assert np.array_equal(f.values, g.values)
    assert g.outside_value == f.outside_value
    h = StepFunction([0, 1, 3], [1.0, 2.0], period=3.0)
    assert StepFunction.from_json(h.to_json()).period == 3.0


def test_arithmetic_on_common_refinement():
    f = StepFunction([0, 2], [1.0])
    g = StepFunction([1, 3], [2.0])
    h = f + g
    assert list(h.breakpoints) == [0, 1, 2, 3]
    assert list(h.values) == [1.0, 3.0, 2.0]
    assert integrate(f * g, Interval(0, 3)) == pytest.approx(2.0)
