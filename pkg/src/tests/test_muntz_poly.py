import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from errors import InvalidInputError, NumericalInconsistencyError
from muntz_poly import (DiscreteFunctional, MuntzPolynomial, PointT, _extrema, bisect_predicate, grid_oracle,
                        level_crossings, sup_norm)


def spike(a, b):
    return MuntzPolynomial([(a, 1.0), (b, -1.0)])


def test_point_conversions():
    assert PointT.from_x(1).t == 0.0
    assert PointT.from_x(0).t == math.inf
    assert PointT(math.inf).x == 0.0
    assert PointT(math.log(2)).x == pytest.approx(0.5)
    assert PointT(math.inf).to_dict() == {'x': 0.0, 't': None}
    assert PointT.from_dict({'x': 0.0, 't': None}).t == math.inf
    with pytest.raises(InvalidInputError):
        PointT(-1.0)
    with pytest.raises(InvalidInputError):
        PointT.from_x(1.5)


def test_terms_are_merged_and_sorted():
    p = MuntzPolynomial([(4, 1.0), (2, 3.0), (4, -1.0), (0, 0.5)])
    assert p.terms == [(0.0, 0.5), (2.0, 3.0)]
    assert p.constant_term == 0.5
    assert len(p - p) == 0
    with pytest.raises(InvalidInputError):
        MuntzPolynomial([(-1, 1.0)])


def test_evaluation_examples():
    p = spike(2, 4)
    assert p.eval_x(0.5) == pytest.approx(0.1875, abs=1e-15)
    big = spike(1e6, 2e6)
    assert abs(big.eval_t(math.log(2) / 1e6) - 0.25) < 1e-12
    q = MuntzPolynomial([(0, 0.25), (3, -2.0), (7, 0.5)])
    assert q.eval_t(0.0) == math.fsum([0.25, -2.0, 0.5])
    assert q.eval(PointT(math.inf)) == 0.25
    with pytest.raises(InvalidInputError):
        q.eval_t(math.nan)


def test_eval_many_matches_scalar():
    p = MuntzPolynomial([(0.5, 1.0), (3, -2.0), (40, 1.5)])
    t = np.array([0.0, 1e-9, 0.01, 0.3, 2.0, 50.0, math.inf])
    expected = [p.eval_t(v) for v in t]
    np.testing.assert_allclose(p.eval_many(t), expected, rtol=1e-13, atol=1e-300)


def test_spike_keeps_precision_near_one():
    # x^a - x^b ~ (b - a) t for tiny t
    p = spike(2 ** 100, 2 ** 101)
    t = 1e-40
    assert p.eval_t(t) == pytest.approx(2 ** 100 * t, rel=1e-9)


def test_sup_norm_examples():
    result = sup_norm(MuntzPolynomial.monomial(1))
    assert result.value == 1.0
    assert result.argmax[0].x == 1.0

    result = sup_norm(spike(2, 4))
    assert result.value == pytest.approx(0.25, abs=1e-12)
    assert result.argmax[0].x == pytest.approx(math.sqrt(0.5), rel=1e-8)

    result = sup_norm(spike(1, 3))
    assert result.value == pytest.approx(0.3849002, abs=1e-7)
    assert result.argmax[0].x == pytest.approx(3 ** -0.5, rel=1e-7)


def test_sup_norm_constant_and_negative():
    assert sup_norm(MuntzPolynomial.monomial(0, -0.7)).value == pytest.approx(0.7)
    assert sup_norm(-2.0 * spike(2, 4)).value == pytest.approx(0.5, abs=1e-12)


def test_sup_norm_flags_degraded_precision():
    assert sup_norm(spike(2, 4), tol=1e-18).degraded
    assert not sup_norm(spike(2, 4)).degraded


def test_sup_norm_rejects_bad_input():
    with pytest.raises(InvalidInputError):
        sup_norm(MuntzPolynomial())
    with pytest.raises(InvalidInputError):
        sup_norm(spike(2, 4), tol=0)


def test_descartes_bound_is_enforced():
    p = MuntzPolynomial([(1, 1.0), (2, -3.0), (3, 2.5)])
    assert sup_norm(p).value > 0

    # a one-term derivative whose scan reports alternating signs
    derivative = MuntzPolynomial.monomial(1.0, -1.0)
    derivative.eval_many = lambda t: np.where(np.arange(len(t)) % 2 == 0, 1.0, -1.0)
    fake = MuntzPolynomial([(1.0, 1.0), (2.0, -1.0)])
    fake.derivative_t = lambda: derivative
    with pytest.raises(NumericalInconsistencyError):
        _extrema(fake, 0.01, 10.0, 1e-10, 64)


@settings(max_examples=30, deadline=None)
@given(st.floats(min_value=-20, max_value=20).filter(lambda c: abs(c) > 1e-3))
def test_sup_norm_scales_linearly(c):
    p = MuntzPolynomial([(1.5, 1.0), (7, -2.0), (30, 0.75)])
    base = sup_norm(p)
    scaled = sup_norm(c * p)
    assert scaled.value == pytest.approx(abs(c) * base.value, rel=1e-9)
    assert [a.t for a in scaled.argmax] == pytest.approx([a.t for a in base.argmax], rel=1e-8)


def test_sup_norm_matches_grid_oracle():
    rng = np.random.default_rng(8)
    for _ in range(50):
        n_terms = int(rng.integers(1, 5))
        exponents = rng.choice(np.arange(0, 1001), size=n_terms, replace=False)
        coefficients = rng.uniform(-1, 1, n_terms)
        p = MuntzPolynomial(zip(exponents.tolist(), coefficients.tolist()))
        if not len(p) or not np.any(p.exponents > 0):
            continue
        engine = sup_norm(p).value
        oracle, _ = grid_oracle(p, points=10 ** 6)
        assert engine >= oracle * (1 - 1e-12)
        assert abs(engine - oracle) <= 1e-6 * engine


def test_level_crossings_examples():
    crossings = level_crossings(spike(2, 4), 0.125)
    assert [c.x for c in crossings] == pytest.approx([0.3826834, 0.9238795], abs=1e-7)
    assert [c.x for c in level_crossings(MuntzPolynomial.monomial(1), 0.5)] == pytest.approx([0.5])
    assert level_crossings(spike(2, 4), 0.5) == []


def test_level_crossings_respects_bracket_and_count():
    p = spike(2, 4)
    left = level_crossings(p, 0.125, bracket=(PointT.from_x(0.01), PointT.from_x(0.7)), expected=1)
    assert left[0].x == pytest.approx(0.3826834, abs=1e-7)
    with pytest.raises(NumericalInconsistencyError):
        level_crossings(p, 0.125, expected=1)


def test_bisect_predicate_brackets_threshold():
    t_true, t_false = bisect_predicate(lambda t: t < 0.3, 0.0, 1.0, rtol=1e-14)
    assert t_true < 0.3 <= t_false
    assert t_false - t_true <= 1e-14


def test_discrete_functional():
    mu = DiscreteFunctional.parse("0.5:0.5,1:0.25")
    assert mu.norm_bound == 0.75
    assert mu.apply(MuntzPolynomial.monomial(1)) == pytest.approx(0.5)
    assert DiscreteFunctional.from_list(mu.to_list()) == mu
    with pytest.raises(InvalidInputError):
        DiscreteFunctional.parse("0.5:0.8,0.2:0.5")
    with pytest.raises(InvalidInputError):
        DiscreteFunctional.parse("0.5")


terms_strategy = st.lists(
    st.tuples(st.floats(min_value=0, max_value=1e3), st.floats(min_value=-1, max_value=1)),
    min_size=1, max_size=6,
)


@settings(max_examples=200, deadline=None)
@given(terms_strategy, st.floats(min_value=1e-6, max_value=1 - 1e-6))
def test_x_and_t_evaluation_agree(terms, x):
    p = MuntzPolynomial(terms)
    direct = math.fsum(c * x ** e for e, c in p.terms)
    assert abs(p.eval_x(x) - direct) <= 1e-12
    assert abs(p.eval_many([-math.log(x)])[0] - direct) <= 1e-12


@settings(max_examples=50, deadline=None)
@given(terms_strategy)
def test_serialized_terms_round_trip(terms):
    p = MuntzPolynomial(terms)
    assert MuntzPolynomial.from_list(p.to_list()) == p
