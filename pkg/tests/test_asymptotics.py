import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from upagraph.asymptotics import (
    DegreeDistribution,
    limit_distribution,
    limit_H,
    limit_H_vector,
    limit_pk,
    limit_pk_l1,
    power_law_exponent,
    recurrence_tail,
    tail_approx,
    tail_constant,
)
from upagraph.errors import DomainError, ValidationError

from oracles import ba_limit


def test_barabasi_albert_head():
    d = limit_pk_l1(0.0, 3)
    assert d.values.tolist() == pytest.approx([2 / 3, 1 / 6, 1 / 15], abs=1e-15)


def test_barabasi_albert_entrywise():
    d = limit_pk_l1(0.0, 500)
    exact = np.array([float(ba_limit(k)) for k in range(1, 501)])
    np.testing.assert_allclose(d.values, exact, rtol=1e-11)


def test_l1_substitutions():
    assert limit_pk_l1(0.5, 1)[1] == pytest.approx(0.4, abs=1e-15)
    d = limit_pk_l1(1.0, 2)
    assert d.values.tolist() == [0.0, 1.0]


def test_window_substitutions():
    assert limit_pk(0.5, 2, 1)[1] == pytest.approx(0.45, abs=1e-15)
    for l in (2, 5, 100):
        assert limit_pk(0.0, l, 1)[1] == pytest.approx(2 / 3, abs=1e-15)


def test_h_values():
    np.testing.assert_allclose(limit_H_vector(0.5, 2), [1.75, 0.25], atol=1e-15)
    assert limit_H(0.5, 2, 3) == 0.0
    assert limit_H_vector(0.0, 7).tolist() == [7.0] + [0.0] * 6


@pytest.mark.parametrize("p", [0.1, 0.5, 0.9, 1.0])
@pytest.mark.parametrize("l", [1, 2, 9, 40])
def test_h_closed_forms(p, l):
    H = limit_H_vector(p, l)
    assert H[0] == pytest.approx(l / p * (1 - (1 - p / l) ** l), rel=1e-12)
    assert H[-1] == pytest.approx((p / l) ** (l - 1), rel=1e-10)


@settings(max_examples=80, deadline=None)
@given(p=st.floats(0, 1), l=st.integers(1, 200))
def test_h_sums_to_window_size(p, l):
    assert abs(limit_H_vector(p, l).sum() - l) < 1e-12


def test_h_validation():
    with pytest.raises(ValidationError):
        limit_H(0.5, 3, 0)
    with pytest.raises(ValidationError):
        limit_H_vector(0.5, 0)
    with pytest.raises(ValidationError):
        limit_H_vector(1.5, 3)


@pytest.mark.parametrize("p", [0.0, 0.2, 0.5, 0.8, 0.95])
@pytest.mark.parametrize("l", [1, 2, 10, 100])
def test_beta_tail_matches_recurrence(p, l):
    d = limit_distribution(p, l, 1000)
    k0 = 2 if l == 1 else l + 1
    rec = recurrence_tail(p, k0, d[k0], 1000)
    np.testing.assert_allclose(d.values[k0 - 1 :], rec, rtol=1e-10, atol=0)


@pytest.mark.parametrize("p,l,k", [(0.5, 1, 400), (0.8, 10, 900), (0.2, 100, 1000), (0.95, 3, 50)])
def test_beta_tail_against_high_precision(p, l, k):
    mpmath.mp.dps = 40
    a = 2 / mpmath.mpf(1 - p)
    d = limit_distribution(p, l, k)
    if l == 1:
        ref = mpmath.mpf(d[2]) * (a + 2) * (a + 1) * mpmath.beta(k, 1 + a)
    else:
        ref = mpmath.mpf(d[l + 1]) * mpmath.beta(k, l + 2 + a) / mpmath.beta(l + 1, k + 1 + a)
    assert d[k] == pytest.approx(float(ref), rel=1e-11)


@pytest.mark.parametrize("p", [0.0, 0.3, 0.8])
@pytest.mark.parametrize("l", [1, 2, 10, 100])
def test_normalization(p, l):
    d = limit_distribution(p, l, 10**6)
    assert d.values.sum() == pytest.approx(1.0, abs=1e-4)
    assert (d.k * d.values).sum() == pytest.approx(2.0, abs=1e-4)
    assert d.tail_mass >= -1e-9
    assert (d.values >= 0).all()


@pytest.mark.parametrize("l", [2, 3, 10, 100])
def test_p0_is_window_independent(l):
    np.testing.assert_allclose(limit_pk(0.0, l, 300).values, limit_pk_l1(0.0, 300).values, rtol=0, atol=1e-12)


@pytest.mark.parametrize("p,l", [(0.2, 1), (0.5, 2), (0.8, 10), (0.6, 100)])
def test_tail_strictly_decreasing(p, l):
    d = limit_distribution(p, l, 2000)
    k0 = 2 if l == 1 else l + 1
    assert np.all(np.diff(d.values[k0 - 1 :]) < 0)


def test_p1_domain_errors_keep_the_head():
    with pytest.raises(DomainError) as info:
        limit_pk_l1(1.0, 5)
    assert info.value.partial.values.tolist() == [0.0, 1.0]
    with pytest.raises(DomainError) as info:
        limit_pk(1.0, 3, 10)
    assert info.value.partial.kmax == 4
    assert limit_pk(1.0, 3, 4).kmax == 4  # the head alone is fine
    for fn in (lambda: power_law_exponent(1.0), lambda: tail_approx(1.0, 2, 10), lambda: tail_constant(1.0, 1)):
        with pytest.raises(DomainError):
            fn()


def test_limit_pk_rejects_l1():
    with pytest.raises(ValidationError):
        limit_pk(0.5, 1, 10)


def test_exponents():
    assert [power_law_exponent(p) for p in (0.0, 0.5, 0.8)] == pytest.approx([3, 5, 11])


def test_tail_constant_ba():
    assert tail_constant(0.0, 1) == pytest.approx(4.0, rel=1e-13)
    assert tail_approx(0.0, 1, 10) == pytest.approx(4e-3, rel=1e-13)


@pytest.mark.parametrize("p,l", [(0.0, 1), (0.3, 1), (0.5, 10), (0.2, 100)])
def test_tail_approx_is_asymptotic(p, l):
    d = limit_distribution(p, l, 20000)
    k = np.array([5000, 10000, 20000])
    e1 = np.abs(tail_approx(p, l, k, 1) / d.values[k - 1] - 1)
    e2 = np.abs(tail_approx(p, l, k, 2) / d.values[k - 1] - 1)
    assert np.all(np.diff(e1) < 0)
    assert np.all(e2 < e1)


def test_tail_approx_shapes_and_validation():
    assert isinstance(tail_approx(0.5, 3, 7), float)
    assert tail_approx(0.5, 3, [7, 8]).shape == (2,)
    with pytest.raises(ValidationError):
        tail_approx(0.5, 3, 7, order=3)
    with pytest.raises(ValidationError):
        tail_approx(0.5, 3, 0)


def test_degree_distribution_access():
    d = DegreeDistribution("empirical", [0.5, 0.25])
    assert d[0] == 0.0 and d[3] == 0.0 and d[2] == 0.25
    assert d.window(2, 4).tolist() == [0.25, 0.0, 0.0]
    assert d.as_dict() == {1: 0.5, 2: 0.25}
    assert d.tail_mass == 0.25
    with pytest.raises(ValidationError):
        DegreeDistribution("bogus", [1.0])
