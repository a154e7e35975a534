import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from plurigauss.gaussian import (
    LOG_FLOOR,
    RHO_MAX,
    WHOLE_LINE,
    Interval,
    bivariate_rect_prob,
    bvn_upper,
    log_bivariate_rect_prob,
    log_rect_prob,
    rect_prob,
    std_normal_cdf,
    std_normal_quantile,
)

mp.mp.dps = 30


def mp_rect(a1, b1, a2, b2, rho):
    """Rectangle probability by 1-D quadrature of the conditional normal in mpmath."""
    s = mp.sqrt(1 - mp.mpf(rho) ** 2)
    rho = mp.mpf(rho)

    def f(u):
        return mp.npdf(u) * (mp.ncdf((b2 - rho * u) / s) - mp.ncdf((a2 - rho * u) / s))

    lo = mp.ninf if a1 == -math.inf else mp.mpf(a1)
    hi = mp.inf if b1 == math.inf else mp.mpf(b1)
    pts = [lo] + [mp.mpf(x) for x in (-1, 0, 1) if lo < x < hi] + [hi]
    return mp.quad(f, pts)


def orthant(rho):
    return 0.25 + math.asin(rho) / (2 * math.pi)


# frozen from mpmath ncdf at 30 digits
PHI_1 = 0.841344746068542948585232545632
Q_THIRD = -0.430727299295457473204350213


def test_cdf_examples():
    assert std_normal_cdf(0.0) == 0.5
    assert std_normal_cdf(math.inf) == 1.0
    assert std_normal_cdf(-math.inf) == 0.0
    assert std_normal_cdf(1.0) == pytest.approx(PHI_1, abs=1e-15)
    assert float(mp.ncdf(1)) == pytest.approx(PHI_1, abs=1e-15)


def test_quantile_examples():
    assert std_normal_quantile(0.5) == 0.0
    assert std_normal_quantile(1 / 3) == pytest.approx(Q_THIRD, abs=1e-12)
    assert std_normal_quantile(0.8413447) == pytest.approx(1.0, abs=1e-6)


def test_quantile_against_bisection():
    for p in (1e-6, 0.01, 1 / 3, 0.5, 0.7, 0.999):
        lo, hi = -10.0, 10.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if float(mp.ncdf(mid)) < p:
                lo = mid
            else:
                hi = mid
        assert std_normal_quantile(p) == pytest.approx(0.5 * (lo + hi), abs=1e-9)


@pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5, math.nan])
def test_quantile_rejects_outside_unit_interval(p):
    with pytest.raises(ValueError):
        std_normal_quantile(p)


def test_interval_validation():
    with pytest.raises(ValueError):
        Interval(1.0, 0.0)
    with pytest.raises(ValueError):
        Interval(math.nan, 1.0)
    assert WHOLE_LINE.is_whole_line
    assert 0.0 in Interval(0.0, 1.0) and 1.0 not in Interval(0.0, 1.0)


def test_rect_examples():
    neg = Interval(-math.inf, 0.0)
    assert bivariate_rect_prob(neg, neg, 0.0) == pytest.approx(0.25, abs=1e-15)
    assert bivariate_rect_prob(neg, neg, 0.5) == pytest.approx(1 / 3, abs=1e-12)
    assert float(mp_rect(-math.inf, 0, -math.inf, 0, 0.5)) == pytest.approx(1 / 3, abs=1e-12)
    i2 = Interval(-0.3, 1.2)
    for rho in (-0.9, 0.0, 0.4, 0.99):
        want = std_normal_cdf(1.2) - std_normal_cdf(-0.3)
        assert bivariate_rect_prob(WHOLE_LINE, i2, rho) == pytest.approx(want, abs=1e-12)


def test_log_rect_examples():
    neg = Interval(-math.inf, 0.0)
    assert log_bivariate_rect_prob(neg, neg, 0.0) == pytest.approx(-1.3862943611198906, abs=1e-14)
    assert log_bivariate_rect_prob(WHOLE_LINE, WHOLE_LINE, 0.3) == 0.0
    deep = Interval(-math.inf, -8.0)
    v = log_bivariate_rect_prob(deep, deep, -0.999)
    assert math.isfinite(v) and v >= LOG_FLOOR
    # extended precision: the true value underflows double precision, so the floor applies
    mp.mp.dps = 60
    try:
        exact = mp.log(mp_rect(-math.inf, -8, -math.inf, -8, -0.999))
    finally:
        mp.mp.dps = 30
    assert v == pytest.approx(max(float(exact), LOG_FLOOR), rel=1e-6)


def test_log_tail_without_floor():
    # far tails that still fit in a double must keep full relative accuracy
    v = log_rect_prob(-math.inf, -6.0, -math.inf, -6.0, 0.3)
    exact = float(mp.log(mp_rect(-math.inf, -6, -math.inf, -6, 0.3)))
    assert v == pytest.approx(exact, rel=1e-9)


def test_orthant_oracle_99_rhos():
    rhos = np.linspace(-0.99, 0.99, 99)
    got = rect_prob(-np.inf, 0.0, -np.inf, 0.0, rhos)
    want = np.array([orthant(r) for r in rhos])
    assert np.max(np.abs(got - want)) <= 1e-7


def test_orthant_monotone_in_rho():
    rhos = np.linspace(-0.98, 0.98, 50)
    p = rect_prob(-np.inf, 0.0, -np.inf, 0.0, rhos)
    assert np.all(np.diff(p) > 0)


def test_bvn_upper_against_quadrature():
    rng = np.random.default_rng(11)
    for _ in range(60):
        h, k = rng.uniform(-3, 3, 2)
        rho = rng.uniform(-0.999, 0.999)
        want = float(mp_rect(h, math.inf, k, math.inf, rho))
        assert bvn_upper(h, k, rho) == pytest.approx(want, abs=5e-15)


def test_rect_against_quadrature_all_branches():
    # one correlation in each quadrature regime, with finite and half-infinite sides
    cases = [(-0.5, 1.0, -1.0, 0.3), (-math.inf, 0.7, 0.2, 2.0), (0.1, math.inf, -math.inf, -0.4), (-2.0, -1.0, 1.0, 2.5)]
    for rho in (-0.95, -0.8, -0.5, -0.1, 0.2, 0.6, 0.9, 0.93, 0.999):
        for a1, b1, a2, b2 in cases:
            want = float(mp_rect(a1, b1, a2, b2, rho))
            assert rect_prob(a1, b1, a2, b2, rho) == pytest.approx(want, abs=1e-12)


def test_correlation_clamped():
    assert rect_prob(-np.inf, 0.0, -np.inf, 0.0, 1.0) == rect_prob(-np.inf, 0.0, -np.inf, 0.0, RHO_MAX)
    assert rect_prob(-np.inf, 0.0, -np.inf, 0.0, 1.0) == pytest.approx(0.5, abs=1e-3)


def test_broadcasting_shapes():
    out = rect_prob(np.zeros((3, 1)), np.ones((3, 1)), -np.inf, np.zeros(4), 0.2)
    assert out.shape == (3, 4)
    assert isinstance(rect_prob(0.0, 1.0, 0.0, 1.0, 0.1), float)


def _partition(cuts):
    edges = np.concatenate([[-np.inf], np.sort(cuts), [np.inf]])
    return edges[:-1], edges[1:]


cuts3 = st.lists(st.floats(-3, 3), min_size=3, max_size=3, unique=True)


@settings(max_examples=80, deadline=None)
@given(cuts3, cuts3, st.floats(-0.999, 0.999))
def test_partition_sums_to_one(c1, c2, rho):
    lo1, hi1 = _partition(c1)
    lo2, hi2 = _partition(c2)
    p = rect_prob(lo1[:, None], hi1[:, None], lo2[None, :], hi2[None, :], rho)
    assert np.all(p >= 0)
    assert abs(p.sum() - 1.0) <= 1e-6


@settings(max_examples=80, deadline=None)
@given(st.floats(-4, 4), st.floats(0, 3), st.floats(-1, 1))
def test_marginalization(a, width, rho):
    b = a + width
    got = rect_prob(-np.inf, np.inf, a, b, rho)
    assert abs(got - (std_normal_cdf(b) - std_normal_cdf(a))) <= 1e-9


@settings(max_examples=60, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-0.99, 0.99))
def test_symmetries(h, k, rho):
    assert bvn_upper(h, k, rho) == pytest.approx(bvn_upper(k, h, rho), abs=1e-14)
    # P(X>h, Y>k; rho) = P(X<-h, Y<-k; rho)
    assert bvn_upper(h, k, rho) == pytest.approx(rect_prob(-np.inf, -h, -np.inf, -k, rho), abs=1e-14)
