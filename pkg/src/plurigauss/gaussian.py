"""Univariate and bivariate standard normal probabilities.

The bivariate routine follows Genz's ``BVNU`` algorithm: the upper orthant
probability is written as a one-dimensional integral over the correlation and
evaluated by Gauss-Legendre quadrature whose order grows with ``|rho|``
(6, 12 or 20 nodes), with a separate asymptotic expansion for ``|rho| >= 0.925``.
Rectangle probabilities are assembled from upper-orthant terms after
reflecting each axis so that half-lines are always of the form ``(a, +inf)``;
this keeps tail probabilities free of cancellation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import ndtr, ndtri

RHO_EPS = 1e-6
RHO_MAX = 1.0 - RHO_EPS
LOG_FLOOR = -745.0

_TWO_PI = 2.0 * math.pi
_SQRT_TWO_PI = math.sqrt(_TWO_PI)
_INV_SQRT2 = 1.0 / math.sqrt(2.0)
_X6, _W6 = leggauss(6)
_X12, _W12 = leggauss(12)
_X20, _W20 = leggauss(20)


@dataclass(frozen=True)
class Interval:
    """Real interval ``[lower, upper)``; either end may be infinite."""

    lower: float = -math.inf
    upper: float = math.inf

    def __post_init__(self):
        lo, hi = float(self.lower), float(self.upper)
        if math.isnan(lo) or math.isnan(hi):
            raise ValueError("interval bounds must not be NaN")
        if not lo < hi:
            raise ValueError(f"interval lower bound {lo} must be < upper bound {hi}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def is_whole_line(self) -> bool:
        return self.lower == -math.inf and self.upper == math.inf

    def __contains__(self, value: float) -> bool:
        return self.lower <= value < self.upper


WHOLE_LINE = Interval()


def clamp_correlation(rho):
    """Clip correlations into ``[-1 + 1e-6, 1 - 1e-6]``."""
    return np.clip(rho, -RHO_MAX, RHO_MAX)


def std_normal_cdf(x):
    """Standard normal CDF; accepts scalars, arrays and infinities."""
    out = ndtr(np.asarray(x, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


def std_normal_quantile(p):
    """Inverse of :func:`std_normal_cdf` on the open unit interval."""
    arr = np.asarray(p, dtype=float)
    if np.any(~((arr > 0.0) & (arr < 1.0))):
        raise ValueError(f"quantile requires 0 < p < 1, got {p!r}")
    out = ndtri(arr)
    return float(out) if np.ndim(out) == 0 else out


@numba.njit(cache=True, nogil=True)
def _phi(x):
    return 0.5 * math.erfc(-x * _INV_SQRT2)


@numba.njit(cache=True, nogil=True)
def _node_table(r, wt, sn, inv):
    """Fill quadrature tables for ``|r| < 0.925``; returns ``(n_nodes, asin(r))``.

    The tables depend on the correlation only, so callers evaluating many
    bounds at one correlation build them once.
    """
    ar = abs(r)
    if ar >= 0.925:
        return 0, 0.0
    if ar < 0.3:
        xg, wg = _X6, _W6
    elif ar < 0.75:
        xg, wg = _X12, _W12
    else:
        xg, wg = _X20, _W20
    asr = math.asin(r)
    n = xg.shape[0]
    for i in range(n):
        s = math.sin(asr * (xg[i] + 1.0) * 0.5)
        sn[i] = s
        inv[i] = 1.0 / (1.0 - s * s)
        wt[i] = wg[i]
    return n, asr


@numba.njit(cache=True, nogil=True)
def _bvnu_high(h, k, r):
    if r < 0.0:
        k = -k
    hk = h * k
    as_ = (1.0 - r) * (1.0 + r)
    a = math.sqrt(as_)
    bs = (h - k) * (h - k)
    c = (4.0 - hk) / 8.0
    d = (12.0 - hk) / 16.0
    bvn = 0.0
    expo = -(bs / as_ + hk) / 2.0
    if expo > -100.0:
        bvn = a * math.exp(expo) * (1.0 - c * (bs - as_) * (1.0 - d * bs / 5.0) / 3.0 + c * d * as_ * as_ / 5.0)
    if -hk < 100.0:
        b = math.sqrt(bs)
        bvn -= math.exp(-hk / 2.0) * _SQRT_TWO_PI * _phi(-b / a) * b * (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0)
    a = a / 2.0
    for i in range(_X20.shape[0]):
        xs = (a * (_X20[i] + 1.0)) ** 2
        rs = math.sqrt(1.0 - xs)
        e2 = -(bs / xs + hk) / 2.0
        if e2 > -100.0:
            bvn += a * _W20[i] * math.exp(e2) * (
                math.exp(-hk * (1.0 - rs) / (2.0 * (1.0 + rs))) / rs - (1.0 + c * xs * (1.0 + d * xs))
            )
    bvn = -bvn / _TWO_PI
    if r > 0.0:
        return bvn + _phi(-max(h, k))
    # k holds the negated second bound here
    if h >= k:
        return -bvn
    if h < 0.0:
        return _phi(k) - _phi(h) - bvn
    return _phi(-h) - _phi(-k) - bvn


@numba.njit(cache=True, nogil=True)
def _bvnu_tab(h, k, r, sign, n, asr, wt, sn, inv):
    """P(U > h, V > k) with tables built for ``sign * r``; bounds may be infinite."""
    if h == math.inf or k == math.inf:
        return 0.0
    if h == -math.inf:
        if k == -math.inf:
            return 1.0
        return _phi(-k)
    if k == -math.inf:
        return _phi(-h)
    if n == 0:
        p = _bvnu_high(h, k, r)
    else:
        hk = h * k * sign
        hs = 0.5 * (h * h + k * k)
        acc = 0.0
        for i in range(n):
            acc += wt[i] * math.exp((sn[i] * hk - hs) * inv[i])
        p = acc * asr * sign / (2.0 * _TWO_PI) + _phi(-h) * _phi(-k)
    return min(max(p, 0.0), 1.0)


@numba.njit(cache=True, nogil=True)
def _rect_tab(lo1, hi1, lo2, hi2, r, n, asr, wt, sn, inv):
    """Rectangle probability; tables were built for correlation ``r``."""
    if lo2 == -math.inf and hi2 == math.inf:
        return _phi(hi1) - _phi(lo1)
    if lo1 == -math.inf and hi1 == math.inf:
        return _phi(hi2) - _phi(lo2)
    # reflect lower half-lines, and finite intervals centred below zero
    sign = 1.0
    if hi1 < math.inf and (lo1 == -math.inf or lo1 + hi1 < 0.0):
        lo1, hi1 = -hi1, -lo1
        sign = -sign
    if hi2 < math.inf and (lo2 == -math.inf or lo2 + hi2 < 0.0):
        lo2, hi2 = -hi2, -lo2
        sign = -sign
    rr = sign * r
    p = _bvnu_tab(lo1, lo2, rr, sign, n, asr, wt, sn, inv)
    if hi1 < math.inf:
        p -= _bvnu_tab(hi1, lo2, rr, sign, n, asr, wt, sn, inv)
    if hi2 < math.inf:
        p -= _bvnu_tab(lo1, hi2, rr, sign, n, asr, wt, sn, inv)
        if hi1 < math.inf:
            p += _bvnu_tab(hi1, hi2, rr, sign, n, asr, wt, sn, inv)
    return min(max(p, 0.0), 1.0)


@numba.njit(cache=True, nogil=True)
def _clamp(r):
    return min(max(r, -RHO_MAX), RHO_MAX)


@numba.njit(cache=True, nogil=True)
def _bvn_upper_vec(h, k, r, out):
    wt, sn, inv = np.empty(20), np.empty(20), np.empty(20)
    for i in range(h.shape[0]):
        ri = _clamp(r[i])
        n, asr = _node_table(ri, wt, sn, inv)
        out[i] = _bvnu_tab(h[i], k[i], ri, 1.0, n, asr, wt, sn, inv)


@numba.njit(cache=True, nogil=True)
def _rect_vec(lo1, hi1, lo2, hi2, r, out):
    wt, sn, inv = np.empty(20), np.empty(20), np.empty(20)
    for i in range(lo1.shape[0]):
        ri = _clamp(r[i])
        n, asr = _node_table(ri, wt, sn, inv)
        out[i] = _rect_tab(lo1[i], hi1[i], lo2[i], hi2[i], ri, n, asr, wt, sn, inv)


@numba.njit(cache=True, nogil=True)
def weighted_log_rect_sum(lo1, hi1, lo2, hi2, weight, group, rho, out):
    """Accumulate ``weight * log P`` per group, with ``rho`` indexed by group.

    Inner loop of the pairwise log-likelihood: ``out[g]`` receives the sum
    over entries ``i`` with ``group[i] == g``.  Quadrature tables are built
    once per group.
    """
    n_groups = rho.shape[0]
    wt = np.empty((n_groups, 20))
    sn = np.empty((n_groups, 20))
    inv = np.empty((n_groups, 20))
    nn = np.empty(n_groups, dtype=np.int64)
    asr = np.empty(n_groups)
    rc = np.empty(n_groups)
    for g in range(n_groups):
        rc[g] = _clamp(rho[g])
        nn[g], asr[g] = _node_table(rc[g], wt[g], sn[g], inv[g])
        out[g] = 0.0
    for i in range(lo1.shape[0]):
        g = group[i]
        p = _rect_tab(lo1[i], hi1[i], lo2[i], hi2[i], rc[g], nn[g], asr[g], wt[g], sn[g], inv[g])
        lp = math.log(p) if p > 0.0 else LOG_FLOOR
        if lp < LOG_FLOOR:
            lp = LOG_FLOOR
        out[g] += weight[i] * lp


@numba.njit(cache=True, nogil=True)
def prepare_rectangles(lo1, hi1, lo2, hi2):
    """Correlation-free part of many rectangle probabilities.

    Reflects each axis as :func:`rect_prob` does and tabulates
    ``Phi(-bound)`` once.  Whole-line axes are not supported here.
    Returns ``(bounds, phis, sign)`` with ``bounds`` and ``phis`` of shape
    ``(n, 4)`` ordered ``a1, b1, a2, b2``.
    """
    n = lo1.shape[0]
    bounds = np.empty((n, 4))
    phis = np.empty((n, 4))
    sign = np.empty(n)
    for i in range(n):
        a1, b1, a2, b2 = lo1[i], hi1[i], lo2[i], hi2[i]
        sg = 1.0
        if b1 < math.inf and (a1 == -math.inf or a1 + b1 < 0.0):
            a1, b1 = -b1, -a1
            sg = -sg
        if b2 < math.inf and (a2 == -math.inf or a2 + b2 < 0.0):
            a2, b2 = -b2, -a2
            sg = -sg
        bounds[i, 0], bounds[i, 1], bounds[i, 2], bounds[i, 3] = a1, b1, a2, b2
        for c in range(4):
            phis[i, c] = _phi(-bounds[i, c])
        sign[i] = sg
    return bounds, phis, sign


@numba.njit(cache=True, nogil=True)
def _corner(h, k, ph, pk, r, sign, n, asr, wt, sn, inv):
    if n == 0:
        return _bvnu_high(h, k, sign * r)
    hk = h * k * sign
    hs = 0.5 * (h * h + k * k)
    acc = 0.0
    for i in range(n):
        acc += wt[i] * math.exp((sn[i] * hk - hs) * inv[i])
    return acc * asr * sign / (2.0 * _TWO_PI) + ph * pk


@numba.njit(cache=True, nogil=True)
def weighted_log_prepared_sum(bounds, phis, sign, weight, group, rho, out):
    """:func:`weighted_log_rect_sum` on rectangles from :func:`prepare_rectangles`."""
    n_groups = rho.shape[0]
    wt = np.empty((n_groups, 20))
    sn = np.empty((n_groups, 20))
    inv = np.empty((n_groups, 20))
    nn = np.empty(n_groups, dtype=np.int64)
    asr = np.empty(n_groups)
    rc = np.empty(n_groups)
    for g in range(n_groups):
        rc[g] = _clamp(rho[g])
        nn[g], asr[g] = _node_table(rc[g], wt[g], sn[g], inv[g])
        out[g] = 0.0
    for i in range(bounds.shape[0]):
        g = group[i]
        a1, b1, a2, b2 = bounds[i, 0], bounds[i, 1], bounds[i, 2], bounds[i, 3]
        pa1, pb1, pa2, pb2 = phis[i, 0], phis[i, 1], phis[i, 2], phis[i, 3]
        sg, r, n = sign[i], rc[g], nn[g]
        p = min(max(_corner(a1, a2, pa1, pa2, r, sg, n, asr[g], wt[g], sn[g], inv[g]), 0.0), 1.0)
        if b1 < math.inf:
            p -= min(max(_corner(b1, a2, pb1, pa2, r, sg, n, asr[g], wt[g], sn[g], inv[g]), 0.0), 1.0)
        if b2 < math.inf:
            p -= min(max(_corner(a1, b2, pa1, pb2, r, sg, n, asr[g], wt[g], sn[g], inv[g]), 0.0), 1.0)
            if b1 < math.inf:
                p += min(max(_corner(b1, b2, pb1, pb2, r, sg, n, asr[g], wt[g], sn[g], inv[g]), 0.0), 1.0)
        lp = math.log(p) if p > 0.0 else LOG_FLOOR
        if lp < LOG_FLOOR:
            lp = LOG_FLOOR
        out[g] += weight[i] * lp


def _prep(*arrays):
    arrs = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in arrays))
    shape = arrs[0].shape
    return shape, [np.ascontiguousarray(a).ravel() for a in arrs]


def bvn_upper(h, k, rho):
    """Upper orthant probability ``P(U > h, V > k)`` for correlation ``rho``.

    ``h`` and ``k`` may contain infinities; arguments broadcast together.
    """
    shape, (h, k, r) = _prep(h, k, rho)
    out = np.empty(h.shape)
    _bvn_upper_vec(h, k, r, out)
    return out.reshape(shape) if shape else float(out[0])


def rect_prob(lo1, hi1, lo2, hi2, rho):
    """Vectorised ``P(U in [lo1, hi1), V in [lo2, hi2))`` under correlation ``rho``."""
    shape, (a, b, c, d, r) = _prep(lo1, hi1, lo2, hi2, rho)
    out = np.empty(a.shape)
    _rect_vec(a, b, c, d, r, out)
    return out.reshape(shape) if shape else float(out[0])


def log_rect_prob(lo1, hi1, lo2, hi2, rho):
    """Logarithm of :func:`rect_prob`, floored at ``-745`` instead of ``-inf``."""
    p = np.asarray(rect_prob(lo1, hi1, lo2, hi2, rho))
    with np.errstate(divide="ignore"):
        out = np.maximum(np.log(p), LOG_FLOOR)
    return out if out.ndim else float(out)


def bivariate_rect_prob(i1: Interval, i2: Interval, rho: float) -> float:
    """Probability that a standard bivariate normal pair lands in ``i1 x i2``."""
    return float(rect_prob(i1.lower, i1.upper, i2.lower, i2.upper, rho))


def log_bivariate_rect_prob(i1: Interval, i2: Interval, rho: float) -> float:
    p = bivariate_rect_prob(i1, i2, rho)
    return max(math.log(p), LOG_FLOOR) if p > 0.0 else LOG_FLOOR
