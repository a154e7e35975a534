"""Per-lag pairwise-likelihood estimation of hidden GRF correlations.

For a cartesian coding and independent GRFs the pairwise log-likelihood of a
lag splits into one term per GRF, each depending on a single correlation
``rho_r(h)``.  Every (lag, GRF) cell is therefore a bounded one-dimensional
maximisation, solved here for all lags at once: each trial point of the
search is one pass of the compiled kernel over the pair classes of every lag.

Pairs are collapsed into classes of identical ``(interval_i, interval_j)``
with multiplicities, so a constant coding with K categories leaves at most
K**2 terms per lag whatever the number of pairs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .coding import CategoricalField, CodingFunction
from .gaussian import RHO_MAX, prepare_rectangles, weighted_log_prepared_sum, weighted_log_rect_sum
from .lags import PairGroups
from .variography import EmpiricalVariogram

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
QUANTUM = 1e-9
N_SCAN = 21
MAX_ITER = 60
RHO_TOL = 1e-4
BOUNDARY_BAND = 1e-3


class NoInformationError(ValueError):
    """No pair carries information on the correlation."""


class PLNumericalError(ArithmeticError):
    pass


@dataclass(frozen=True, eq=False)
class PairClasses:
    """Weighted interval pairs of one GRF axis, grouped by lag."""

    lo_i: np.ndarray
    hi_i: np.ndarray
    lo_j: np.ndarray
    hi_j: np.ndarray
    count: np.ndarray
    lag: np.ndarray
    n_lags: int

    def __post_init__(self):
        if np.any(_whole(self.lo_i, self.hi_i) | _whole(self.lo_j, self.hi_j)):
            raise ValueError("pair classes must not contain whole-line intervals")
        prep = prepare_rectangles(self.lo_i, self.hi_i, self.lo_j, self.hi_j)
        object.__setattr__(self, "_prepared", prep)

    @property
    def n_effective(self) -> np.ndarray:
        return np.bincount(self.lag, weights=self.count, minlength=self.n_lags).astype(np.int64)

    def objective(self, rho) -> np.ndarray:
        """Log pairwise likelihood of every lag at its own ``rho[lag]``."""
        rho = np.ascontiguousarray(np.broadcast_to(np.asarray(rho, dtype=float), (self.n_lags,)))
        out = np.empty(self.n_lags)
        bounds, phis, sign = self._prepared
        weighted_log_prepared_sum(bounds, phis, sign, self.count, self.lag, rho, out)
        if not np.all(np.isfinite(out)):
            bad = int(np.argmax(~np.isfinite(out)))
            raise PLNumericalError(f"non-finite log pairwise likelihood at lag index {bad}, rho={rho[bad]!r}")
        return out

    @classmethod
    def from_pairs(cls, pairs, lag=None, n_lags: int | None = None) -> "PairClasses":
        """Build from ``(Interval, Interval, count)`` triples, dropping whole-line pairs."""
        rows = [(a.lower, a.upper, b.lower, b.upper, c) for a, b, c in pairs]
        arr = np.array(rows, dtype=float).reshape(-1, 5)
        lag = np.zeros(arr.shape[0], dtype=np.int64) if lag is None else np.asarray(lag, dtype=np.int64)
        n_lags = 1 if n_lags is None else n_lags
        keep = ~(_whole(arr[:, 0], arr[:, 1]) | _whole(arr[:, 2], arr[:, 3])) & (arr[:, 4] > 0)
        a = arr[keep]
        return cls(*(np.ascontiguousarray(a[:, c]) for c in range(5)), np.ascontiguousarray(lag[keep]), n_lags)


def _whole(lo, hi):
    return (lo == -np.inf) & (hi == np.inf)


def _quantize(x):
    q = np.round(np.where(np.isfinite(x), x, 0.0) / QUANTUM).astype(np.int64)
    q = np.where(x == np.inf, np.iinfo(np.int64).max, q)
    return np.where(x == -np.inf, np.iinfo(np.int64).min, q)


def pair_classes(field: CategoricalField, coding: CodingFunction, groups: PairGroups, r: int) -> PairClasses:
    """Deduplicated interval pairs of GRF ``r`` for every lag.

    Intervals are keyed by their endpoints quantised to ``1e-9``; pairs in
    which either site leaves GRF ``r`` unconstrained (whole line) are dropped
    since their probability does not depend on the correlation.
    """
    lo, hi = coding.intervals(field.labels, r)
    keys = np.column_stack([_quantize(lo), _quantize(hi)])
    _, first, iid = np.unique(keys, axis=0, return_index=True, return_inverse=True)
    iid = iid.ravel()
    m = first.size
    informative = ~_whole(lo[first], hi[first])

    a, b = iid[groups.i], iid[groups.j]
    keep = informative[a] & informative[b]
    key = (groups.lag[keep] * m + a[keep]) * m + b[keep]
    ukey, counts = np.unique(key, return_counts=True)
    lag = ukey // (m * m)
    ca, cb = first[(ukey // m) % m], first[ukey % m]
    return PairClasses(lo[ca], hi[ca], lo[cb], hi[cb], counts.astype(float), lag.astype(np.int64), groups.n_lags)


def maximize_by_lag(classes: PairClasses, tol: float = RHO_TOL, max_iter: int = MAX_ITER):
    """Maximise each lag's objective over ``[-1 + 1e-6, 1 - 1e-6]``.

    A 21-point scan picks the bracketing triple, golden-section search
    narrows it to ``tol`` (at most ``max_iter`` steps) and a final parabolic
    step through the best three points is accepted only if it improves.
    The best point ever evaluated is returned, so the result is never worse
    than the scan value at ``rho = 0``.

    Returns ``(rho, value, converged)`` arrays of length ``n_lags``.
    """
    f = classes.objective
    grid = np.linspace(-RHO_MAX, RHO_MAX, N_SCAN)
    scan = np.stack([f(g) for g in grid])  # (N_SCAN, n_lags)
    best = np.argmax(scan, axis=0)
    cols = np.arange(classes.n_lags)
    best_x, best_f = grid[best], scan[best, cols]

    ia, ic = np.maximum(best - 1, 0), np.minimum(best + 1, N_SCAN - 1)
    a, c = grid[ia], grid[ic]
    fa, fc = scan[ia, cols], scan[ic, cols]
    x1 = c - INV_PHI * (c - a)
    x2 = a + INV_PHI * (c - a)
    f1, f2 = f(x1), f(x2)
    it = 0
    while np.any(c - a > tol) and it < max_iter:
        left = f1 >= f2  # maximum lies in [a, x2]
        c, fc = np.where(left, x2, c), np.where(left, f2, fc)
        a, fa = np.where(left, a, x1), np.where(left, fa, f1)
        keep_x, keep_f = np.where(left, x1, x2), np.where(left, f1, f2)
        xn = np.where(left, c - INV_PHI * (c - a), a + INV_PHI * (c - a))
        fn = f(xn)
        x1, f1 = np.where(left, xn, keep_x), np.where(left, fn, keep_f)
        x2, f2 = np.where(left, keep_x, xn), np.where(left, keep_f, fn)
        it += 1
    converged = c - a <= tol

    # parabolic step through the best interior point and its neighbours
    left = f1 >= f2
    p0, q0 = np.where(left, a, x1), np.where(left, fa, f1)
    p1, q1 = np.where(left, x1, x2), np.where(left, f1, f2)
    p2, q2 = np.where(left, x2, c), np.where(left, f2, fc)
    num = (p1 - p0) ** 2 * (q1 - q2) - (p1 - p2) ** 2 * (q1 - q0)
    den = (p1 - p0) * (q1 - q2) - (p1 - p2) * (q1 - q0)
    with np.errstate(invalid="ignore", divide="ignore"):
        xv = p1 - 0.5 * num / den
    ok = np.isfinite(xv) & (xv > p0) & (xv < p2)
    xv = np.where(ok, xv, p1)
    fv = f(xv)

    for x, fx in ((a, fa), (c, fc), (x1, f1), (x2, f2), (xv, fv)):
        better = fx > best_f
        best_x, best_f = np.where(better, x, best_x), np.where(better, fx, best_f)
    return best_x, best_f, converged


def pl_objective(pairs, rho: float) -> float:
    """Sum of ``count * log P(U in I_i, V in I_j; rho)`` over ``(I_i, I_j, count)``."""
    rows = [(a.lower, a.upper, b.lower, b.upper, c) for a, b, c in pairs]
    if not rows:
        return 0.0
    arr = np.array(rows, dtype=float)
    out = np.empty(1)
    weighted_log_rect_sum(
        *(np.ascontiguousarray(arr[:, k]) for k in range(5)),
        np.zeros(arr.shape[0], dtype=np.int64),
        np.array([float(rho)]),
        out,
    )
    return float(out[0])


def estimate_lag_correlation(pairs, tol: float = RHO_TOL):
    """Maximum pairwise-likelihood correlation for one lag.

    ``pairs`` holds ``(Interval, Interval, count)`` triples.  Returns
    ``(rho_hat, logpl, converged)``.
    """
    classes = PairClasses.from_pairs(pairs)
    if classes.count.sum() == 0:
        raise NoInformationError("no pair constrains both sites on this axis")
    x, fx, conv = maximize_by_lag(classes, tol=tol)
    return float(x[0]), float(fx[0]), bool(conv[0])


@dataclass(frozen=True)
class PLLagResult:
    lag: float
    grf: int
    rho_hat: float
    gamma_hat: float
    logpl: float
    n_effective: int
    converged: bool
    boundary: bool


@dataclass(frozen=True, eq=False)
class PLResult:
    """Estimates for all lags (rows) and GRFs (columns); NaN marks missing lags."""

    lags: np.ndarray
    rho: np.ndarray
    logpl: np.ndarray
    n_effective: np.ndarray
    converged: np.ndarray

    @property
    def gamma(self) -> np.ndarray:
        return 1.0 - self.rho

    @property
    def boundary(self) -> np.ndarray:
        return np.abs(self.rho) >= RHO_MAX - BOUNDARY_BAND

    @property
    def q(self) -> int:
        return self.rho.shape[1]

    def variogram(self, r: int) -> EmpiricalVariogram:
        return EmpiricalVariogram(f"grf_{r + 1}", self.lags, self.gamma[:, r], self.n_effective[:, r])

    def lag_results(self) -> list[PLLagResult]:
        out = []
        for a, h in enumerate(self.lags):
            for r in range(self.q):
                out.append(
                    PLLagResult(
                        float(h),
                        r,
                        float(self.rho[a, r]),
                        float(self.gamma[a, r]),
                        float(self.logpl[a, r]),
                        int(self.n_effective[a, r]),
                        bool(self.converged[a, r]),
                        bool(self.boundary[a, r]),
                    )
                )
        return out


def empirical_underlying_variogram(
    field: CategoricalField, coding: CodingFunction, groups: PairGroups, tol: float = RHO_TOL
) -> PLResult:
    """Pairwise-likelihood variogram ``1 - rho_r(h)`` of every hidden GRF."""
    if field.K != coding.K:
        raise ValueError(f"field has {field.K} categories, coding has {coding.K}")
    coding.check_sites(field.sites.n)
    nl, q = groups.n_lags, coding.q
    rho = np.full((nl, q), np.nan)
    logpl = np.full((nl, q), np.nan)
    neff = np.zeros((nl, q), dtype=np.int64)
    conv = np.zeros((nl, q), dtype=bool)
    for r in range(q):
        classes = pair_classes(field, coding, groups, r)
        neff[:, r] = classes.n_effective
        x, fx, cv = maximize_by_lag(classes, tol=tol)
        has = neff[:, r] > 0
        rho[has, r], logpl[has, r], conv[has, r] = x[has], fx[has], cv[has]
    return PLResult(groups.centers, rho, logpl, neff, conv)
