"""Theoretical indicator variograms implied by GRF correlations and a coding.

With independent GRFs and a cartesian coding, every joint indicator
expectation factorises into one bivariate rectangle probability per GRF, so
no ``2q``-dimensional integration is ever needed.
"""

from __future__ import annotations

import numpy as np

from .coding import CodingFunction
from .gaussian import rect_prob, std_normal_cdf
from .lags import PairGroups
from .variography import VariogramMatrix


def _row(coding: CodingFunction, site: int) -> int:
    return 0 if coding.is_constant else site


def indicator_expectation(coding: CodingFunction, site: int, k: int) -> float:
    row = _row(coding, site)
    lo, hi = coding.lower[row, k], coding.upper[row, k]
    return float(np.prod(std_normal_cdf(hi) - std_normal_cdf(lo)))


def joint_indicator_expectation(coding: CodingFunction, x: int, x_prime: int, k: int, l: int, rho) -> float:
    """``E[1_k(x) 1_l(x')]`` for per-GRF correlations ``rho`` between the two sites."""
    a, b = _row(coding, x), _row(coding, x_prime)
    rho = np.broadcast_to(np.asarray(rho, dtype=float), (coding.q,))
    p = rect_prob(coding.lower[a, k], coding.upper[a, k], coding.lower[b, l], coding.upper[b, l], rho)
    return float(np.prod(p))


def indicator_variogram_between_points(coding: CodingFunction, x: int, x_prime: int, k: int, l: int, rho) -> float:
    if k == l:
        e = indicator_expectation(coding, x, k) + indicator_expectation(coding, x_prime, k)
        return e / 2.0 - joint_indicator_expectation(coding, x, x_prime, k, k, rho)
    return -(
        joint_indicator_expectation(coding, x_prime, x, k, l, rho)
        + joint_indicator_expectation(coding, x_prime, x, l, k, rho)
    ) / 2.0


def _profile_ids(coding: CodingFunction, n: int):
    """Site -> profile id, and one coding row representing each profile."""
    if coding.is_constant:
        return np.zeros(n, dtype=np.int64), np.zeros(1, dtype=np.int64)
    m = coding.lower.shape[0]
    flat = np.concatenate([coding.lower.reshape(m, -1), coding.upper.reshape(m, -1)], axis=1)
    _, first, inv = np.unique(flat, axis=0, return_index=True, return_inverse=True)
    return inv.ravel().astype(np.int64), first.astype(np.int64)


def _class_variograms(coding: CodingFunction, rows_i, rows_j, rho):
    """``(C, K, K)`` point-pair variograms for site-profile rows ``(i, j)``.

    ``rho`` has shape ``(C, q)``.
    """
    lo, hi = coding.lower, coding.upper
    # E[1_k(x_i) 1_l(x_j)] for all k, l: broadcast (C, K, 1, q) against (C, 1, K, q)
    p = rect_prob(
        lo[rows_i][:, :, None, :],
        hi[rows_i][:, :, None, :],
        lo[rows_j][:, None, :, :],
        hi[rows_j][:, None, :, :],
        rho[:, None, None, :],
    )
    joint = p.prod(axis=-1)
    ei = (std_normal_cdf(hi[rows_i]) - std_normal_cdf(lo[rows_i])).prod(axis=-1)
    ej = (std_normal_cdf(hi[rows_j]) - std_normal_cdf(lo[rows_j])).prod(axis=-1)
    gam = -(joint + np.swapaxes(joint, 1, 2)) / 2.0
    K = lo.shape[1]
    diag = np.arange(K)
    gam[:, diag, diag] = (ei + ej) / 2.0 - joint[:, diag, diag]
    return gam


def averaged_indicator_variogram(coding: CodingFunction, rho, groups: PairGroups, n_sites: int | None = None) -> VariogramMatrix:
    """Lag averages of the point-pair indicator variograms.

    ``rho`` has shape ``(n_lags, q)`` (or ``(n_lags,)`` when ``q == 1``);
    NaN correlations give NaN outputs at that lag.
    """
    rho = np.asarray(rho, dtype=float)
    if rho.ndim == 1:
        rho = rho[:, None]
    if rho.shape != (groups.n_lags, coding.q):
        raise ValueError(f"rho must have shape ({groups.n_lags}, {coding.q}), got {rho.shape}")
    if n_sites is None:
        n_sites = int(max(groups.i.max(initial=-1), groups.j.max(initial=-1)) + 1)
        if not coding.is_constant:
            n_sites = coding.lower.shape[0]
    coding.check_sites(n_sites)
    pid, rep = _profile_ids(coding, n_sites)
    n_prof = rep.size
    key = (groups.lag * n_prof + pid[groups.i]) * n_prof + pid[groups.j]
    ukey, counts = np.unique(key, return_counts=True)
    lag = ukey // (n_prof * n_prof)
    pi = (ukey // n_prof) % n_prof
    pj = ukey % n_prof

    K = coding.K
    out = np.full((K, K, groups.n_lags), np.nan)
    r = rho[lag]
    good = np.all(np.isfinite(r), axis=1)
    if good.any():
        gam = _class_variograms(coding, rep[pi[good]], rep[pj[good]], r[good])
        w = counts[good].astype(float)
        lg = lag[good]
        tot = np.bincount(lg, weights=w, minlength=groups.n_lags)
        for k in range(K):
            for l in range(K):
                s = np.bincount(lg, weights=w * gam[:, k, l], minlength=groups.n_lags)
                with np.errstate(invalid="ignore", divide="ignore"):
                    out[k, l] = np.where(tot > 0, s / tot, np.nan)
    return VariogramMatrix(groups.centers, out, groups.counts.copy(), prefix="model_ind")
