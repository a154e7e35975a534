"""Classical empirical variograms: category indicators and continuous values."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coding import CategoricalField
from .lags import PairGroups


@dataclass(frozen=True, eq=False)
class EmpiricalVariogram:
    """One variogram track; ``estimate`` is NaN where a lag is missing."""

    track: str
    lags: np.ndarray
    estimate: np.ndarray
    npairs: np.ndarray

    def __post_init__(self):
        lags = np.asarray(self.lags, dtype=float)
        est = np.asarray(self.estimate, dtype=float)
        n = np.asarray(self.npairs, dtype=np.int64)
        if not (lags.shape == est.shape == n.shape and lags.ndim == 1):
            raise ValueError(f"{self.track}: lags, estimate and npairs must be 1-D of equal length")
        object.__setattr__(self, "lags", lags)
        object.__setattr__(self, "estimate", est)
        object.__setattr__(self, "npairs", n)

    @property
    def missing(self) -> np.ndarray:
        return np.isnan(self.estimate)

    def valid(self):
        ok = ~self.missing
        return self.lags[ok], self.estimate[ok], self.npairs[ok]


@dataclass(frozen=True, eq=False)
class VariogramMatrix:
    """Simple and cross variograms of K indicators, ``values[k, l, alpha]``."""

    lags: np.ndarray
    values: np.ndarray
    npairs: np.ndarray
    prefix: str = "ind"

    @property
    def K(self) -> int:
        return self.values.shape[0]

    def __getitem__(self, kl) -> EmpiricalVariogram:
        k, l = kl
        return EmpiricalVariogram(f"{self.prefix}_{k + 1}_{l + 1}", self.lags, self.values[k, l], self.npairs)

    def tracks(self):
        return [self[k, l] for k in range(self.K) for l in range(self.K)]


def _per_lag_mean(groups: PairGroups, sq, counts):
    sums = np.bincount(groups.lag, weights=sq, minlength=groups.n_lags)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(counts > 0, sums / (2.0 * counts), np.nan)


def empirical_indicator_variograms(field: CategoricalField, groups: PairGroups) -> VariogramMatrix:
    """``(1 / 2N(h)) * sum (1_k(x_j) - 1_k(x_i)) (1_l(x_j) - 1_l(x_i))`` for all ``k, l``."""
    ind = field.indicators()
    d = ind[groups.j] - ind[groups.i]
    K = field.K
    out = np.empty((K, K, groups.n_lags))
    for k in range(K):
        for l in range(k, K):
            out[k, l] = out[l, k] = _per_lag_mean(groups, d[:, k] * d[:, l], groups.counts)
    return VariogramMatrix(groups.centers, out, groups.counts.copy())


def empirical_variogram_continuous(values, groups: PairGroups, mask=None, track: str = "gauss_1") -> EmpiricalVariogram:
    """Matheron estimator; pairs touching a masked-out site are dropped.

    ``mask`` is a boolean array, ``True`` for sites that are kept.
    """
    v = np.asarray(values, dtype=float)
    keep = np.ones(groups.lag.size, dtype=bool)
    if mask is not None:
        m = np.asarray(mask, dtype=bool)
        keep = m[groups.i] & m[groups.j]
    lag = groups.lag[keep]
    sq = (v[groups.j[keep]] - v[groups.i[keep]]) ** 2
    counts = np.bincount(lag, minlength=groups.n_lags)
    sums = np.bincount(lag, weights=sq, minlength=groups.n_lags)
    with np.errstate(invalid="ignore", divide="ignore"):
        est = np.where(counts > 0, sums / (2.0 * counts), np.nan)
    return EmpiricalVariogram(track, groups.centers, est, counts)
