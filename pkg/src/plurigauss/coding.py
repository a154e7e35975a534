"""Truncation rules in cartesian-product form and the truncation operation.

A coding function assigns to each category ``k`` and GRF axis ``r`` a
half-open interval ``[lower, upper)``; category ``k`` occurs at a site when
every GRF value lies in its interval.  Bounds are stored as arrays of shape
``(m, K, q)`` with ``m == 1`` for a spatially constant rule and ``m == n``
when the thresholds vary from site to site.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .gaussian import Interval, std_normal_cdf, std_normal_quantile
from .random_fields import CovarianceModel, GRFRealization, ModelKind, SiteSet, simulate_independent_grfs


class CodingError(ValueError):
    """A coding function does not partition the GRF value space."""


@dataclass(frozen=True, eq=False)
class CodingFunction:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.array(self.lower, dtype=float)
        hi = np.array(self.upper, dtype=float)
        if lo.ndim == 2:
            lo, hi = lo[None], hi[None]
        if lo.ndim != 3 or lo.shape != hi.shape:
            raise CodingError(f"coding bounds must have shape (m, K, q), got {lo.shape} and {hi.shape}")
        if np.isnan(lo).any() or np.isnan(hi).any():
            raise CodingError("coding bounds contain NaN")
        if not np.all(lo < hi):
            raise CodingError("every coding interval needs lower < upper")
        for a in (lo, hi):
            a.setflags(write=False)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        _check_partition(lo, hi)

    @property
    def K(self) -> int:
        return self.lower.shape[1]

    @property
    def q(self) -> int:
        return self.lower.shape[2]

    @property
    def is_constant(self) -> bool:
        return self.lower.shape[0] == 1

    def check_sites(self, n: int):
        if not self.is_constant and self.lower.shape[0] != n:
            raise CodingError(f"coding defined on {self.lower.shape[0]} sites, field has {n}")

    def site_bounds(self, n: int):
        """Bounds broadcast to ``(n, K, q)``."""
        self.check_sites(n)
        shape = (n,) + self.lower.shape[1:]
        return np.broadcast_to(self.lower, shape), np.broadcast_to(self.upper, shape)

    def intervals(self, categories, r: int):
        """Per-site interval of axis ``r`` implied by observed ``categories``."""
        cats = np.asarray(categories)
        n = cats.shape[0]
        lo, hi = self.site_bounds(n)
        idx = np.arange(n)
        return lo[idx, cats, r], hi[idx, cats, r]

    def permuted(self, perm) -> "CodingFunction":
        """Relabel categories: old category ``k`` becomes ``perm[k]``."""
        perm = np.asarray(perm)
        inv = np.argsort(perm)
        return CodingFunction(self.lower[:, inv, :], self.upper[:, inv, :])

    @classmethod
    def sequential(cls, thresholds) -> "CodingFunction":
        """Single-GRF rule ``(-inf, s_1), [s_1, s_2), ..., [s_{K-1}, inf)``.

        ``thresholds`` has shape ``(K-1,)`` or ``(n, K-1)`` for site-varying
        thresholds.
        """
        s = np.atleast_1d(np.asarray(thresholds, dtype=float))
        if s.ndim == 1:
            s = s[None]
        m = s.shape[0]
        ninf = np.full((m, 1), -np.inf)
        pinf = np.full((m, 1), np.inf)
        lo = np.concatenate([ninf, s], axis=1)[:, :, None]
        hi = np.concatenate([s, pinf], axis=1)[:, :, None]
        return cls(lo, hi)

    @classmethod
    def flag2(cls, s1=0.0, t1=0.0) -> "CodingFunction":
        """Two-GRF rule: ``(-inf,s1) x R``, ``[s1,inf) x (-inf,t1)``, ``[s1,inf) x [t1,inf)``."""
        s1 = np.atleast_1d(np.asarray(s1, dtype=float))
        t1 = np.atleast_1d(np.asarray(t1, dtype=float))
        s1, t1 = np.broadcast_arrays(s1, t1)
        m = s1.shape[0]
        inf = np.full(m, np.inf)
        lo = np.stack(
            [np.stack([-inf, -inf], -1), np.stack([s1, -inf], -1), np.stack([s1, t1], -1)],
            axis=1,
        )
        hi = np.stack(
            [np.stack([s1, inf], -1), np.stack([inf, t1], -1), np.stack([inf, inf], -1)],
            axis=1,
        )
        return cls(lo, hi)


def _check_partition(lo, hi):
    """Every site profile must tile ``R^q`` with its K boxes exactly once."""
    m, K, q = lo.shape
    flat = np.concatenate([lo.reshape(m, -1), hi.reshape(m, -1)], axis=1)
    profiles = np.unique(flat, axis=0, return_index=True)[1]
    if q == 1:
        order = np.argsort(lo[profiles, :, 0], axis=1, kind="stable")
        slo = np.take_along_axis(lo[profiles, :, 0], order, axis=1)
        shi = np.take_along_axis(hi[profiles, :, 0], order, axis=1)
        ok = (slo[:, 0] == -np.inf) & (shi[:, -1] == np.inf) & np.all(shi[:, :-1] == slo[:, 1:], axis=1)
        if not ok.all():
            bad = int(profiles[np.argmin(ok)])
            raise CodingError(f"intervals at site profile {bad} do not tile the real line")
        return
    for p in profiles:
        axes = []
        for r in range(q):
            pts = np.unique(np.concatenate([lo[p, :, r], hi[p, :, r]]))
            pts = pts[np.isfinite(pts)]
            if pts.size == 0:
                axes.append(np.array([0.0]))
                continue
            mids = (pts[:-1] + pts[1:]) / 2.0
            axes.append(np.concatenate([[pts[0] - 1.0], pts, mids, [pts[-1] + 1.0]]))
        for point in itertools.product(*axes):
            y = np.asarray(point)
            inside = np.all((lo[p] <= y) & (y < hi[p]), axis=1)
            if inside.sum() != 1:
                raise CodingError(
                    f"point {tuple(point)} is covered by {int(inside.sum())} categories at site profile {int(p)}"
                )


@dataclass(frozen=True, eq=False)
class CategoricalField:
    """Category index in ``0..K-1`` for every site."""

    sites: SiteSet
    labels: np.ndarray
    K: int

    def __post_init__(self):
        lab = np.asarray(self.labels, dtype=np.int64)
        if lab.shape != (self.sites.n,):
            raise ValueError(f"expected {self.sites.n} labels, got shape {lab.shape}")
        if lab.size and (lab.min() < 0 or lab.max() >= self.K):
            raise ValueError(f"labels must lie in 0..{self.K - 1}")
        object.__setattr__(self, "labels", lab)

    def indicators(self) -> np.ndarray:
        return (self.labels[:, None] == np.arange(self.K)).astype(float)


def truncate(y: GRFRealization, coding: CodingFunction) -> CategoricalField:
    if y.q != coding.q:
        raise CodingError(f"coding has q={coding.q} axes but the realization has {y.q} GRFs")
    lo, hi = coding.site_bounds(y.sites.n)
    v = y.values[:, None, :]
    inside = np.all((lo <= v) & (v < hi), axis=2)
    hits = inside.sum(axis=1)
    if np.any(hits != 1):
        bad = int(np.argmax(hits != 1))
        raise CodingError(f"site {bad} falls in {int(hits[bad])} categories")
    return CategoricalField(y.sites, np.argmax(inside, axis=1), coding.K)


def interval_for_site(coding: CodingFunction, site: int, r: int, category: int) -> Interval:
    row = 0 if coding.is_constant else site
    return Interval(coding.lower[row, category, r], coding.upper[row, category, r])


@dataclass(frozen=True, eq=False)
class ProportionSpec:
    """Category proportions, shape ``(K,)`` or per site ``(n, K)``."""

    p: np.ndarray

    def __post_init__(self):
        p = np.atleast_1d(np.asarray(self.p, dtype=float))
        if np.any(~(p > 0.0)) or np.any(p >= 1.0):
            raise ValueError("proportions must lie strictly between 0 and 1")
        if np.any(np.abs(p.sum(axis=-1) - 1.0) > 1e-12):
            raise ValueError("proportions must sum to 1")
        object.__setattr__(self, "p", p)


def thresholds_from_proportions(p, rule: str = "sequential") -> CodingFunction:
    """Thresholds giving each category its target probability.

    ``sequential``: ``s_j = Phi^{-1}(p_1 + ... + p_j)``.
    ``flag2`` (K = 3): ``s_1 = Phi^{-1}(p_1)`` splits the first GRF and
    ``t_1 = Phi^{-1}(p_2 / (p_2 + p_3))`` splits the second one.
    """
    spec = p if isinstance(p, ProportionSpec) else ProportionSpec(p)
    prop = spec.p
    if rule == "sequential":
        cum = np.cumsum(prop, axis=-1)[..., :-1]
        return CodingFunction.sequential(std_normal_quantile(np.clip(cum, 1e-300, 1 - 1e-16)))
    if rule == "flag2":
        if prop.shape[-1] != 3:
            raise ValueError("flag2 rule needs exactly 3 proportions")
        s1 = std_normal_quantile(prop[..., 0])
        t1 = std_normal_quantile(prop[..., 1] / (prop[..., 1] + prop[..., 2]))
        return CodingFunction.flag2(s1, t1)
    raise ValueError(f"unknown rule {rule!r}")


def simulate_varying_thresholds(sites: SiteSet, seed: int, smoothness_range: float | None = 200.0) -> CodingFunction:
    """Slowly varying ordered thresholds for a three-category single-GRF rule.

    ``s1 = Phi^-1(0.2 + 0.3 Phi(Z1))`` and
    ``s2 = Phi^-1(Phi(s1) + 0.15 + 0.3 Phi(Z2))`` with ``Z1, Z2`` independent
    smooth GRFs (gaussian covariance).  Proportions then stay in
    ``p1 in (0.2, 0.5)``, ``p2 in (0.15, 0.45)``, ``p3 >= 0.05``.
    ``smoothness_range=None`` shares one draw of ``(Z1, Z2)`` by all sites.
    """
    if smoothness_range is None or np.isinf(smoothness_range):
        z = np.random.default_rng(seed).standard_normal((1, 2))
    else:
        model = CovarianceModel(ModelKind.GAUSSIAN, range=float(smoothness_range))
        z = simulate_independent_grfs(sites, [model, model], seed).values
    c1 = 0.2 + 0.3 * std_normal_cdf(z[:, 0])
    c2 = c1 + 0.15 + 0.3 * std_normal_cdf(z[:, 1])
    s = np.column_stack([std_normal_quantile(c1), std_normal_quantile(c2)])
    return CodingFunction.sequential(s)
