"""Stationary covariance models and unconditional Gaussian simulation."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.linalg import LinAlgError, cholesky
from scipy.spatial.distance import cdist

JITTER = 1e-10


class ModelKind(str, Enum):
    EXPONENTIAL = "exponential"
    GAUSSIAN = "gaussian"
    SPHERICAL = "spherical"
    NUGGET = "nugget"


@dataclass(frozen=True)
class CovarianceModel:
    """Isotropic covariance ``sill * rho(h / range)``.

    ``exponential`` is ``exp(-h/a)`` and ``gaussian`` is ``exp(-(h/a)^2)``,
    i.e. ``range`` is the scale parameter, not a practical range.
    """

    kind: ModelKind
    range: float = 1.0
    sill: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", ModelKind(self.kind))
        if not (self.range > 0 and math.isfinite(self.range)):
            raise ValueError(f"range must be positive and finite, got {self.range}")
        if not (self.sill > 0 and math.isfinite(self.sill)):
            raise ValueError(f"sill must be positive and finite, got {self.sill}")

    def correlation(self, h):
        h = np.asarray(h, dtype=float)
        if np.any(h < 0):
            raise ValueError("covariance lag must be non-negative")
        s = h / self.range
        if self.kind is ModelKind.EXPONENTIAL:
            out = np.exp(-s)
        elif self.kind is ModelKind.GAUSSIAN:
            out = np.exp(-(s**2))
        elif self.kind is ModelKind.SPHERICAL:
            out = np.where(s < 1.0, 1.0 - 1.5 * s + 0.5 * s**3, 0.0)
        else:
            out = np.where(h == 0.0, 1.0, 0.0)
        return out

    def __call__(self, h):
        return self.sill * self.correlation(h)


def covariance_eval(model: CovarianceModel, h):
    """Covariance of ``model`` at lag distance(s) ``h``."""
    out = model(h)
    return float(out) if np.ndim(out) == 0 else out


# The two models of the simulation studies.
C1 = CovarianceModel(ModelKind.EXPONENTIAL, range=20.0)
C2 = CovarianceModel(ModelKind.GAUSSIAN, range=40.0)


@dataclass(frozen=True, eq=False)
class SiteSet:
    """``n`` sample locations in ``R^d`` stored as an ``(n, d)`` array."""

    coords: np.ndarray

    def __post_init__(self):
        c = np.array(self.coords, dtype=float)
        if c.ndim == 1:
            c = c[:, None]
        if c.ndim != 2 or c.shape[0] < 1:
            raise ValueError("site coordinates must be a non-empty (n, d) array")
        if not np.all(np.isfinite(c)):
            raise ValueError("site coordinates must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def dim(self) -> int:
        return self.coords.shape[1]

    def __len__(self):
        return self.n

    @classmethod
    def grid_1d(cls, n: int, mesh: float = 1.0, origin: float = 0.0) -> "SiteSet":
        return cls(origin + mesh * np.arange(n, dtype=float))

    @classmethod
    def uniform_square(cls, n: int, side: float, seed: int) -> "SiteSet":
        rng = np.random.default_rng(seed)
        return cls(rng.uniform(0.0, side, size=(n, 2)))


@dataclass(frozen=True, eq=False)
class GRFRealization:
    sites: SiteSet
    values: np.ndarray  # (n, q)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.shape[0] != self.sites.n:
            raise ValueError(f"expected {self.sites.n} rows of GRF values, got {v.shape[0]}")
        object.__setattr__(self, "values", v)

    @property
    def q(self) -> int:
        return self.values.shape[1]


def derive_seed(seed: int, *keys: int) -> int:
    """Child seed of ``seed`` addressed by the integer path ``keys``.

    Uses numpy's ``SeedSequence`` spawn keys, a counter-based splitting
    scheme: the stream for ``(seed, k1, k2, ...)`` is fixed and statistically
    independent of every other path.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, np.uint64)[0])


class GRFSampler:
    """Cholesky factor of a site covariance matrix, reusable across draws.

    Coincident sites share one factor row, so they receive identical values.
    A ``1e-10`` jitter is added to the diagonal only if the plain
    factorisation fails.
    """

    def __init__(self, sites: SiteSet, model: CovarianceModel):
        self.sites = sites
        self.model = model
        uniq, inv = np.unique(sites.coords, axis=0, return_inverse=True)
        inv = inv.ravel()
        self._index = None if np.array_equal(inv, np.arange(sites.n)) else inv
        cov = model(cdist(uniq, uniq))
        try:
            self.factor = cholesky(cov, lower=True, check_finite=False)
            self.jitter = 0.0
        except LinAlgError:
            cov[np.diag_indices_from(cov)] += JITTER * model.sill
            try:
                self.factor = cholesky(cov, lower=True, check_finite=False)
            except LinAlgError as exc:
                raise np.linalg.LinAlgError(
                    f"covariance of {uniq.shape[0]} distinct sites under {model} is not positive definite "
                    f"even with diagonal jitter {JITTER}"
                ) from exc
            self.jitter = JITTER

    def draw(self, seed: int) -> np.ndarray:
        z = np.random.default_rng(seed).standard_normal(self.factor.shape[0])
        y = self.factor @ z
        return y if self._index is None else y[self._index]


def simulate_grf(sites: SiteSet, model: CovarianceModel, seed: int) -> GRFRealization:
    return GRFRealization(sites, GRFSampler(sites, model).draw(seed))


def simulate_independent_grfs(sites: SiteSet, models, seed: int, samplers=None) -> GRFRealization:
    """Draw ``q = len(models)`` mutually independent GRFs.

    Column ``r`` is ``simulate_grf(sites, models[r], derive_seed(seed, r))``.
    Pre-built ``samplers`` (one per model) avoid refactorising.
    """
    if samplers is None:
        samplers = [GRFSampler(sites, m) for m in models]
    cols = [s.draw(derive_seed(seed, r)) for r, s in enumerate(samplers)]
    return GRFRealization(sites, np.column_stack(cols))
