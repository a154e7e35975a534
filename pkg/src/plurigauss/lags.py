"""Grouping of site pairs by separation lag."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .random_fields import SiteSet

_BLOCK = 256


class LagSpecError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class LagSpec:
    """Lag classes ``|d - h_alpha| <= tolerance``.

    In ``directional`` mode a pair is also required to make an angle of at
    most ``angular_tolerance`` degrees with ``+direction`` or ``-direction``.
    ``tolerance=None`` means half the smallest spacing between centers.
    """

    centers: np.ndarray
    tolerance: float | None = None
    mode: str = "omnidirectional"
    direction: np.ndarray | None = None
    angular_tolerance: float = 22.5

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.centers, dtype=float))
        if c.ndim != 1 or c.size < 1:
            raise LagSpecError("centers: need at least one lag center")
        if np.any(c < 0) or not np.all(np.isfinite(c)):
            raise LagSpecError("centers: lag distances must be finite and non-negative")
        if np.any(np.diff(c) <= 0):
            raise LagSpecError("centers: lag centers must be strictly increasing")
        tol = self.tolerance
        if tol is None:
            if c.size < 2:
                raise LagSpecError("tolerance: required when only one lag center is given")
            tol = float(np.min(np.diff(c))) / 2.0
        tol = float(tol)
        if not tol > 0:
            raise LagSpecError(f"tolerance: must be positive, got {tol}")
        if c.size > 1 and np.any(np.diff(c) < 2.0 * tol * (1.0 - 1e-12)):
            raise LagSpecError(f"tolerance: windows of half-width {tol} overlap for centers {c.tolist()}")
        if self.mode not in ("omnidirectional", "directional"):
            raise LagSpecError(f"mode: unknown lag mode {self.mode!r}")
        d = None
        if self.mode == "directional":
            if self.direction is None:
                raise LagSpecError("direction: required in directional mode")
            d = np.asarray(self.direction, dtype=float)
            norm = np.linalg.norm(d)
            if not norm > 0:
                raise LagSpecError("direction: must be a non-zero vector")
            d = d / norm
            if not 0 < self.angular_tolerance <= 90:
                raise LagSpecError("angular_tolerance: must be in (0, 90] degrees")
        object.__setattr__(self, "centers", c)
        object.__setattr__(self, "tolerance", tol)
        object.__setattr__(self, "direction", d)

    @classmethod
    def regular(cls, n_lags: int, lag_width: float, tolerance: float | None = None, **kw) -> "LagSpec":
        """Centers ``lag_width * (1, ..., n_lags)``."""
        return cls(lag_width * np.arange(1, n_lags + 1), tolerance, **kw)

    @classmethod
    def from_dict(cls, cfg: dict) -> "LagSpec":
        if "centers" in cfg:
            centers = cfg["centers"]
        elif "n_lags" in cfg and "lag_width" in cfg:
            centers = float(cfg["lag_width"]) * np.arange(1, int(cfg["n_lags"]) + 1)
        else:
            raise LagSpecError("centers: give either 'centers' or 'n_lags' and 'lag_width'")
        return cls(
            centers,
            cfg.get("tolerance"),
            mode=cfg.get("mode", "omnidirectional"),
            direction=cfg.get("direction"),
            angular_tolerance=cfg.get("angular_tolerance", 22.5),
        )

    def to_dict(self) -> dict:
        out = {"mode": self.mode, "centers": self.centers.tolist(), "tolerance": self.tolerance}
        if self.mode == "directional":
            out["direction"] = self.direction.tolist()
            out["angular_tolerance"] = self.angular_tolerance
        return out

    @property
    def n_lags(self) -> int:
        return self.centers.size


@dataclass(frozen=True, eq=False)
class PairGroups:
    """Site pairs ``(i, j)``, ``i < j``, sorted by lag index then ``i``, ``j``."""

    centers: np.ndarray
    lag: np.ndarray
    i: np.ndarray
    j: np.ndarray
    counts: np.ndarray = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "counts", np.bincount(self.lag, minlength=self.centers.size))
        for a in (self.centers, self.lag, self.i, self.j, self.counts):
            a.setflags(write=False)

    @property
    def n_lags(self) -> int:
        return self.centers.size

    @property
    def offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.counts)])

    def pairs(self, alpha: int) -> np.ndarray:
        """``(N(h_alpha), 2)`` array of the site pairs in lag ``alpha``."""
        o = self.offsets
        sl = slice(o[alpha], o[alpha + 1])
        return np.column_stack([self.i[sl], self.j[sl]])


def _assign(dist, centers, tol):
    idx = np.searchsorted(centers, dist)
    lo = np.clip(idx - 1, 0, centers.size - 1)
    hi = np.clip(idx, 0, centers.size - 1)
    # ties go to the smaller lag
    pick = np.where(np.abs(dist - centers[hi]) < np.abs(dist - centers[lo]), hi, lo)
    ok = np.abs(dist - centers[pick]) <= tol
    return pick, ok


def build_pair_groups(sites: SiteSet, spec: LagSpec) -> PairGroups:
    """Assign each pair of sites to at most one lag class (O(n^2) scan)."""
    x = sites.coords
    n = sites.n
    if spec.mode == "directional" and spec.direction.size != sites.dim:
        raise LagSpecError(f"direction: has {spec.direction.size} components, sites are {sites.dim}-D")
    cos_tol = np.cos(np.deg2rad(spec.angular_tolerance))
    lags, ii, jj = [], [], []
    for start in range(0, n - 1, _BLOCK):
        stop = min(start + _BLOCK, n - 1)
        rows = np.arange(start, stop)
        diff = x[None, :, :] - x[rows, None, :]  # (block, n, d)
        dist = np.sqrt(np.einsum("bnd,bnd->bn", diff, diff))
        upper = np.arange(n)[None, :] > rows[:, None]
        pick, ok = _assign(dist, spec.centers, spec.tolerance)
        ok &= upper
        if spec.mode == "directional":
            proj = np.abs(diff @ spec.direction)
            with np.errstate(invalid="ignore", divide="ignore"):
                ok &= (dist == 0) | (proj / dist >= cos_tol - 1e-12)
        r, c = np.nonzero(ok)
        lags.append(pick[r, c])
        ii.append(rows[r])
        jj.append(c)
    if lags:
        lag = np.concatenate(lags).astype(np.int64)
        i = np.concatenate(ii).astype(np.int64)
        j = np.concatenate(jj).astype(np.int64)
    else:
        lag = i = j = np.zeros(0, dtype=np.int64)
    order = np.lexsort((j, i, lag))
    return PairGroups(spec.centers.copy(), lag[order], i[order], j[order])
