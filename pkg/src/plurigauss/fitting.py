"""Weighted least-squares fit of a unit-sill model to an empirical variogram."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .random_fields import CovarianceModel, ModelKind
from .variography import EmpiricalVariogram

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


class InsufficientDataError(ValueError):
    pass


@dataclass(frozen=True)
class FitResult:
    model: CovarianceModel
    objective: float
    at_lower_bound: bool
    at_upper_bound: bool

    def to_dict(self) -> dict:
        return {
            "kind": self.model.kind.value,
            "range": self.model.range,
            "sill": self.model.sill,
            "objective": self.objective,
        }


def fit_objective(lags, gamma, weights, kind, a: float) -> float:
    model = CovarianceModel(kind, range=a)
    resid = gamma - (1.0 - model.correlation(lags))
    return float(np.sum(weights * resid**2))


def fit_unit_sill_model(
    v: EmpiricalVariogram, kind, n_scan: int = 41, rel_tol: float = 1e-10, max_iter: int = 200
) -> FitResult:
    """Fit ``gamma(h) = 1 - C_a(h)`` with weights ``N(h) / h``; only the range is free.

    The range is searched on ``[h_1 / 10, 10 h_last]``: a log-spaced scan
    brackets the best value, then golden-section search on ``log(range)``
    refines it.  Lags at zero distance or without estimate are ignored.
    """
    kind = ModelKind(kind)
    h, g, n = v.valid()
    ok = h > 0
    h, g, n = h[ok], g[ok], n[ok].astype(float)
    if h.size < 3:
        raise InsufficientDataError(f"need at least 3 non-missing lags to fit, got {h.size}")
    w = n / h
    lo, hi = math.log(h[0] / 10.0), math.log(10.0 * h[-1])

    def f(t):
        return fit_objective(h, g, w, kind, math.exp(t))

    grid = np.linspace(lo, hi, n_scan)
    vals = np.array([f(t) for t in grid])
    b = int(np.argmin(vals))
    best_t, best_f = grid[b], vals[b]
    a, c = grid[max(b - 1, 0)], grid[min(b + 1, n_scan - 1)]
    x1, x2 = c - INV_PHI * (c - a), a + INV_PHI * (c - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(max_iter):
        if c - a <= rel_tol:
            break
        if f1 <= f2:
            c, x2, f2 = x2, x1, f1
            x1 = c - INV_PHI * (c - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + INV_PHI * (c - a)
            f2 = f(x2)
    for t, ft in ((x1, f1), (x2, f2)):
        if ft < best_f:
            best_t, best_f = t, ft
    rng = math.exp(best_t)
    return FitResult(
        CovarianceModel(kind, range=rng),
        best_f,
        at_lower_bound=bool(best_t <= lo + 1e-9),
        at_upper_bound=bool(best_t >= hi - 1e-9),
    )
