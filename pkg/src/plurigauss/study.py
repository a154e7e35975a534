"""Monte-Carlo studies comparing PL variograms from categories with classical
variograms computed on the hidden Gaussian values.

Two layouts are provided:

* ``mono-*``: one GRF (C1 or C2) on a regular 1-D grid, three categories
  with constant 1/3 proportions or with site-varying thresholds drawn once
  for the whole study;
* ``bigaussian``: two independent GRFs (C1, C2) at uniformly scattered 2-D
  sites drawn once, truncated by the two-GRF flag rule ``s1 = t1 = 0``.  The
  classical variogram of the second GRF uses only sites with ``y1 > 0``.

The scattered sites fill a square of side 200 (not the unit square): with
lags up to 150 and covariance scales 20 and 40, a unit square would put
every pair below distance 1.5.
"""

from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .coding import CodingFunction, simulate_varying_thresholds, thresholds_from_proportions, truncate
from .lags import LagSpec, build_pair_groups
from .pl import empirical_underlying_variogram
from .random_fields import (
    C1,
    C2,
    GRFRealization,
    GRFSampler,
    SiteSet,
    derive_seed,
    simulate_independent_grfs,
)
from .variography import empirical_variogram_continuous

STUDY_KINDS = ("mono-c1-constant", "mono-c1-varying", "mono-c2-constant", "mono-c2-varying", "bigaussian")
ESTIMATORS = ("pl", "gauss")
PERCENTILES = (5, 25, 75, 95)
THREADS_ENV = "PLURIGAUSS_THREADS"

# seed-tree branches under the master seed
_SIM_BRANCH, _LAYOUT_BRANCH = 0, 1


class StudyConfigError(ValueError):
    pass


@dataclass
class StudyConfig:
    kind: str = "mono-c1-constant"
    n_sims: int = 200
    n_sites: int | None = None  # 2000 grid nodes (mono) or 800 scattered sites
    mesh: float = 1.0
    side: float = 200.0
    lags: dict | None = None
    seed: int = 0
    varying_range: float = 200.0
    out_dir: str | None = None

    def __post_init__(self):
        if self.kind not in STUDY_KINDS:
            raise StudyConfigError(f"kind: expected one of {STUDY_KINDS}, got {self.kind!r}")
        if int(self.n_sims) < 1:
            raise StudyConfigError(f"n_sims: must be >= 1, got {self.n_sims}")
        if self.n_sites is None:
            self.n_sites = 800 if self.is_bigaussian else 2000
        if int(self.n_sites) < 2:
            raise StudyConfigError(f"n_sites: need at least 2 sites, got {self.n_sites}")
        if self.mesh <= 0 or self.side <= 0:
            raise StudyConfigError("mesh/side: must be positive")
        if self.lags is None:
            self.lags = (
                {"n_lags": 30, "lag_width": 5.0, "tolerance": 2.5}
                if self.is_bigaussian
                else {"n_lags": 150, "lag_width": 1.0, "tolerance": 0.5}
            )

    @property
    def is_bigaussian(self) -> bool:
        return self.kind == "bigaussian"

    @property
    def model(self):
        return C2 if "-c2-" in self.kind else C1

    @property
    def varying(self) -> bool:
        return self.kind.endswith("-varying")

    def lag_spec(self) -> LagSpec:
        return LagSpec.from_dict(self.lags)

    @classmethod
    def from_dict(cls, d: dict) -> "StudyConfig":
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise StudyConfigError(f"{sorted(extra)[0]}: unknown study config field")
        return cls(**d)


@dataclass
class StudySummary:
    """Per-simulation estimates, shape ``(n_sims, n_lags, q)`` per estimator."""

    config: StudyConfig
    lags: np.ndarray
    truth: np.ndarray
    samples: dict = field(default_factory=dict)
    npairs: dict = field(default_factory=dict)

    @property
    def q(self) -> int:
        return self.truth.shape[1]

    def mean(self, estimator: str) -> np.ndarray:
        s = self.samples[estimator]
        out = np.full(s.shape[1:], np.nan)
        ok = np.any(np.isfinite(s), axis=0)
        out[ok] = np.nanmean(s[:, ok], axis=0)
        return out

    def percentile(self, estimator: str, p: float) -> np.ndarray:
        return nearest_rank(self.samples[estimator], p)

    def n_missing(self, estimator: str) -> np.ndarray:
        return np.isnan(self.samples[estimator]).sum(axis=0)

    def band_width(self, estimator: str, lo: float = 5, hi: float = 95) -> np.ndarray:
        return self.percentile(estimator, hi) - self.percentile(estimator, lo)

    def rows(self):
        for est in ESTIMATORS:
            if est not in self.samples:
                continue
            mean = self.mean(est)
            pct = {p: self.percentile(est, p) for p in PERCENTILES}
            miss = self.n_missing(est)
            for r in range(self.q):
                for a, h in enumerate(self.lags):
                    yield {
                        "lag": float(h),
                        "grf": r + 1,
                        "estimator": est,
                        "mean": mean[a, r],
                        "p5": pct[5][a, r],
                        "p25": pct[25][a, r],
                        "p75": pct[75][a, r],
                        "p95": pct[95][a, r],
                        "truth": self.truth[a, r],
                        "n_missing": int(miss[a, r]),
                    }

    def write(self, out_dir) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        cols = ["lag", "grf", "estimator", "mean", "p5", "p25", "p75", "p95", "truth", "n_missing"]
        with open(out / "summary.csv", "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=cols)
            w.writeheader()
            for row in self.rows():
                w.writerow({k: (repr(float(v)) if isinstance(v, (float, np.floating)) else v) for k, v in row.items()})
        with open(out / "config.json", "w") as fh:
            json.dump(asdict(self.config), fh, indent=2)
        np.savez_compressed(
            out / "samples.npz",
            lags=self.lags,
            truth=self.truth,
            **{f"{k}_gamma": v for k, v in self.samples.items()},
            **{f"{k}_npairs": v for k, v in self.npairs.items()},
        )
        return out / "summary.csv"


def nearest_rank(samples: np.ndarray, p: float) -> np.ndarray:
    """Nearest-rank percentile along axis 0, ignoring NaN.

    The ``p``-th percentile of ``m`` values is the ``ceil(p m / 100)``-th
    smallest (the smallest for ``p = 0``).
    """
    s = np.sort(samples, axis=0)  # NaN sort last
    m = np.sum(~np.isnan(samples), axis=0)
    rank = np.clip(np.ceil(p / 100.0 * m).astype(np.int64) - 1, 0, None)
    out = np.take_along_axis(s, np.minimum(rank, s.shape[0] - 1)[None], axis=0)[0]
    return np.where(m > 0, out, np.nan)


def thread_count(threads: int | None = None) -> int:
    if threads is not None:
        return max(1, int(threads))
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError as exc:
        raise StudyConfigError(f"{THREADS_ENV}: expected an integer, got {raw!r}") from exc


def _run(cfg: StudyConfig, worker, threads):
    n = int(cfg.n_sims)
    nt = thread_count(threads)
    if nt == 1:
        results = [worker(s) for s in range(n)]
    else:
        with ThreadPoolExecutor(max_workers=nt) as pool:
            results = list(pool.map(worker, range(n)))  # ordered by simulation index
    return [np.stack([res[k] for res in results]) for k in range(4)]


def run_mono_study(cfg: StudyConfig, threads: int | None = None) -> StudySummary:
    if cfg.is_bigaussian:
        raise StudyConfigError("kind: run_mono_study needs a mono-* study kind")
    sites = SiteSet.grid_1d(int(cfg.n_sites), cfg.mesh)
    groups = build_pair_groups(sites, cfg.lag_spec())
    sampler = GRFSampler(sites, cfg.model)
    if cfg.varying:
        # drawn once, shared by every simulation
        coding = simulate_varying_thresholds(sites, derive_seed(cfg.seed, _LAYOUT_BRANCH), cfg.varying_range)
    else:
        coding = thresholds_from_proportions([1 / 3, 1 / 3, 1 / 3])

    def worker(s):
        y = GRFRealization(sites, sampler.draw(derive_seed(cfg.seed, _SIM_BRANCH, s)))
        pl = empirical_underlying_variogram(truncate(y, coding), coding, groups)
        g = empirical_variogram_continuous(y.values[:, 0], groups)
        return pl.gamma, pl.n_effective, g.estimate[:, None], g.npairs[:, None]

    pl_g, pl_n, ga_g, ga_n = _run(cfg, worker, threads)
    truth = (1.0 - cfg.model.correlation(groups.centers))[:, None]
    return StudySummary(cfg, groups.centers, truth, {"pl": pl_g, "gauss": ga_g}, {"pl": pl_n, "gauss": ga_n})


def run_bigaussian_study(cfg: StudyConfig, threads: int | None = None) -> StudySummary:
    if not cfg.is_bigaussian:
        raise StudyConfigError("kind: run_bigaussian_study needs kind 'bigaussian'")
    sites = SiteSet.uniform_square(int(cfg.n_sites), cfg.side, derive_seed(cfg.seed, _LAYOUT_BRANCH))
    groups = build_pair_groups(sites, cfg.lag_spec())
    models = [C1, C2]
    samplers = [GRFSampler(sites, m) for m in models]
    coding = CodingFunction.flag2(0.0, 0.0)

    def worker(s):
        y = simulate_independent_grfs(sites, models, derive_seed(cfg.seed, _SIM_BRANCH, s), samplers)
        pl = empirical_underlying_variogram(truncate(y, coding), coding, groups)
        g1 = empirical_variogram_continuous(y.values[:, 0], groups, track="gauss_1")
        g2 = empirical_variogram_continuous(y.values[:, 1], groups, mask=y.values[:, 0] > 0, track="gauss_2")
        est = np.column_stack([g1.estimate, g2.estimate])
        cnt = np.column_stack([g1.npairs, g2.npairs])
        return pl.gamma, pl.n_effective, est, cnt

    pl_g, pl_n, ga_g, ga_n = _run(cfg, worker, threads)
    truth = np.column_stack([1.0 - m.correlation(groups.centers) for m in models])
    return StudySummary(cfg, groups.centers, truth, {"pl": pl_g, "gauss": ga_g}, {"pl": pl_n, "gauss": ga_n})


def run_study(cfg: StudyConfig, threads: int | None = None) -> StudySummary:
    summary = run_bigaussian_study(cfg, threads) if cfg.is_bigaussian else run_mono_study(cfg, threads)
    if cfg.out_dir:
        summary.write(cfg.out_dir)
    return summary
