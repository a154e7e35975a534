import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from plurigauss.coding import CategoricalField, CodingFunction, thresholds_from_proportions, truncate
from plurigauss.forward import joint_indicator_expectation
from plurigauss.gaussian import RHO_MAX, WHOLE_LINE, Interval
from plurigauss.lags import LagSpec, build_pair_groups
from plurigauss.pl import (
    NoInformationError,
    PairClasses,
    empirical_underlying_variogram,
    estimate_lag_correlation,
    maximize_by_lag,
    pair_classes,
    pl_objective,
)
from plurigauss.random_fields import (
    C1,
    CovarianceModel,
    GRFRealization,
    GRFSampler,
    SiteSet,
    derive_seed,
    simulate_independent_grfs,
)

NEG = Interval(-math.inf, 0.0)
POS = Interval(0.0, math.inf)
THIRDS = thresholds_from_proportions([1 / 3, 1 / 3, 1 / 3])


def thirds_intervals():
    s = THIRDS.upper[0, :2, 0]
    return [Interval(-math.inf, s[0]), Interval(s[0], s[1]), Interval(s[1], math.inf)]


def simulate_pairs(rho, n, seed, edges):
    """Category pairs of ``n`` bivariate-normal draws, as ``(I, J, count)`` triples."""
    rng = np.random.default_rng(seed)
    u = rng.standard_normal(n)
    v = rho * u + math.sqrt(1 - rho * rho) * rng.standard_normal(n)
    cu, cv = np.searchsorted(edges, u, side="right"), np.searchsorted(edges, v, side="right")
    return np.bincount(cu * (len(edges) + 1) + cv, minlength=(len(edges) + 1) ** 2)


def test_objective_examples():
    assert pl_objective([(WHOLE_LINE, WHOLE_LINE, 5)], 0.7) == 0.0
    assert pl_objective([(NEG, NEG, 1)], 0.0) == pytest.approx(math.log(0.25), abs=1e-14)
    one = pl_objective([(NEG, POS, 1), (NEG, POS, 1)], 0.3)
    two = pl_objective([(NEG, POS, 2)], 0.3)
    assert one == two


def test_always_concordant_hits_upper_clamp():
    rho, _, _ = estimate_lag_correlation([(NEG, NEG, 500), (POS, POS, 500)])
    assert rho == RHO_MAX


def test_always_discordant_hits_lower_clamp():
    rho, _, _ = estimate_lag_correlation([(NEG, POS, 500), (POS, NEG, 500)])
    assert rho == -RHO_MAX


def test_independence_frequencies():
    iv = thirds_intervals()
    pairs = [(a, b, 100_000 // 9) for a in iv for b in iv]
    rho, _, conv = estimate_lag_correlation(pairs)
    assert abs(rho) <= 0.02 and conv


def test_binary_recovery_vs_orthant_inversion():
    counts = simulate_pairs(0.5, 100_000, seed=1, edges=[0.0])
    pairs = [(NEG, NEG, counts[0]), (NEG, POS, counts[1]), (POS, NEG, counts[2]), (POS, POS, counts[3])]
    rho, _, _ = estimate_lag_correlation(pairs)
    concord = (counts[0] + counts[3]) / counts.sum()
    oracle = math.sin(math.pi * (concord - 0.5))
    assert abs(rho - 0.5) <= 0.02
    assert abs(rho - oracle) <= 0.005


def test_maximiser_beats_fine_grid():
    iv = thirds_intervals()
    counts = simulate_pairs(-0.4, 20_000, seed=3, edges=THIRDS.upper[0, :2, 0])
    pairs = [(iv[a], iv[b], counts[3 * a + b]) for a in range(3) for b in range(3)]
    rho, val, _ = estimate_lag_correlation(pairs)
    grid = np.linspace(-0.999, 0.999, 2001)
    best = max(pl_objective(pairs, r) for r in grid)
    assert val >= best - 1e-9
    assert val == pytest.approx(pl_objective(pairs, rho), abs=1e-9)


def test_no_information():
    with pytest.raises(NoInformationError):
        estimate_lag_correlation([(WHOLE_LINE, NEG, 10)])


def test_raw_and_deduplicated_objectives_identical():
    iv = thirds_intervals()
    rng = np.random.default_rng(0)
    raw = [(iv[a], iv[b], 1) for a, b in rng.integers(0, 3, size=(400, 2))]
    merged = {}
    for a, b, c in raw:
        merged[(a, b)] = merged.get((a, b), 0) + c
    ded = [(a, b, c) for (a, b), c in merged.items()]
    for rho in (-0.6, 0.0, 0.35, 0.9):
        assert pl_objective(raw, rho) == pytest.approx(pl_objective(ded, rho), rel=1e-13)
    assert estimate_lag_correlation(raw)[0] == pytest.approx(estimate_lag_correlation(ded)[0], abs=1e-9)


def _field(n=400, seed=0, models=(C1,), coding=THIRDS):
    sites = SiteSet.grid_1d(n)
    y = simulate_independent_grfs(sites, list(models), seed)
    return sites, truncate(y, coding)


def test_pair_classes_dedup_matches_pair_loop():
    sites, f = _field()
    g = build_pair_groups(sites, LagSpec.regular(5, 1.0, 0.5))
    pc = pair_classes(f, THIRDS, g, 0)
    assert pc.count.size <= 5 * 9
    rho = np.array([0.9, 0.7, 0.5, 0.3, 0.1])
    got = pc.objective(rho)
    iv = thirds_intervals()
    for a in range(5):
        pairs = [(iv[f.labels[i]], iv[f.labels[j]], 1) for i, j in g.pairs(a)]
        assert got[a] == pytest.approx(pl_objective(pairs, rho[a]), rel=1e-12)


def test_factorisation_over_grfs():
    coding = CodingFunction.flag2(0.2, -0.3)
    sites = SiteSet.grid_1d(60)
    f = truncate(simulate_independent_grfs(sites, [C1, C1], 2), coding)
    g = build_pair_groups(sites, LagSpec.regular(2, 1.0, 0.5))
    pcs = [pair_classes(f, coding, g, r) for r in range(2)]

    def full(a, rho):
        return sum(
            math.log(joint_indicator_expectation(coding, i, j, f.labels[i], f.labels[j], rho)) for i, j in g.pairs(a)
        )

    def split(a, rho):
        return sum(pcs[r].objective(np.full(2, rho[r]))[a] for r in range(2))

    # terms dropped for whole-line axes do not depend on rho, so differences agree
    for a in range(2):
        r0, r1 = (0.3, -0.2), (0.8, 0.5)
        assert full(a, r1) - full(a, r0) == pytest.approx(split(a, r1) - split(a, r0), abs=1e-9)


def test_second_grf_uses_only_informative_pairs():
    coding = CodingFunction.flag2(0.0, 0.0)
    sites = SiteSet.uniform_square(200, 100.0, seed=0)
    f = truncate(simulate_independent_grfs(sites, [C1, C1], 1), coding)
    g = build_pair_groups(sites, LagSpec.regular(8, 5.0))
    res = empirical_underlying_variogram(f, coding, g)
    lab = f.labels
    both = (lab[g.i] != 0) & (lab[g.j] != 0)
    np.testing.assert_array_equal(res.n_effective[:, 1], np.bincount(g.lag[both], minlength=8))
    np.testing.assert_array_equal(res.n_effective[:, 0], g.counts)


def test_single_mono_simulation_lag_one():
    n = 2000
    sites = SiteSet.grid_1d(n)
    g = build_pair_groups(sites, LagSpec.regular(3, 1.0, 0.5))
    y = simulate_independent_grfs(sites, [C1], 0)
    res = empirical_underlying_variogram(truncate(y, THIRDS), THIRDS, g)
    assert abs(res.gamma[0, 0] - (1 - math.exp(-1 / 20))) <= 0.1


def test_nugget_field_gamma_near_one():
    sites = SiteSet.grid_1d(300)
    g = build_pair_groups(sites, LagSpec.regular(10, 1.0, 0.5))
    sampler = GRFSampler(sites, CovarianceModel("nugget"))
    means = []
    for s in range(100):
        f = truncate(GRFRealization(sites, sampler.draw(derive_seed(6, s))), THIRDS)
        means.append(empirical_underlying_variogram(f, THIRDS, g).gamma.mean())
    assert abs(np.mean(means) - 1.0) <= 0.05


def test_missing_lag_nan_and_result_fields():
    sites, f = _field(n=10)
    g = build_pair_groups(sites, LagSpec([1.0, 50.0], tolerance=0.5))
    res = empirical_underlying_variogram(f, THIRDS, g)
    assert np.isnan(res.gamma[1, 0]) and res.n_effective[1, 0] == 0
    assert np.isfinite(res.gamma[0, 0])
    rows = res.lag_results()
    assert len(rows) == 2 and rows[0].grf == 0 and rows[0].n_effective == 9
    assert res.variogram(0).track == "grf_1"


def test_boundary_flag():
    sites = SiteSet.grid_1d(50)
    g = build_pair_groups(sites, LagSpec([1.0, 2.0]))
    # no transitions at all: likelihood increases all the way to the clamp
    res = empirical_underlying_variogram(CategoricalField(sites, np.zeros(50, int), 3), THIRDS, g)
    assert res.boundary[:, 0].all()
    # a single transition makes perfect correlation impossible
    res = empirical_underlying_variogram(CategoricalField(sites, np.repeat([0, 2], 25), 3), THIRDS, g)
    assert not res.boundary[:, 0].any()


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 1000), st.permutations([0, 1, 2]))
def test_label_permutation_invariance(seed, perm):
    sites, f = _field(n=150, seed=seed)
    g = build_pair_groups(sites, LagSpec.regular(6, 1.0, 0.5))
    perm = np.asarray(perm)
    a = empirical_underlying_variogram(f, THIRDS, g)
    b = empirical_underlying_variogram(CategoricalField(sites, perm[f.labels], 3), THIRDS.permuted(perm), g)
    np.testing.assert_array_equal(a.gamma, b.gamma)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 1000))
def test_gamma_in_zero_two(seed):
    coding = CodingFunction.flag2(0.3, -0.4)
    sites = SiteSet.uniform_square(120, 60.0, seed)
    f = truncate(simulate_independent_grfs(sites, [C1, C1], seed), coding)
    res = empirical_underlying_variogram(f, coding, build_pair_groups(sites, LagSpec.regular(6, 5.0)))
    g = res.gamma[np.isfinite(res.gamma)]
    assert np.all((g >= 0) & (g <= 2))


def test_anticorrelation_detected():
    # complementary half-lines seen at the two ends of every pair give gamma > 1
    rho, _, _ = estimate_lag_correlation([(NEG, POS, 700), (POS, NEG, 700), (NEG, NEG, 300), (POS, POS, 300)])
    assert 1 - rho > 1


def test_vectorised_maximiser_matches_per_lag():
    iv = thirds_intervals()
    per_lag = []
    pairs_all, lags = [], []
    for a, rho in enumerate([-0.5, 0.1, 0.7]):
        c = simulate_pairs(rho, 3000, seed=a, edges=THIRDS.upper[0, :2, 0])
        pairs = [(iv[x], iv[y], c[3 * x + y]) for x in range(3) for y in range(3)]
        per_lag.append(estimate_lag_correlation(pairs)[0])
        pairs_all += pairs
        lags += [a] * 9
    pc = PairClasses.from_pairs(pairs_all, lag=lags, n_lags=3)
    rho, _, _ = maximize_by_lag(pc)
    np.testing.assert_allclose(rho, per_lag, atol=1e-12)
