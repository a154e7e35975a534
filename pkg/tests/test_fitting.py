import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from plurigauss.fitting import InsufficientDataError, fit_objective, fit_unit_sill_model
from plurigauss.random_fields import CovarianceModel
from plurigauss.variography import EmpiricalVariogram

LAGS = np.arange(1.0, 151.0)
NPAIRS = 2000 - np.arange(1, 151)


def track(gamma, lags=LAGS, npairs=NPAIRS):
    return EmpiricalVariogram("grf_1", lags, np.asarray(gamma, dtype=float), np.asarray(npairs))


def test_exponential_self_consistency():
    fit = fit_unit_sill_model(track(1 - np.exp(-LAGS / 20)), "exponential")
    assert fit.model.range == pytest.approx(20.0, abs=0.1)
    assert fit.model.sill == 1.0


def test_gaussian_self_consistency():
    fit = fit_unit_sill_model(track(1 - np.exp(-((LAGS / 40) ** 2))), "gaussian")
    assert fit.model.range == pytest.approx(40.0, abs=0.2)


def test_pure_nugget_hits_lower_bound():
    fit = fit_unit_sill_model(track(np.ones(150)), "exponential")
    assert fit.at_lower_bound
    assert fit.model.range == pytest.approx(0.1, rel=1e-6)


def test_returned_objective_beats_grid():
    rng = np.random.default_rng(1)
    g = 1 - np.exp(-LAGS / 25) + rng.normal(0, 0.05, LAGS.size)
    fit = fit_unit_sill_model(track(g), "exponential")
    w = NPAIRS / LAGS
    for a in np.geomspace(0.1, 1500, 100):
        assert fit.objective <= fit_objective(LAGS, g, w, "exponential", a) + 1e-12


def test_missing_lags_ignored():
    g = 1 - np.exp(-LAGS / 20)
    g[::3] = np.nan
    fit = fit_unit_sill_model(track(g), "exponential")
    assert fit.model.range == pytest.approx(20.0, rel=1e-6)


def test_insufficient_data():
    with pytest.raises(InsufficientDataError):
        fit_unit_sill_model(track([0.1, np.nan, 0.3], lags=[1.0, 2.0, 3.0], npairs=[5, 0, 5]), "exponential")


def test_to_dict():
    d = fit_unit_sill_model(track(1 - np.exp(-LAGS / 20)), "exponential").to_dict()
    assert set(d) == {"kind", "range", "sill", "objective"}
    assert d["kind"] == "exponential" and d["sill"] == 1.0


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(["exponential", "gaussian", "spherical"]), st.floats(3.0, 120.0))
def test_range_recovery_noiseless(kind, a):
    truth = CovarianceModel(kind, range=a)
    fit = fit_unit_sill_model(track(1 - truth.correlation(LAGS)), kind)
    assert fit.model.range == pytest.approx(a, rel=0.005)
