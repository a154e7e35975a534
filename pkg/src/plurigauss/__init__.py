"""Plurigaussian categorical fields and pairwise-likelihood variography."""

from .coding import (
    CategoricalField,
    CodingError,
    CodingFunction,
    ProportionSpec,
    interval_for_site,
    simulate_varying_thresholds,
    thresholds_from_proportions,
    truncate,
)
from .fitting import FitResult, InsufficientDataError, fit_unit_sill_model
from .forward import (
    averaged_indicator_variogram,
    indicator_expectation,
    indicator_variogram_between_points,
    joint_indicator_expectation,
)
from .gaussian import (
    WHOLE_LINE,
    Interval,
    bivariate_rect_prob,
    bvn_upper,
    log_bivariate_rect_prob,
    rect_prob,
    std_normal_cdf,
    std_normal_quantile,
)
from .lags import LagSpec, LagSpecError, PairGroups, build_pair_groups
from .pl import (
    NoInformationError,
    PLNumericalError,
    PLResult,
    empirical_underlying_variogram,
    estimate_lag_correlation,
    pl_objective,
)
from .random_fields import (
    C1,
    C2,
    CovarianceModel,
    GRFRealization,
    ModelKind,
    SiteSet,
    covariance_eval,
    simulate_grf,
    simulate_independent_grfs,
)
from .study import StudyConfig, StudySummary, run_bigaussian_study, run_mono_study, run_study
from .variography import (
    EmpiricalVariogram,
    VariogramMatrix,
    empirical_indicator_variograms,
    empirical_variogram_continuous,
)

__version__ = "0.1.0"
