"""Stable predictor selection for stationary time series.

Selection stability is measured over complementary pairs of odd-block
subsamples: a base selector (lasso at a calibrated penalty) runs on both
halves of B random splits of the odd blocks, and predictors whose
pair-average selection frequency clears a threshold form the stable set.
A finite-sample calculator bounds the expected number of low-probability
predictors that survive the threshold.
"""

from .blocks import BlockPairSample, BlockPartition, auto_block_length, gather, partition, sample_pair
from .core import (
    LagSpec,
    MultiSeries,
    PredictorDescriptor,
    RegressionData,
    build_design,
    detrend_linear,
    detrend_multiseries,
    make_multiseries,
    original_scale_coefficients,
    read_csv_table,
    standardize,
)
from .errors import BlockstabError, ConfigError, DataError, NumericalError, StabilityRunError
from .evaluation import (
    ForecastReport,
    MethodResult,
    SelectionMethod,
    bpa_method,
    compare_methods,
    lasso_cv_method,
    lasso_q_method,
    ols_fit,
    rolling_forecast,
    split,
)
from .lasso import (
    LambdaPath,
    LassoFit,
    QEstimate,
    cv_lambda,
    fit,
    fit_path,
    kkt_violation,
    lambda_path,
    q_estimate,
    resolve_q,
    select,
)
from .sim import (
    ArxConfig,
    Rates,
    SelectionTruth,
    add_noise,
    ar_spectral_radius,
    is_stationary,
    paper_profile,
    run_noise_sweep,
    simulate_ar,
    simulate_arx,
    tpr_fpr,
)
from .stability import (
    SelectionReport,
    StabilityScores,
    bpa_scores,
    error_constant,
    phi_grid,
    selection_bound,
    solve_phi,
    stability_scores,
    threshold,
)

__version__ = "0.1.0"
