"""Changepoint detection in the extremal dependence of bivariate
Husler-Reiss data, from raw OHLC prices to bootstrap p-values."""

from .backend import BACKEND_NAME, HAS_EXTENSION
from .bhr import (
    BivariateSeries,
    GumbelPair,
    bhr_cdf,
    bhr_log_pdf,
    bhr_log_pdf_many,
    conditional_cdf_y_given_x,
    sample_bhr,
)
from .changepoint import (
    ChangepointResult,
    LikelihoodValue,
    TauProfile,
    detect,
    loglik_h0,
    loglik_ha,
    lr_profile,
    lrt_statistic,
    mic_null,
    mic_profile,
    mic_statistic,
    mle_h0,
    mle_ha,
    trim_bound,
)
from .dependence import (
    ChiEstimate,
    IndependenceTest,
    chi_from_madogram,
    cross_madogram_chi,
    empirical_chi_lower,
    empirical_chi_upper,
    f_madogram,
    independence_bootstrap_test,
    lagged_chi,
)
from .errors import BhrcpError, DataError, DiagnosticsWarning, NumericalError
from .margins import (
    GumbelMargin,
    MarginProfile,
    gumbel_pwm_fit,
    local_pwm_fit,
    to_standard_gumbel,
)
from .params import LAMBDA_MAX, LAMBDA_MIN, DependenceParam, chi_of_lambda, lambda_of_chi
from .rng import RandomStream

__version__ = "0.1.0"
