"""Asymmetric-cost one-step forecasting of volatile series via real-option pricing."""

from .errors import (
    ConfigurationError,
    DataError,
    DegenerateVolatilityError,
    InsufficientDataError,
    InternalError,
    InvalidArgumentError,
    OptPredictError,
)
from .estimation import EstimateDiagnostics, estimate_params
from .evaluation import (
    BacktestMethod,
    BacktestReport,
    SplitSpec,
    StepRecord,
    WindowGrid,
    evaluate_external,
    run_backtest,
    select_window,
    wmae,
    wmape,
)
from .predictor import (
    Prediction,
    expected_cost,
    predict_analytic,
    predict_gaussian_quantile,
    predict_numeric,
    predict_persistence_baseline,
)
from .pricer import OptionQuote, d_terms, norm_cdf, norm_ppf, option_value
from .series import BrownianIncrement, CostWeights, GbmParams, TimeSeries, log_returns, simulate_gbm

__version__ = "0.1.0"
