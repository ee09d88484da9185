"""Rolling-window maximum-likelihood estimation of GBM drift and volatility."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientDataError, InvalidArgumentError
from .series import MIN_WINDOW, GbmParams, TimeSeries


@dataclass(frozen=True)
class EstimateDiagnostics:
    n_used: int
    sigma_se: float
    mu_se: float


def params_from_returns(returns: np.ndarray, dt: float, window: int, unbiased: bool = False):
    """Estimate ``(GbmParams, EstimateDiagnostics)`` from a window's log returns.

    ``returns`` holds the ``window - 1`` consecutive log returns. The variance
    divides by the return count (the MLE) unless ``unbiased`` is set.
    """
    m = returns.size
    if np.all(returns == returns[0]):
        # rounding in the mean would otherwise leave a ~1e-17 variance
        mean, var = float(returns[0]), 0.0
    else:
        mean = float(np.mean(returns))
        var = float(np.var(returns, ddof=1 if unbiased else 0))
    sigma_step = math.sqrt(var)
    sigma = sigma_step / math.sqrt(dt)
    mu = mean / dt + 0.5 * sigma * sigma
    diag = EstimateDiagnostics(
        n_used=window,
        sigma_se=sigma / math.sqrt(2 * m),
        mu_se=sigma / math.sqrt(m * dt),
    )
    return GbmParams(mu=mu, sigma=sigma, window=window), diag


def estimate_params(series: TimeSeries, window: int, at_index: int, unbiased: bool = False):
    """Fit GBM parameters to the ``window`` observations ending at ``at_index``.

    Returns ``(GbmParams, EstimateDiagnostics)``. Only
    ``series[at_index - window + 1 : at_index + 1]`` is read.
    """
    if int(window) != window or window < MIN_WINDOW:
        raise InvalidArgumentError(f"window must be an integer >= {MIN_WINDOW}, got {window!r}")
    window = int(window)
    at_index = int(at_index)
    start = at_index - window + 1
    if start < 0 or at_index >= len(series):
        raise InsufficientDataError(
            f"window {window} ending at index {at_index} needs indices "
            f"[{start}, {at_index}] but series has indices [0, {len(series) - 1}]"
        )
    returns = series.returns[start:at_index]
    return params_from_returns(returns, series.dt, window, unbiased)
