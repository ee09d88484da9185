"""Cost-minimizing one-step-ahead predictions.

The expected asymmetric cost of predicting ``k`` is

    p_over * ((1 + omega) * F(k) + k - s * exp(mu * dt))

where ``F`` is the option value from :mod:`optpredict.pricer`. Its
derivative in ``k`` is ``p_over * (1 - (1 + omega) * N(d2(k)))``, which is
increasing in ``k``, so the minimizer is where ``N(d2) = 1 / (1 + omega)``:
the ``omega / (1 + omega)`` quantile of the lognormal next state.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import InsufficientDataError, InternalError, InvalidArgumentError
from .pricer import is_degenerate, norm_cdf, norm_pdf, norm_ppf, option_value
from .series import MIN_WINDOW, CostWeights, GbmParams, TimeSeries

BRACKET_WIDTH = 10.0
DEFAULT_FLOOR_FRACTION = 1e-9


class Method(str, enum.Enum):
    ANALYTIC = "analytic"
    NUMERIC = "numeric"
    BASELINE_QUANTILE = "baseline-quantile"


@dataclass(frozen=True)
class Prediction:
    k_star: float
    method: Method
    expected_cost: float
    fractile: float
    floored: bool = False


def _check_inputs(s, dt, weights):
    if not isinstance(weights, CostWeights):
        raise InvalidArgumentError(f"weights must be CostWeights, got {type(weights).__name__}")
    for name, v in (("s", s), ("dt", dt)):
        if not (math.isfinite(v) and v > 0):
            raise InvalidArgumentError(f"{name} must be a positive finite number, got {v!r}")


def fractile_z(weights: CostWeights) -> float:
    """Standard normal quantile at ``omega / (1 + omega)``.

    For omega > 1 this uses the lower tail ``1 / (1 + omega)``, which stays
    representable when the fractile itself would round to 1.
    """
    w = weights.omega
    if w <= 1.0:
        return norm_ppf(w / (1.0 + w))
    return -norm_ppf(1.0 / (1.0 + w))


def expected_cost(k: float, s: float, params: GbmParams, dt: float, weights: CostWeights) -> float:
    """Expected cost ``E[p_over*(k - S)^+ + p_under*(S - k)^+]`` of predicting ``k``."""
    _check_inputs(s, dt, weights)
    quote = option_value(s, k, params, dt)
    cost = weights.p_over * ((1.0 + weights.omega) * quote.value + k - s * quote.growth)
    # cancellation can leave a tiny negative residue near a perfect forecast
    return max(cost, 0.0)


def predict_analytic(s: float, params: GbmParams, dt: float, weights: CostWeights) -> Prediction:
    _check_inputs(s, dt, weights)
    if is_degenerate(params, dt):
        k = s * math.exp(params.mu * dt)
    else:
        vol = params.sigma * math.sqrt(dt)
        z = fractile_z(weights)
        k = s * math.exp((params.mu - 0.5 * params.sigma**2) * dt + vol * z)
    return Prediction(
        k_star=float(k),
        method=Method.ANALYTIC,
        expected_cost=expected_cost(k, s, params, dt, weights),
        fractile=weights.fractile,
    )


def predict_numeric(
    s: float, params: GbmParams, dt: float, weights: CostWeights, tol: float = 1e-12
) -> Prediction:
    """Minimize the expected cost by bracketed root-finding on its derivative.

    The search runs in log-strike, so ``tol`` is a relative tolerance on ``k``.
    """
    _check_inputs(s, dt, weights)
    if not tol > 0:
        raise InvalidArgumentError(f"tol must be > 0, got {tol!r}")
    if is_degenerate(params, dt):
        k = s * math.exp(params.mu * dt)
    else:
        vol = params.sigma * math.sqrt(dt)
        center = math.log(s) + (params.mu - 0.5 * params.sigma**2) * dt
        lo, hi = center - BRACKET_WIDTH * vol, center + BRACKET_WIDTH * vol
        omega = weights.omega

        # 1 - (1 + omega) N(d2), rearranged so tiny omegas do not cancel to 0
        def slope(log_k):
            d2 = (center - log_k) / vol
            return norm_cdf(-d2) - omega * norm_cdf(d2)

        f_lo, f_hi = slope(lo), slope(hi)
        if not (f_lo < 0 < f_hi):
            raise InternalError(
                f"derivative does not change sign on bracket [{math.exp(lo)!r}, {math.exp(hi)!r}]: "
                f"slopes {f_lo!r}, {f_hi!r} (omega={weights.omega!r}, sigma*sqrt(dt)={vol!r})"
            )
        log_k = brentq(slope, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=500)
        k = math.exp(log_k)
    return Prediction(
        k_star=float(k),
        method=Method.NUMERIC,
        expected_cost=expected_cost(k, s, params, dt, weights),
        fractile=weights.fractile,
    )


def gaussian_expected_cost(k: float, mean: float, sd: float, weights: CostWeights) -> float:
    """Expected asymmetric cost of predicting ``k`` for a N(mean, sd^2) outcome."""
    if sd == 0:
        return weights.p_over * max(k - mean, 0.0) + weights.p_under * max(mean - k, 0.0)
    z = (k - mean) / sd
    # E[(X - k)^+] for the normal, then the over side by put-call parity
    upper = sd * (norm_pdf(z) - z * (1.0 - norm_cdf(z)))
    lower = upper + (k - mean)
    return weights.p_over * lower + weights.p_under * upper


def predict_gaussian_quantile(mu_a: float, sigma_a: float, weights: CostWeights) -> float:
    """The ``omega / (1 + omega)`` quantile of N(mu_a, sigma_a^2)."""
    if not isinstance(weights, CostWeights):
        raise InvalidArgumentError(f"weights must be CostWeights, got {type(weights).__name__}")
    if not math.isfinite(mu_a):
        raise InvalidArgumentError(f"mu_a must be finite, got {mu_a!r}")
    if not (math.isfinite(sigma_a) and sigma_a >= 0):
        raise InvalidArgumentError(f"sigma_a must be finite and >= 0, got {sigma_a!r}")
    if sigma_a == 0:
        return float(mu_a)
    return mu_a + sigma_a * fractile_z(weights)


def rolling_difference_sd(series: TimeSeries, window: int, at_index: int) -> float:
    """Population sd of the one-step differences inside the window ending at ``at_index``."""
    if int(window) != window or window < MIN_WINDOW:
        raise InvalidArgumentError(f"window must be an integer >= {MIN_WINDOW}, got {window!r}")
    start = at_index - window + 1
    if start < 0 or at_index >= len(series):
        raise InsufficientDataError(
            f"window {window} ending at index {at_index} needs indices "
            f"[{start}, {at_index}] but series has indices [0, {len(series) - 1}]"
        )
    diffs = np.diff(series.values[start : at_index + 1])
    return float(np.std(diffs))


def predict_persistence_baseline(
    series: TimeSeries,
    window: int,
    at_index: int,
    weights: CostWeights,
    floor_fraction: float = DEFAULT_FLOOR_FRACTION,
) -> Prediction:
    """Persistence forecast shifted to the cost-optimal Gaussian quantile.

    The predictive mean is the value at ``at_index``; the predictive sd is
    the rolling sd of one-step differences over ``window`` observations.
    Predictions are floored at ``floor_fraction`` times the current value.
    """
    if not floor_fraction > 0:
        raise InvalidArgumentError(f"floor_fraction must be > 0, got {floor_fraction!r}")
    sd = rolling_difference_sd(series, window, at_index)
    current = float(series.values[at_index])
    k = predict_gaussian_quantile(current, sd, weights)
    floor = floor_fraction * current
    floored = k < floor
    if floored:
        k = floor
    return Prediction(
        k_star=float(k),
        method=Method.BASELINE_QUANTILE,
        expected_cost=gaussian_expected_cost(k, current, sd, weights),
        fractile=weights.fractile,
        floored=floored,
    )
