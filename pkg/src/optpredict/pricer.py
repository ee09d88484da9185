"""Closed-form real-option value with zero discount rate.

The option pays ``max(S(t + dt) - K, 0)`` on a GBM state, and its value is
the undiscounted expectation of that payoff.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DegenerateVolatilityError, InvalidArgumentError
from .series import GbmParams

# sigma*sqrt(dt) below this is treated as a deterministic state
DEGENERATE_VOL = 1e-12

_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)

# Acklam's rational approximation, used only as the Newton starting point
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def norm_pdf(x: float) -> float:
    return math.exp(-0.5 * x * x) / _SQRT2PI


def norm_cdf(x: float) -> float:
    """Standard normal CDF via the complementary error function.

    Using ``erfc`` on the lower side keeps tail values relatively accurate.
    """
    if math.isnan(x):
        raise InvalidArgumentError("norm_cdf of NaN")
    if math.isinf(x):
        if x > 0:
            return 1.0
        return 0.0
    if x < 0:
        return 0.5 * math.erfc(-x / _SQRT2)
    return 1.0 - 0.5 * math.erfc(x / _SQRT2)


def _ppf_initial(p: float) -> float:
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        return (((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / (
            (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0
        )
    q = p - 0.5
    r = q * q
    return (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q / (
        ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0
    )


def _ppf_lower(p: float) -> float:
    # p in (0, 0.5]; refine against the lower-tail cdf, which is relatively exact there
    x = _ppf_initial(p)
    for _ in range(2):
        e = 0.5 * math.erfc(-x / _SQRT2) - p
        u = e * _SQRT2PI * math.exp(0.5 * x * x)
        x = x - u / (1.0 + 0.5 * x * u)
    return x


def norm_ppf(p: float) -> float:
    """Inverse of :func:`norm_cdf` on the open interval (0, 1)."""
    if not (isinstance(p, (int, float)) and 0.0 < p < 1.0):
        raise InvalidArgumentError(f"norm_ppf needs 0 < p < 1, got {p!r}")
    if p == 0.5:
        return 0.0
    if p < 0.5:
        return _ppf_lower(p)
    # 1 - p is exact for p >= 0.5
    return -_ppf_lower(1.0 - p)


@dataclass(frozen=True)
class OptionQuote:
    d1: float
    d2: float
    value: float
    strike: float
    growth: float


def _check_positive(**kwargs):
    for name, v in kwargs.items():
        if not (math.isfinite(v) and v > 0):
            raise InvalidArgumentError(f"{name} must be a positive finite number, got {v!r}")


def is_degenerate(params: GbmParams, dt: float) -> bool:
    return params.sigma * math.sqrt(dt) < DEGENERATE_VOL


def d_terms(s: float, k: float, params: GbmParams, dt: float) -> tuple[float, float]:
    """Return ``(d1, d2)`` for spot ``s`` and strike ``k``.

    Raises DegenerateVolatilityError when ``sigma * sqrt(dt)`` is below
    ``DEGENERATE_VOL``; callers then price deterministically.
    """
    _check_positive(s=s, k=k, dt=dt)
    vol = params.sigma * math.sqrt(dt)
    if vol < DEGENERATE_VOL:
        raise DegenerateVolatilityError(f"sigma*sqrt(dt) = {vol!r} is below {DEGENERATE_VOL}")
    d2 = (math.log(s / k) + (params.mu - 0.5 * params.sigma**2) * dt) / vol
    return d2 + vol, d2


def option_value(s: float, k: float, params: GbmParams, dt: float) -> OptionQuote:
    """Value of the call-style claim ``max(S(t+dt) - k, 0)`` at r = 0."""
    _check_positive(s=s, k=k, dt=dt)
    growth = math.exp(params.mu * dt)
    if is_degenerate(params, dt):
        forward = s * growth
        d = math.inf if forward > k else (-math.inf if forward < k else 0.0)
        return OptionQuote(d1=d, d2=d, value=max(forward - k, 0.0), strike=k, growth=growth)
    d1, d2 = d_terms(s, k, params, dt)
    value = growth * norm_cdf(d1) * s - norm_cdf(d2) * k
    return OptionQuote(d1=d1, d2=d2, value=max(value, 0.0), strike=k, growth=growth)
