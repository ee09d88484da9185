"""Core domain types and synthetic geometric Brownian motion generation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientDataError, InvalidArgumentError

MIN_WINDOW = 3


@dataclass(frozen=True)
class TimeSeries:
    """Strictly positive, uniformly spaced observations of a state process.

    ``values``, ``log_values`` and the one-step log ``returns`` are read-only
    float64 arrays. Series built
    with :meth:`from_log_values` may hold levels that overflow to ``inf`` or
    underflow to 0;
    everything that works on log returns still sees exact finite logs.
    """

    values: np.ndarray
    dt: float = 1.0
    origin_index: int = 0
    log_values: np.ndarray = field(default=None, repr=False, compare=False)
    returns: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not (isinstance(self.dt, (int, float)) and math.isfinite(self.dt) and self.dt > 0):
            raise InvalidArgumentError(f"dt must be a positive finite number, got {self.dt!r}")
        if self.log_values is not None:
            logs = np.array(self.log_values, dtype=float).ravel()
            if logs.size < 1 or not np.all(np.isfinite(logs)):
                raise InvalidArgumentError("log values must be finite and nonempty")
            with np.errstate(over="ignore", under="ignore"):
                arr = np.exp(logs)
            rets = np.diff(logs)
        else:
            arr = np.array(self.values, dtype=float).ravel()
            if arr.size < 1:
                raise InvalidArgumentError("time series needs at least one observation")
            if not np.all(np.isfinite(arr)):
                raise InvalidArgumentError("time series contains non-finite values")
            if np.any(arr <= 0):
                bad = int(np.flatnonzero(arr <= 0)[0])
                raise InvalidArgumentError(
                    f"time series values must be > 0 (index {bad} is {float(arr[bad])!r})"
                )
            logs = np.log(arr)
            # ratio form is exact for constant-ratio series, unlike a difference of logs
            rets = np.log(arr[1:] / arr[:-1])
        for a in (arr, logs, rets):
            a.flags.writeable = False
        object.__setattr__(self, "returns", rets)
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "log_values", logs)
        object.__setattr__(self, "dt", float(self.dt))
        object.__setattr__(self, "origin_index", int(self.origin_index))

    @classmethod
    def from_log_values(cls, log_values, dt: float = 1.0, origin_index: int = 0) -> "TimeSeries":
        return cls(None, dt, origin_index, log_values=log_values)

    def __len__(self) -> int:
        return self.values.size

    def __getitem__(self, i):
        return self.values[i]

    def scaled(self, c: float) -> "TimeSeries":
        return TimeSeries(self.values * c, self.dt, self.origin_index)

    def replace_value(self, index: int, value: float) -> "TimeSeries":
        arr = self.values.copy()
        arr[index] = value
        return TimeSeries(arr, self.dt, self.origin_index)


@dataclass(frozen=True)
class GbmParams:
    """Drift and volatility per unit time, plus the window they came from."""

    mu: float
    sigma: float
    window: int = MIN_WINDOW

    def __post_init__(self):
        if not math.isfinite(self.mu):
            raise InvalidArgumentError(f"mu must be finite, got {self.mu!r}")
        if not (math.isfinite(self.sigma) and self.sigma >= 0):
            raise InvalidArgumentError(f"sigma must be finite and >= 0, got {self.sigma!r}")
        if int(self.window) != self.window or self.window < MIN_WINDOW:
            raise InvalidArgumentError(f"window must be an integer >= {MIN_WINDOW}, got {self.window!r}")
        object.__setattr__(self, "mu", float(self.mu))
        object.__setattr__(self, "sigma", float(self.sigma))
        object.__setattr__(self, "window", int(self.window))


@dataclass(frozen=True)
class CostWeights:
    """Overestimation penalty ``p_over`` and underestimation penalty ``p_under``."""

    p_over: float = 1.0
    p_under: float = 1.0

    def __post_init__(self):
        for name in ("p_over", "p_under"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise InvalidArgumentError(f"{name} must be a positive finite number, got {v!r}")
            object.__setattr__(self, name, float(v))

    @classmethod
    def from_omega(cls, omega: float) -> "CostWeights":
        """Weights with ``p_over = 1`` and the given ratio."""
        return cls(p_over=1.0, p_under=omega)

    @property
    def omega(self) -> float:
        return self.p_under / self.p_over

    @property
    def fractile(self) -> float:
        w = self.omega
        return w / (1.0 + w)


@dataclass(frozen=True)
class BrownianIncrement:
    value: float
    dt: float = field(default=1.0)

    def __post_init__(self):
        if not self.dt > 0:
            raise InvalidArgumentError(f"dt must be > 0, got {self.dt!r}")


def brownian_increments(steps: int, dt: float, rng: np.random.Generator) -> np.ndarray:
    """Draw ``steps`` independent N(0, dt) increments."""
    return rng.standard_normal(steps) * math.sqrt(dt)


def simulate_gbm(s0: float, params: GbmParams, steps: int, dt: float, seed: int) -> TimeSeries:
    """Simulate one GBM path with the exact lognormal transition.

    The log path is ``log(s0) + (mu - sigma^2/2) * t + sigma * W(t)``, so a
    zero-volatility path is ``s0 * exp(mu * t)`` up to rounding.
    """
    if not (math.isfinite(s0) and s0 > 0):
        raise InvalidArgumentError(f"s0 must be > 0, got {s0!r}")
    if not (math.isfinite(dt) and dt > 0):
        raise InvalidArgumentError(f"dt must be > 0, got {dt!r}")
    if int(steps) != steps or steps < 1:
        raise InvalidArgumentError(f"steps must be an integer >= 1, got {steps!r}")
    rng = np.random.default_rng(seed)
    dw = brownian_increments(int(steps), dt, rng)
    t = np.arange(int(steps) + 1, dtype=float) * dt
    w = np.concatenate(([0.0], np.cumsum(dw)))
    drift = params.mu - 0.5 * params.sigma**2
    log_growth = drift * t + params.sigma * w
    with np.errstate(over="ignore", under="ignore"):
        path = s0 * np.exp(log_growth)
    if np.all(np.isfinite(path)) and np.all(path > 0):
        return TimeSeries(path, dt)
    # level leaves float64 range; keep the exact log path
    return TimeSeries.from_log_values(math.log(s0) + log_growth, dt)


def log_returns(series: TimeSeries) -> np.ndarray:
    """One-step log returns ``ln(S[k] / S[k-1])``."""
    if len(series) < 2:
        raise InsufficientDataError(
            f"log returns need at least 2 observations, got {len(series)}"
        )
    return series.returns
