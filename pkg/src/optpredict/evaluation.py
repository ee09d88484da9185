"""Rolling-horizon backtesting with validation-based window selection.

Indices are 0-based. With ``n1 = floor(L * train_frac)`` and
``n2 = floor(L * (train_frac + valid_frac))`` the segments are::

    train = [0, n1)   valid = [n1, n2)   test = [n2, L)

A prediction for index ``k`` only reads observations ``<= k - 1``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigurationError, InvalidArgumentError
from .estimation import estimate_params
from .predictor import (
    DEFAULT_FLOOR_FRACTION,
    predict_analytic,
    predict_gaussian_quantile,
    predict_persistence_baseline,
    rolling_difference_sd,
)
from .series import MIN_WINDOW, CostWeights, TimeSeries

DEFAULT_GRID = tuple(range(20, 1001, 20))


class BacktestMethod(str, enum.Enum):
    OPTION = "option"
    BASELINE_QUANTILE = "baseline-quantile"
    EXTERNAL = "external"

    @classmethod
    def parse(cls, value) -> "BacktestMethod":
        if isinstance(value, cls):
            return value
        aliases = {"persistence": cls.BASELINE_QUANTILE}
        if value in aliases:
            return aliases[value]
        try:
            return cls(value)
        except ValueError:
            raise ConfigurationError(
                f"unknown method {value!r}; expected one of option, persistence, external"
            ) from None


class Side(str, enum.Enum):
    OVER = "over"
    UNDER = "under"
    EXACT = "exact"


@dataclass(frozen=True)
class SplitSpec:
    train_frac: float = 0.5
    valid_frac: float = 0.2
    test_frac: float = 0.3

    def __post_init__(self):
        fracs = (self.train_frac, self.valid_frac, self.test_frac)
        if not all(math.isfinite(f) and f > 0 for f in fracs):
            raise ConfigurationError(f"split fractions must be positive, got {fracs}")
        if abs(sum(fracs) - 1.0) > 1e-9:
            raise ConfigurationError(f"split fractions must sum to 1, got {sum(fracs)!r}")

    def boundaries(self, length: int) -> tuple[int, int]:
        """Return ``(n1, n2)``, the first validation and first test index."""
        n1 = math.floor(length * self.train_frac)
        n2 = math.floor(length * (self.train_frac + self.valid_frac))
        sizes = {"train": n1, "validation": n2 - n1, "test": length - n2}
        for name, size in sizes.items():
            if size < MIN_WINDOW + 1:
                raise ConfigurationError(
                    f"{name} segment has {size} points for a series of length {length}; "
                    f"each segment needs at least {MIN_WINDOW + 1}"
                )
        return n1, n2


@dataclass(frozen=True)
class WindowGrid:
    """Candidate estimation windows. ``auto=True`` marks the default grid."""

    candidates: tuple[int, ...] = DEFAULT_GRID
    auto: bool = True

    def __post_init__(self):
        cands = tuple(sorted(set(int(c) for c in self.candidates)))
        if not cands:
            raise ConfigurationError("window grid is empty")
        if cands[0] < MIN_WINDOW:
            raise ConfigurationError(f"window candidates must be >= {MIN_WINDOW}, got {cands[0]}")
        object.__setattr__(self, "candidates", cands)

    @classmethod
    def explicit(cls, candidates: Iterable[int]) -> "WindowGrid":
        return cls(tuple(candidates), auto=False)

    def feasible(self, history: int) -> tuple[int, ...]:
        """Candidates usable when ``history`` observations precede the first prediction.

        The automatic grid falls back to ``3 .. history - 1`` when none of its
        defaults fit; an explicit grid with no feasible entry is an error.
        """
        ok = tuple(c for c in self.candidates if c <= history)
        if ok:
            return ok
        if self.auto and history - 1 >= MIN_WINDOW:
            return tuple(range(MIN_WINDOW, history))
        raise ConfigurationError(
            f"no feasible window: candidates {list(self.candidates)} all exceed the "
            f"{history} observations available before the first validation prediction"
        )


@dataclass(frozen=True)
class StepRecord:
    index: int
    actual: float
    predicted: float
    mu_hat: float
    sigma_hat: float
    side: Side = field(default=None)

    def __post_init__(self):
        if self.side is None:
            object.__setattr__(self, "side", side_of(self.actual, self.predicted))


def side_of(actual: float, predicted: float) -> Side:
    if actual > predicted:
        return Side.UNDER
    if actual < predicted:
        return Side.OVER
    return Side.EXACT


@dataclass(frozen=True)
class BacktestReport:
    wmae: float
    wmape: float
    chosen_window: int | None
    steps: tuple[StepRecord, ...]
    weights: CostWeights
    method: BacktestMethod
    validation_scores: dict = field(default_factory=dict)
    n1: int = 0
    n2: int = 0
    floored_steps: int = 0


def _errors(steps, weights):
    if len(steps) == 0:
        raise InvalidArgumentError("metric needs at least one step")
    actual = np.array([s.actual for s in steps], dtype=float)
    pred = np.array([s.predicted for s in steps], dtype=float)
    err = np.abs(actual - pred)
    w = np.where(actual > pred, weights.omega, np.where(actual < pred, 1.0, 0.0))
    return actual, w * err


def wmae(steps: Sequence[StepRecord], weights: CostWeights) -> float:
    """Mean absolute error with underestimates weighted by omega."""
    _, werr = _errors(steps, weights)
    return float(np.mean(werr))


def wmape(steps: Sequence[StepRecord], weights: CostWeights) -> float:
    """Weighted mean absolute percentage error, as a fraction (not x100)."""
    actual, werr = _errors(steps, weights)
    if np.any(actual <= 0):
        raise InvalidArgumentError("wmape requires every actual value to be > 0")
    return float(np.mean(werr / actual))


def predict_step(series, window, at_index, weights, method, floor_fraction=DEFAULT_FLOOR_FRACTION):
    """Predict index ``at_index + 1`` from the ``window`` observations ending at ``at_index``.

    Returns ``(predicted, mu_hat, sigma_hat, floored)``. For the persistence
    baseline, ``mu_hat``/``sigma_hat`` are the Gaussian predictive mean and sd.
    """
    method = BacktestMethod.parse(method)
    if method is BacktestMethod.OPTION:
        params, _ = estimate_params(series, window, at_index)
        pred = predict_analytic(float(series.values[at_index]), params, series.dt, weights)
        return pred.k_star, params.mu, params.sigma, False
    if method is BacktestMethod.BASELINE_QUANTILE:
        pred = predict_persistence_baseline(series, window, at_index, weights, floor_fraction)
        sd = rolling_difference_sd(series, window, at_index)
        return pred.k_star, float(series.values[at_index]), sd, pred.floored
    raise ConfigurationError("external forecasts are scored with evaluate_external, not predicted")


def rolling_predictions(series, window, start, stop, weights, method, floor_fraction=DEFAULT_FLOOR_FRACTION):
    """One-step predictions for every index in ``[start, stop)`` with a fixed window."""
    steps = []
    floored = 0
    for k in range(start, stop):
        predicted, mu_hat, sigma_hat, was_floored = predict_step(
            series, window, k - 1, weights, method, floor_fraction
        )
        floored += was_floored
        steps.append(StepRecord(k, float(series.values[k]), predicted, mu_hat, sigma_hat))
    return steps, floored


def select_window(series: TimeSeries, grid: WindowGrid, split: SplitSpec, weights: CostWeights, method="option"):
    """Choose the window with the lowest validation WMAE (ties go to the smaller window).

    Returns ``(chosen, scores)`` with ``scores`` mapping window -> WMAE.
    """
    n1, n2 = split.boundaries(len(series))
    scores = {}
    for n in grid.feasible(n1):
        steps, _ = rolling_predictions(series, n, n1, n2, weights, method)
        scores[n] = wmae(steps, weights)
    chosen = min(scores, key=lambda n: (scores[n], n))
    return chosen, scores


def run_backtest(
    series: TimeSeries,
    split: SplitSpec = SplitSpec(),
    grid: WindowGrid = WindowGrid(),
    weights: CostWeights = CostWeights(),
    method="option",
    floor_fraction: float = DEFAULT_FLOOR_FRACTION,
) -> BacktestReport:
    """Select a window on the validation segment, then predict across the test segment."""
    method = BacktestMethod.parse(method)
    n1, n2 = split.boundaries(len(series))
    chosen, scores = select_window(series, grid, split, weights, method)
    steps, floored = rolling_predictions(series, chosen, n2, len(series), weights, method, floor_fraction)
    return BacktestReport(
        wmae=wmae(steps, weights),
        wmape=wmape(steps, weights),
        chosen_window=chosen,
        steps=tuple(steps),
        weights=weights,
        method=method,
        validation_scores=scores,
        n1=n1,
        n2=n2,
        floored_steps=floored,
    )


def evaluate_external(
    series: TimeSeries,
    forecasts: Sequence[tuple[float, float]],
    split: SplitSpec = SplitSpec(),
    weights: CostWeights = CostWeights(),
) -> BacktestReport:
    """Score externally produced (mean, sd) forecasts over the test segment.

    Each forecast is turned into the omega/(1+omega) Gaussian quantile.
    """
    n1, n2 = split.boundaries(len(series))
    expected = len(series) - n2
    if len(forecasts) != expected:
        raise InvalidArgumentError(
            f"external forecasts must align with the test segment: expected {expected} "
            f"rows (indices {n2}..{len(series) - 1}), got {len(forecasts)}"
        )
    steps = []
    for k, (mean, sd) in zip(range(n2, len(series)), forecasts):
        predicted = predict_gaussian_quantile(float(mean), float(sd), weights)
        steps.append(StepRecord(k, float(series.values[k]), predicted, float(mean), float(sd)))
    return BacktestReport(
        wmae=wmae(steps, weights),
        wmape=wmape(steps, weights),
        chosen_window=None,
        steps=tuple(steps),
        weights=weights,
        method=BacktestMethod.EXTERNAL,
        n1=n1,
        n2=n2,
    )
