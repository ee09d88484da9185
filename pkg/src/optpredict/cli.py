"""Command-line front end: ``optpredict simulate|predict|backtest|compare``.

Configuration comes from built-in defaults, then an optional JSON file
(``--config``), then command-line flags, each layer overriding the last.
Every JSON report embeds the resolved configuration.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 internal error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field
from datetime import datetime
from typing import Any

from .errors import ConfigurationError, DataError, InsufficientDataError, OptPredictError
from .estimation import estimate_params
from .evaluation import (
    BacktestMethod,
    SplitSpec,
    WindowGrid,
    evaluate_external,
    run_backtest,
    select_window,
)
from .predictor import predict_analytic, predict_persistence_baseline, rolling_difference_sd
from .series import CostWeights, GbmParams, TimeSeries, simulate_gbm

DEFAULT_OMEGAS = (1 / 1.15, 1.0, 1.15)
ORDER_COLUMNS = ("index", "timestamp", "time", "date", "t")


@dataclass
class RunConfig:
    input_path: str | None = None
    value_column: str = "value"
    dt: float = 1.0
    p_over: float = 1.0
    p_under: float = 1.0
    train_frac: float = 0.5
    valid_frac: float = 0.2
    test_frac: float = 0.3
    window_grid: Any = "auto"
    method: str = "option"
    epsilon_shift: float = 0.0
    seed: int = 0
    output_path: str | None = None
    # simulate
    s0: float = 100.0
    mu: float = 0.0
    sigma: float = 0.0
    steps: int = 100
    # compare
    omegas: list = field(default_factory=lambda: list(DEFAULT_OMEGAS))
    external_path: str | None = None

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.window_grid != "auto":
            if isinstance(self.window_grid, (int, str)):
                self.window_grid = _parse_grid(self.window_grid)
            self.window_grid = [int(w) for w in self.window_grid]
        if self.method not in ("option", "persistence", "external"):
            raise ConfigurationError(
                f"method must be option, persistence or external, got {self.method!r}"
            )
        if not (math.isfinite(self.epsilon_shift) and self.epsilon_shift >= 0):
            raise ConfigurationError(f"epsilon_shift must be >= 0, got {self.epsilon_shift!r}")
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ConfigurationError(f"dt must be > 0, got {self.dt!r}")
        self.weights  # validates p_over/p_under
        self.split

    @property
    def weights(self) -> CostWeights:
        try:
            return CostWeights(self.p_over, self.p_under)
        except ValueError as exc:
            raise ConfigurationError(str(exc)) from None

    @property
    def split(self) -> SplitSpec:
        return SplitSpec(self.train_frac, self.valid_frac, self.test_frac)

    @property
    def grid(self) -> WindowGrid:
        if self.window_grid == "auto":
            return WindowGrid()
        return WindowGrid.explicit(self.window_grid)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)


def _parse_grid(text):
    if isinstance(text, int):
        return [text]
    text = text.strip()
    if text == "auto":
        return "auto"
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigurationError(f"window grid must be 'auto' or comma-separated integers, got {text!r}") from None


# ---------------------------------------------------------------- ingestion


@dataclass(frozen=True)
class Ingested:
    series: TimeSeries
    epsilon_shift: float
    shifted_rows: tuple[int, ...]


def _order_key(text):
    try:
        return float(text)
    except ValueError:
        pass
    try:
        return datetime.fromisoformat(text)
    except ValueError:
        return text


def read_series(path: str, value_column: str = "value", epsilon_shift: float = 0.0, dt: float = 1.0) -> Ingested:
    """Parse a CSV into a series, reporting which rows needed the epsilon shift.

    Row numbers in errors count the header as row 1.
    """
    if not os.path.exists(path):
        raise DataError(f"input file not found: {path}")
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise DataError(f"{path}: empty file, a header row is required")
        if value_column not in reader.fieldnames:
            raise DataError(f"{path}: column {value_column!r} not found in header {reader.fieldnames}")
        order_col = next((c for c in reader.fieldnames if c.lower() in ORDER_COLUMNS and c != value_column), None)
        values, shifted = [], []
        prev_key = None
        for row_no, row in enumerate(reader, start=2):
            cell = (row.get(value_column) or "").strip()
            try:
                x = float(cell)
            except ValueError:
                raise DataError(f"{path}: row {row_no}, column {value_column!r}: cannot parse {cell!r}") from None
            if not math.isfinite(x):
                raise DataError(f"{path}: row {row_no}, column {value_column!r}: non-finite value {cell!r}")
            if x <= 0:
                if epsilon_shift <= 0:
                    raise DataError(
                        f"{path}: row {row_no}, column {value_column!r}: value {x!r} is not positive "
                        "(set epsilon_shift to model nonpositive data)"
                    )
                shifted.append(row_no)
            if epsilon_shift > 0:
                x += epsilon_shift
                if x <= 0:
                    raise DataError(
                        f"{path}: row {row_no}, column {value_column!r}: value is still "
                        f"nonpositive after epsilon shift {epsilon_shift!r}"
                    )
            if order_col is not None:
                key = _order_key((row.get(order_col) or "").strip())
                try:
                    if prev_key is not None and not key > prev_key:
                        raise DataError(f"{path}: row {row_no}, column {order_col!r}: rows are not in time order")
                except TypeError:
                    raise DataError(f"{path}: row {row_no}, column {order_col!r}: mixed ordering values") from None
                prev_key = key
            values.append(x)
    if not values:
        raise DataError(f"{path}: no data rows")
    return Ingested(TimeSeries(values, dt), float(epsilon_shift), tuple(shifted))


def ingest_csv(path: str, value_column: str = "value", epsilon_shift: float = 0.0, dt: float = 1.0) -> TimeSeries:
    return read_series(path, value_column, epsilon_shift, dt).series


def read_external_forecasts(path: str) -> list[tuple[float, float]]:
    """Read ``mean,sd`` rows for the test segment."""
    if not os.path.exists(path):
        raise DataError(f"external forecast file not found: {path}")
    out = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = {"mean", "sd"} - set(reader.fieldnames or ())
        if missing:
            raise DataError(f"{path}: missing columns {sorted(missing)}")
        for row_no, row in enumerate(reader, start=2):
            try:
                mean, sd = float(row["mean"]), float(row["sd"])
            except ValueError:
                raise DataError(f"{path}: row {row_no}: cannot parse mean/sd") from None
            if not (math.isfinite(mean) and math.isfinite(sd) and sd >= 0):
                raise DataError(f"{path}: row {row_no}: need finite mean and sd >= 0")
            out.append((mean, sd))
    return out


# ---------------------------------------------------------------- output


def write_atomic(path: str, text: str):
    """Write via a temp file in the same directory and rename into place."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _steps_csv(steps) -> str:
    lines = ["index,actual,predicted,mu_hat,sigma_hat,side"]
    for s in steps:
        fields = (float(s.actual), float(s.predicted), float(s.mu_hat), float(s.sigma_hat))
        lines.append(f"{s.index}," + ",".join(repr(x) for x in fields) + f",{s.side.value}")
    return "\n".join(lines) + "\n"


def steps_path_for(output_path: str) -> str:
    root, _ = os.path.splitext(output_path)
    return root + ".steps.csv"


def _require(value, flag):
    if value is None:
        raise ConfigurationError(f"{flag} is required for this command")
    return value


# ---------------------------------------------------------------- commands


def cmd_simulate(config: RunConfig) -> str:
    out = _require(config.output_path, "--output")
    try:
        params = GbmParams(config.mu, config.sigma)
        series = simulate_gbm(config.s0, params, config.steps, config.dt, config.seed)
    except ValueError as exc:
        raise ConfigurationError(str(exc)) from None
    lines = ["index,value"] + [f"{i},{float(v)!r}" for i, v in enumerate(series.values)]
    write_atomic(out, "\n".join(lines) + "\n")
    return out


def _load(config: RunConfig) -> Ingested:
    return read_series(_require(config.input_path, "--input"), config.value_column, config.epsilon_shift, config.dt)


def _backtest_method(config):
    return BacktestMethod.parse(config.method)


def resolve_window(config: RunConfig, series: TimeSeries):
    """A single configured window is used as-is; otherwise select one on validation data."""
    if config.window_grid != "auto" and len(config.window_grid) == 1:
        return config.window_grid[0], None
    method = config.method if config.method != "external" else "option"
    chosen, scores = select_window(series, config.grid, config.split, config.weights, method)
    return chosen, scores


def predict_tail(series: TimeSeries, window: int, weights: CostWeights, method: str = "option") -> dict:
    """One-step-ahead prediction from the last ``window`` observations."""
    if window > len(series):
        raise InsufficientDataError(
            f"window {window} requires {window} observations, only {len(series)} available"
        )
    at = len(series) - 1
    if method == "persistence":
        pred = predict_persistence_baseline(series, window, at, weights)
        mu_hat, sigma_hat = float(series.values[at]), rolling_difference_sd(series, window, at)
    else:
        params, _ = estimate_params(series, window, at)
        pred = predict_analytic(float(series.values[at]), params, series.dt, weights)
        mu_hat, sigma_hat = params.mu, params.sigma
    return {
        "k_star": pred.k_star,
        "mu_hat": mu_hat,
        "sigma_hat": sigma_hat,
        "fractile": pred.fractile,
        "expected_cost": pred.expected_cost,
        "window": window,
    }


def cmd_predict(config: RunConfig) -> dict:
    out = _require(config.output_path, "--output")
    ing = _load(config)
    if config.method == "external":
        raise ConfigurationError("predict supports method option or persistence")
    window, scores = resolve_window(config, ing.series)
    result = predict_tail(ing.series, window, config.weights, config.method)
    if ing.epsilon_shift > 0:
        result["k_star_unshifted"] = max(result["k_star"] - ing.epsilon_shift, 0.0)
        result["shifted_rows"] = list(ing.shifted_rows)
    if scores is not None:
        result["validation_scores"] = {str(k): v for k, v in scores.items()}
    result["config"] = config.to_dict()
    write_atomic(out, _dump_json(result))
    return result


def _report_dict(report, config, steps_path, ing):
    return {
        "config": config.to_dict(),
        "method": report.method.value,
        "omega": report.weights.omega,
        "chosen_window": report.chosen_window,
        "validation_scores": {str(k): v for k, v in report.validation_scores.items()},
        "wmae": report.wmae,
        "wmape": report.wmape,
        "n_test": len(report.steps),
        "test_start_index": report.n2,
        "floored_steps": report.floored_steps,
        "shifted_rows": list(ing.shifted_rows),
        "steps_path": steps_path,
    }


def _run(config: RunConfig, series: TimeSeries, weights: CostWeights, method: BacktestMethod):
    if method is BacktestMethod.EXTERNAL:
        forecasts = read_external_forecasts(_require(config.external_path, "--external"))
        return evaluate_external(series, forecasts, config.split, weights)
    return run_backtest(series, config.split, config.grid, weights, method)


def cmd_backtest(config: RunConfig) -> dict:
    out = _require(config.output_path, "--output")
    ing = _load(config)
    report = _run(config, ing.series, config.weights, _backtest_method(config))
    steps_path = steps_path_for(out)
    result = _report_dict(report, config, os.path.basename(steps_path), ing)
    # steps first so a report never points at a missing steps file
    write_atomic(steps_path, _steps_csv(report.steps))
    write_atomic(out, _dump_json(result))
    return result


def cmd_compare(config: RunConfig, external_forecast_path: str | None = None) -> dict:
    """Score each method under each omega and mark the lowest error per metric."""
    out = _require(config.output_path, "--output")
    external_forecast_path = external_forecast_path or config.external_path
    ing = _load(config)
    methods = [BacktestMethod.OPTION, BacktestMethod.BASELINE_QUANTILE]
    forecasts = None
    if external_forecast_path:
        methods.append(BacktestMethod.EXTERNAL)
        forecasts = read_external_forecasts(external_forecast_path)
    rows, best = [], []
    for omega in config.omegas:
        weights = CostWeights.from_omega(float(omega))
        group = []
        for method in methods:
            if method is BacktestMethod.EXTERNAL:
                report = evaluate_external(ing.series, forecasts, config.split, weights)
            else:
                report = run_backtest(ing.series, config.split, config.grid, weights, method)
            group.append({
                "omega": weights.omega,
                "method": "persistence" if method is BacktestMethod.BASELINE_QUANTILE else method.value,
                "wmae": report.wmae,
                "wmape": report.wmape,
                "chosen_window": report.chosen_window,
            })
        for metric in ("wmae", "wmape"):
            low = min(r[metric] for r in group)
            best.append({
                "omega": weights.omega,
                "metric": metric,
                "methods": [r["method"] for r in group if r[metric] == low],
            })
        rows.extend(group)
    result = {"config": config.to_dict(), "rows": rows, "best": best}
    write_atomic(out, _dump_json(result))
    return result


# ---------------------------------------------------------------- argument parsing


def _add_common(p):
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--output", dest="output_path")
    p.add_argument("--dt", type=float)
    p.add_argument("--seed", type=int)


def _add_data(p):
    p.add_argument("--input", dest="input_path")
    p.add_argument("--value-column", dest="value_column")
    p.add_argument("--p-over", dest="p_over", type=float)
    p.add_argument("--p-under", dest="p_under", type=float)
    p.add_argument("--omega", type=float, help="underestimation/overestimation penalty ratio (implies p_over=1)")
    p.add_argument("--train-frac", dest="train_frac", type=float)
    p.add_argument("--valid-frac", dest="valid_frac", type=float)
    p.add_argument("--test-frac", dest="test_frac", type=float)
    p.add_argument("--windows", dest="window_grid", help="'auto' or comma-separated window sizes")
    p.add_argument("--window", type=int, help="shorthand for a single window size")
    p.add_argument("--method", choices=("option", "persistence", "external"))
    p.add_argument("--epsilon-shift", dest="epsilon_shift", type=float)
    p.add_argument("--external", dest="external_path", help="CSV of mean,sd forecasts for the test segment")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="optpredict", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write a synthetic GBM series as CSV")
    _add_common(p)
    p.add_argument("--s0", type=float)
    p.add_argument("--mu", type=float)
    p.add_argument("--sigma", type=float)
    p.add_argument("--steps", type=int)

    for name, text in (
        ("predict", "one-step-ahead prediction from the series tail"),
        ("backtest", "rolling-horizon backtest with validation window selection"),
        ("compare", "compare methods across several omega values"),
    ):
        p = sub.add_parser(name, help=text)
        _add_common(p)
        _add_data(p)
        if name == "compare":
            p.add_argument("--omegas", help="comma-separated omega values (default 1/1.15,1,1.15)")
    return parser


def config_from_args(args) -> RunConfig:
    data = {}
    if args.config:
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigurationError(f"cannot read config file: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"config file is not valid JSON: {exc}") from None
    flags = {k: v for k, v in vars(args).items() if v is not None and k not in ("command", "config", "omega", "window", "omegas")}
    data.update(flags)
    if getattr(args, "omega", None) is not None:
        data["p_over"], data["p_under"] = 1.0, args.omega
    if getattr(args, "window", None) is not None:
        data["window_grid"] = [args.window]
    if "window_grid" in data and isinstance(data["window_grid"], str):
        data["window_grid"] = _parse_grid(data["window_grid"])
    if getattr(args, "omegas", None):
        try:
            data["omegas"] = [_parse_float(x) for x in args.omegas.split(",")]
        except ValueError:
            raise ConfigurationError(f"cannot parse --omegas {args.omegas!r}") from None
    try:
        return RunConfig.from_dict(data)
    except TypeError as exc:
        raise ConfigurationError(str(exc)) from None


def _parse_float(text):
    text = text.strip()
    if "/" in text:
        num, den = text.split("/")
        return float(num) / float(den)
    return float(text)


COMMANDS = {
    "simulate": cmd_simulate,
    "predict": cmd_predict,
    "backtest": cmd_backtest,
    "compare": cmd_compare,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = config_from_args(args)
        COMMANDS[args.command](config)
    except OptPredictError as exc:
        return _fail(exc, exc.exit_code)
    except OSError as exc:
        return _fail(exc, DataError.exit_code)
    except Exception as exc:  # noqa: BLE001
        return _fail(exc, 4)
    return 0


def _fail(exc, code):
    sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc), "exit_code": code}) + "\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
