"""Command-line front end: ingest, fit, forecast, evaluate, backtest.

Runs are driven by a flat ``key = value`` config file (``#`` comments);
every value can be overridden by a matching command-line flag, and flags
win. There is no randomness anywhere, so identical configs produce
byte-identical artifacts. Exit codes: 0 ok, 2 data error, 3 solver error,
4 missing artifact.
"""

from __future__ import annotations

import argparse
import hashlib
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from datetime import date, datetime, time, timedelta

import numpy as np

from . import __version__
from .errors import DataError, MissingArtifact, QrloadError, SolverError
from .ingest import (
    HourlySeries,
    adjust_with_stats,
    dst_adjust,
    parse_csv,
    select_training_window,
)
from .modelio import atomic_write_text, load_model, save_model
from .pipeline import (
    ZoneModel,
    fit_zone,
    forecast,
    read_forecast_csv,
    write_forecast_csv,
)
from .quantreg import QUANTILE_GRID
from .scoring import (
    ScoreReport,
    format_report_text,
    improvement,
    score_grid,
    seasonal_naive_benchmark,
    task_schedule,
    write_report_csv,
)

CONFIG_KEYS = ("data", "zones", "last_in_sample", "forecast_start", "forecast_end",
               "rearrange", "output", "jobs", "allow_short_history", "tasks",
               "task_label")

_TRUE = {"true", "1", "yes", "on"}
_FALSE = {"false", "0", "no", "off"}


@dataclass
class RunConfig:
    data: str | None = None
    zones: list[str] | None = None
    last_in_sample: date | None = None
    forecast_start: date | None = None
    forecast_end: date | None = None
    rearrange: bool = True
    output: str = "out"
    jobs: int = 0  # 0 = number of processors
    allow_short_history: bool = False
    tasks: list[int] | None = None
    task_label: str = "adhoc"

    @property
    def n_jobs(self) -> int:
        return self.jobs if self.jobs > 0 else (os.cpu_count() or 1)

    def config_hash(self) -> str:
        pairs = []
        for key in CONFIG_KEYS:
            if key == "jobs":  # parallelism never changes results
                continue
            value = getattr(self, key)
            if isinstance(value, list):
                value = ",".join(str(v) for v in value)
            pairs.append(f"{key}={value}")
        return hashlib.sha256("\n".join(pairs).encode()).hexdigest()[:12]


def _parse_bool(text: str, key: str) -> bool:
    low = text.strip().lower()
    if low in _TRUE:
        return True
    if low in _FALSE:
        return False
    raise DataError(f"config key {key}: expected a boolean, got {text!r}")


def _parse_date(text: str, key: str) -> date:
    try:
        return date.fromisoformat(text.strip())
    except ValueError:
        raise DataError(f"config key {key}: expected YYYY-MM-DD, got {text!r}") from None


def load_config_file(path) -> dict[str, str]:
    if not os.path.exists(path):
        raise DataError(f"config file {path} not found")
    out: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise DataError(f"{path}:{lineno}: expected `key = value`")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in CONFIG_KEYS:
                raise DataError(f"{path}:{lineno}: unknown key {key!r}")
            out[key] = value
    return out


def _apply(cfg: RunConfig, key: str, value: str) -> None:
    if key == "data":
        cfg.data = value
    elif key == "zones":
        cfg.zones = [z.strip() for z in value.split(",") if z.strip()]
    elif key == "last_in_sample":
        cfg.last_in_sample = _parse_date(value, key)
    elif key == "forecast_start":
        cfg.forecast_start = _parse_date(value, key)
    elif key == "forecast_end":
        cfg.forecast_end = _parse_date(value, key)
    elif key == "rearrange":
        cfg.rearrange = _parse_bool(value, key)
    elif key == "output":
        cfg.output = value
    elif key == "jobs":
        cfg.jobs = int(value)
    elif key == "allow_short_history":
        cfg.allow_short_history = _parse_bool(value, key)
    elif key == "tasks":
        cfg.tasks = [int(v) for v in value.split(",") if v.strip()]
    elif key == "task_label":
        cfg.task_label = value


def resolve_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    if args.config:
        for key, value in load_config_file(args.config).items():
            _apply(cfg, key, value)
    flag_map = {
        "data": args.data, "zones": args.zones,
        "last_in_sample": args.last_in_sample,
        "forecast_start": args.forecast_start, "forecast_end": args.forecast_end,
        "output": args.output, "jobs": args.jobs, "tasks": getattr(args, "tasks", None),
        "task_label": getattr(args, "task_label", None),
    }
    for key, value in flag_map.items():
        if value is not None:
            _apply(cfg, key, str(value))
    if args.no_rearrange:
        cfg.rearrange = False
    if args.allow_short_history:
        cfg.allow_short_history = True
    return cfg


def _require(cfg: RunConfig, *keys: str) -> None:
    for key in keys:
        if getattr(cfg, key) in (None, []):
            raise DataError(f"missing required setting {key!r} (config file or flag)")


def discover_zones(path) -> list[str]:
    zones: dict[str, None] = {}
    with open(path, "r", encoding="utf-8") as fh:
        fh.readline()
        for line in fh:
            parts = line.split(",", 2)
            if len(parts) >= 2:
                zones.setdefault(parts[1], None)
    return sorted(zones)


def _load_series(data_path, zone: str) -> HourlySeries:
    return dst_adjust(parse_csv(data_path, zone))


def _zones(cfg: RunConfig) -> list[str]:
    _require(cfg, "data")
    if not os.path.exists(cfg.data):
        raise DataError(f"data file {cfg.data} not found")
    return cfg.zones if cfg.zones else discover_zones(cfg.data)


def _model_path(cfg: RunConfig, zone: str, suffix: str = "") -> str:
    return os.path.join(cfg.output, f"model_{zone}{suffix}.json")


def _header_comments(cfg: RunConfig) -> list[str]:
    return [f"qrload {__version__} config={cfg.config_hash()}"]


def cmd_ingest(cfg: RunConfig) -> int:
    zones = _zones(cfg)
    for zone in zones:
        records = parse_csv(cfg.data, zone)
        series, stats = adjust_with_stats(records)
        print(f"zone {zone}: {series.n_hours} rows ({series.n_days} days), "
              f"{series.start.date()}..{series.end.date()}, "
              f"{len(stats.averaged)} doubled hours averaged, "
              f"{len(stats.interpolated)} missing hours filled")
        for ts in stats.averaged:
            print(f"  averaged doubled hour {ts}")
        for ts in stats.interpolated:
            print(f"  filled missing hour {ts}")
    return 0


def _fit_worker(payload: dict) -> dict:
    cfg = RunConfig(**payload["cfg"])
    zone = payload["zone"]
    last_in_sample = date.fromisoformat(payload["last_in_sample"])
    series = _load_series(cfg.data, zone)
    train = select_training_window(series, last_in_sample,
                                   allow_short=cfg.allow_short_history)
    model = fit_zone(train)
    path = payload["model_path"]
    save_model(model, path, config_hash=cfg.config_hash())
    return {"zone": zone, "path": path, "train_days": train.n_days,
            "objective": model.qmodels.objective.tolist()}


def _run_jobs(worker, payloads, n_jobs: int) -> list[dict]:
    if n_jobs <= 1 or len(payloads) <= 1:
        return [worker(p) for p in payloads]
    with ProcessPoolExecutor(max_workers=min(n_jobs, len(payloads))) as pool:
        return list(pool.map(worker, payloads))


def _cfg_payload(cfg: RunConfig) -> dict:
    return {"data": cfg.data, "zones": cfg.zones,
            "last_in_sample": cfg.last_in_sample, "forecast_start": cfg.forecast_start,
            "forecast_end": cfg.forecast_end, "rearrange": cfg.rearrange,
            "output": cfg.output, "jobs": cfg.jobs,
            "allow_short_history": cfg.allow_short_history, "tasks": cfg.tasks,
            "task_label": cfg.task_label}


def _print_objectives(result: dict) -> None:
    objective = np.asarray(result["objective"])
    print(f"zone {result['zone']}: trained on {result['train_days']} days, "
          f"{objective.size} quantile fits -> {result['path']}")
    header = "  hour " + " ".join(f"{f'q{int(t*100)}':>9}" for t in QUANTILE_GRID)
    print(header)
    for hour in range(objective.shape[0]):
        cells = " ".join(f"{v:>9.4f}" for v in objective[hour])
        print(f"  {hour:>4} {cells}")


def cmd_fit(cfg: RunConfig) -> int:
    _require(cfg, "last_in_sample")
    zones = _zones(cfg)
    os.makedirs(cfg.output, exist_ok=True)
    payloads = [{"cfg": _cfg_payload(cfg), "zone": z,
                 "last_in_sample": cfg.last_in_sample.isoformat(),
                 "model_path": _model_path(cfg, z)} for z in zones]
    results = {r["zone"]: r for r in _run_jobs(_fit_worker, payloads, cfg.n_jobs)}
    for zone in zones:
        _print_objectives(results[zone])
    return 0


def cmd_forecast(cfg: RunConfig) -> int:
    _require(cfg, "forecast_start", "forecast_end")
    zones = _zones(cfg)
    window = (cfg.forecast_start, cfg.forecast_end)
    grids = []
    comments = _header_comments(cfg) + [f"rearrange={str(cfg.rearrange).lower()}"]
    for zone in zones:
        model = load_model(_model_path(cfg, zone))
        grid = forecast(model, window, rearrange=cfg.rearrange)
        grids.append(grid)
        comments.append(f"pre_sort_crossing_violations zone={zone} "
                        f"count={grid.pre_sort_violations}")
        print(f"zone {zone}: {grid.n_rows} hours forecast, "
              f"{grid.pre_sort_violations} crossing rows rearranged")
    os.makedirs(cfg.output, exist_ok=True)
    out_path = os.path.join(cfg.output, "forecasts.csv")
    write_forecast_csv(out_path, grids, comments=comments)
    print(f"wrote {out_path}")
    return 0


def _realized_for(series: HourlySeries, timestamps) -> np.ndarray:
    values = np.empty(len(timestamps))
    for i, ts in enumerate(timestamps):
        try:
            values[i] = series.load[series.index_of(ts)]
        except KeyError:
            raise DataError(f"zone {series.zone}: no realized load for {ts}") from None
    return values


def _history_until(series: HourlySeries, end_day: date) -> HourlySeries:
    end_ts = datetime.combine(end_day, time(23))
    if series.end < end_ts:
        return series
    return series.slice_hours(0, series.index_of(end_ts) + 1)


def cmd_evaluate(cfg: RunConfig) -> int:
    forecast_path = os.path.join(cfg.output, "forecasts.csv")
    if not os.path.exists(forecast_path):
        raise MissingArtifact(f"{forecast_path} not found (run `qrload forecast` first)")
    _require(cfg, "data")
    grids = read_forecast_csv(forecast_path)
    if cfg.zones:
        grids = [g for g in grids if g.zone in cfg.zones]
    reports = []
    for grid in grids:
        series = _load_series(cfg.data, grid.zone)
        realized = _realized_for(series, grid.timestamps)
        cut = cfg.last_in_sample or (grid.timestamps[0].date() - timedelta(days=1))
        history = _history_until(series, cut)
        window = (grid.timestamps[0], grid.timestamps[-1])
        bench = seasonal_naive_benchmark(history, window).with_realized(realized)
        model_score = score_grid(grid.with_realized(realized))
        bench_score = score_grid(bench)
        reports.append(ScoreReport(zone=grid.zone, task=cfg.task_label,
                                   model_score=model_score, benchmark_score=bench_score,
                                   improvement_pct=improvement(model_score, bench_score)))
    text = format_report_text(reports)
    write_report_csv(os.path.join(cfg.output, "report.csv"), reports,
                     comments=_header_comments(cfg))
    atomic_write_text(os.path.join(cfg.output, "report.txt"), text)
    print(text, end="")
    return 0


def cmd_backtest(cfg: RunConfig) -> int:
    zones = _zones(cfg)
    tasks = task_schedule()
    if cfg.tasks:
        tasks = [t for t in tasks if t.number in cfg.tasks]
        if not tasks:
            raise DataError(f"no tasks match filter {cfg.tasks}")
    os.makedirs(cfg.output, exist_ok=True)

    fits = sorted({(zone, t.last_in_sample) for zone in zones for t in tasks})
    payloads = [{"cfg": _cfg_payload(cfg), "zone": zone,
                 "last_in_sample": cut.isoformat(),
                 "model_path": _model_path(cfg, zone, f"__{cut.isoformat()}")}
                for zone, cut in fits]
    results = _run_jobs(_fit_worker, payloads, cfg.n_jobs)
    model_paths = {(fits[i][0], fits[i][1]): results[i]["path"] for i in range(len(fits))}
    for result in results:
        print(f"fitted zone {result['zone']} (train {result['train_days']} days) "
              f"-> {result['path']}")

    reports = []
    weights = {}
    for task in tasks:
        label = f"task{task.number}"
        weights[label] = task.weight
        for zone in zones:
            model = load_model(model_paths[(zone, task.last_in_sample)])
            grid = forecast(model, (task.window_start, task.window_end),
                            rearrange=cfg.rearrange)
            series = _load_series(cfg.data, zone)
            realized = _realized_for(series, grid.timestamps)
            history = _history_until(series, task.last_in_sample)
            bench = seasonal_naive_benchmark(
                history, (task.window_start, task.window_end)).with_realized(realized)
            model_score = score_grid(grid.with_realized(realized))
            bench_score = score_grid(bench)
            reports.append(ScoreReport(zone=zone, task=label, model_score=model_score,
                                       benchmark_score=bench_score,
                                       improvement_pct=improvement(model_score, bench_score)))
    text = format_report_text(reports, weights=weights)
    write_report_csv(os.path.join(cfg.output, "backtest_report.csv"), reports,
                     comments=_header_comments(cfg))
    atomic_write_text(os.path.join(cfg.output, "backtest_report.txt"), text)
    print(text, end="")
    return 0


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="flat key = value config file")
    sub.add_argument("--data", help="input CSV (timestamp,zone,load_mw,drybulb_f)")
    sub.add_argument("--zones", help="comma-separated zone list (default: all in file)")
    sub.add_argument("--last-in-sample", dest="last_in_sample",
                     help="last training day, YYYY-MM-DD")
    sub.add_argument("--forecast-start", dest="forecast_start", help="YYYY-MM-DD")
    sub.add_argument("--forecast-end", dest="forecast_end", help="YYYY-MM-DD")
    sub.add_argument("--output", help="output directory (default: out)")
    sub.add_argument("--jobs", type=int, help="worker processes (default: all cores)")
    sub.add_argument("--no-rearrange", action="store_true",
                     help="emit raw, possibly crossing quantiles")
    sub.add_argument("--allow-short-history", action="store_true",
                     help="train on all available days when history is short")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qrload",
                                     description="Probabilistic load forecasting runs")
    parser.add_argument("--version", action="version", version=f"qrload {__version__}")
    subs = parser.add_subparsers(dest="command")
    specs = [
        ("ingest", cmd_ingest, "validate and summarize the input data"),
        ("fit", cmd_fit, "fit per-zone models and write model files"),
        ("forecast", cmd_forecast, "forecast from saved models, write forecasts.csv"),
        ("evaluate", cmd_evaluate, "score forecasts.csv against realized data"),
        ("backtest", cmd_backtest, "run the six-task schedule over a dataset"),
    ]
    for name, func, help_text in specs:
        sub = subs.add_parser(name, help=help_text)
        _add_common(sub)
        if name == "evaluate":
            sub.add_argument("--task-label", dest="task_label",
                             help="task name used in the report (default: adhoc)")
        if name == "backtest":
            sub.add_argument("--tasks", help="comma-separated task numbers to run")
        sub.set_defaults(cmd=func)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "cmd"):
        parser.print_help()
        return 2
    try:
        return args.cmd(resolve_config(args))
    except MissingArtifact as e:
        print(f"error: {e}", file=sys.stderr)
        return 4
    except SolverError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 3
    except (QrloadError, OSError) as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
