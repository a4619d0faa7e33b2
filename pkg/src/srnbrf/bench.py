"""Benchmark harness: run a method matrix over datasets and emit a
table-shaped report.

Every method evaluated on a dataset shares one fold plan, built from
``(seed, dataset id)``; the plan's digest is written on every row so the
shared partition can be checked after the fact.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
import time
import zlib
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from joblib import Parallel, delayed

from .dataset import DatasetError, class_stats, load
from .evaluation import (
    DEFAULT_GRID,
    METRICS,
    LearnerSpec,
    evaluate_sampler,
    evaluate_with_alpha_grid,
    feasible_grid,
    stratified_kfold,
)
from .samplers import SAMPLERS, SamplerConfig

log = logging.getLogger("srnbrf.bench")

DATA_DIR_ENV = "SRNBRF_DATA_DIR"
SAMPLER_METHODS = tuple(SAMPLERS)
ENSEMBLE_METHODS = {"rf": "plain-rf", "brf": "brf", "srn-brf": "srn-brf"}
METHODS = SAMPLER_METHODS + tuple(ENSEMBLE_METHODS)
CSV_COLUMNS = ("dataset", "imbalance_ratio", "method", *METRICS, "chosen_alpha", "runtime_s", "seed",
               "grid_selected", "plan_hash", "status")
DATA_SUFFIXES = (".dat", ".csv")


class ConfigError(ValueError):
    pass


@dataclass
class BenchmarkConfig:
    data_dir: str = ""
    datasets: list[str] | str = "all"
    methods: list[str] = field(default_factory=lambda: ["none", "smote", "rus", "smote-rus-nc"])
    n_folds: int = 10
    seed: int = 0
    # "default" = 0.3..0.6 filtered for feasibility, "off" = the single alpha_rus below
    alpha_grid: list[float] | str = "default"
    alpha_rus: float = 0.5
    k_nc: int = 3
    k_smote: int = 5
    n_trees: int = 100
    output: str = "report.csv"
    format: str = "csv"
    n_jobs: int = 1
    timing: bool = False

    def validate(self) -> "BenchmarkConfig":
        if not self.methods:
            raise ConfigError("methods must not be empty")
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown:
            raise ConfigError(f"unknown methods {unknown}; choose from {list(METHODS)}")
        if self.n_folds < 2:
            raise ConfigError("n_folds must be at least 2")
        if self.n_trees < 1:
            raise ConfigError("n_trees must be at least 1")
        if self.format not in ("csv", "json"):
            raise ConfigError("format must be csv or json")
        if isinstance(self.alpha_grid, str) and self.alpha_grid not in ("default", "off"):
            raise ConfigError("alpha_grid must be a list of reals, 'default' or 'off'")
        try:
            self.sampler_config()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        return self

    def sampler_config(self) -> SamplerConfig:
        return SamplerConfig(alpha_rus=self.alpha_rus, k_nc=self.k_nc, k_smote=self.k_smote, seed=self.seed)


def _split_list(value: str) -> list[str]:
    return [v.strip() for v in value.split(",") if v.strip()]


def _coerce(name: str, raw: str):
    raw = raw.strip()
    if name in ("datasets",):
        return "all" if raw == "all" else _split_list(raw)
    if name == "methods":
        return _split_list(raw)
    if name == "alpha_grid":
        if raw in ("default", "off"):
            return raw
        try:
            return [float(v) for v in _split_list(raw)]
        except ValueError:
            raise ConfigError(f"bad alpha_grid {raw!r}") from None
    if name in ("n_folds", "seed", "k_nc", "k_smote", "n_trees", "n_jobs"):
        return int(raw)
    if name == "alpha_rus":
        return float(raw)
    if name == "timing":
        return raw.lower() in ("1", "true", "yes", "on")
    return raw


def parse_config(text: str, base: BenchmarkConfig | None = None) -> BenchmarkConfig:
    """Flat ``key = value`` lines; ``#`` starts a comment; lists are comma separated."""
    values = {}
    known = {f.name for f in fields(BenchmarkConfig)}
    aliases = {"folds": "n_folds", "trees": "n_trees", "out": "output", "jobs": "n_jobs"}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, raw = (s.strip() for s in line.split("=", 1))
        key = aliases.get(key.replace("-", "_"), key.replace("-", "_"))
        if key not in known:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            values[key] = _coerce(key, raw)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: {exc}") from None
    cfg = BenchmarkConfig(**{**asdict(base or BenchmarkConfig()), **values})
    return cfg


@dataclass
class MetricRow:
    dataset: str
    imbalance_ratio: float
    method: str
    metric: str
    mean: float
    per_fold: list[float]
    chosen_alpha: float | None
    runtime_s: float
    seed: int
    plan_hash: str
    grid_selected: bool = False
    status: str = "ok"


@dataclass
class BenchmarkReport:
    rows: list[MetricRow] = field(default_factory=list)

    @property
    def failures(self) -> list[MetricRow]:
        return [r for r in self.rows if r.status != "ok"]

    def cells(self) -> list[list[MetricRow]]:
        """Rows grouped per (dataset, method), in report order."""
        groups: dict[tuple[str, str], list[MetricRow]] = {}
        for r in self.rows:
            groups.setdefault((r.dataset, r.method), []).append(r)
        return list(groups.values())

    def value(self, dataset: str, method: str, metric: str) -> float:
        for r in self.rows:
            if (r.dataset, r.method, r.metric) == (dataset, method, metric):
                return r.mean
        raise KeyError((dataset, method, metric))


@dataclass
class DatasetInfo:
    id: str
    n: int = 0
    d: int = 0
    rho: float = math.nan
    path: str = ""
    error: str | None = None


def list_datasets(data_dir) -> list[DatasetInfo]:
    """Every loadable ``.dat``/``.csv`` in ``data_dir``, sorted by imbalance ratio.

    Files that fail to load are kept as entries with ``error`` set, after the
    good ones.
    """
    root = Path(data_dir)
    if not root.is_dir():
        raise NotADirectoryError(f"{root} is not a readable directory")
    good, bad = [], []
    for path in sorted(p for p in root.iterdir() if p.suffix.lower() in DATA_SUFFIXES):
        try:
            data = load(path)
        except (DatasetError, OSError, UnicodeDecodeError) as exc:
            bad.append(DatasetInfo(path.stem, path=str(path), error=str(exc)))
            continue
        good.append(DatasetInfo(path.stem, data.n, data.d, class_stats(data).rho, str(path)))
    good.sort(key=lambda e: (e.rho, e.id))
    return good + bad


def _resolve_datasets(config: BenchmarkConfig) -> list[Path]:
    root = Path(config.data_dir or os.environ.get(DATA_DIR_ENV, ""))
    if not str(root) or not root.is_dir():
        raise ConfigError(f"data directory {str(root)!r} not found (set data_dir or ${DATA_DIR_ENV})")
    if config.datasets == "all":
        entries = [e for e in list_datasets(root) if e.error is None]
        return [Path(e.path) for e in entries]
    paths = []
    for ds in config.datasets:
        hits = [root / f"{ds}{suffix}" for suffix in DATA_SUFFIXES if (root / f"{ds}{suffix}").is_file()]
        if not hits:
            raise ConfigError(f"dataset {ds!r} not found in {root}")
        paths.append(hits[0])
    return paths


def plan_seed(seed: int, dataset_id: str) -> int:
    return (int(seed) * 1_000_003 + zlib.crc32(dataset_id.encode("utf-8"))) % 2**63


def _run_cell(data, method: str, config: BenchmarkConfig, plan, grid):
    cfg = config.sampler_config()
    if method in ENSEMBLE_METHODS:
        learner = LearnerSpec(ENSEMBLE_METHODS[method], config.n_trees)
        return evaluate_sampler(data, "none", cfg, learner, plan, method=method)
    learner = LearnerSpec("plain-rf", config.n_trees)
    if method == "smote-rus-nc" and grid is not None:
        rep = evaluate_with_alpha_grid(data, cfg, grid, plan, learner)
        rep.method = method
        return rep
    rep = evaluate_sampler(data, method, cfg, learner, plan)
    if method == "smote-rus-nc":
        rep.chosen_alpha = cfg.alpha_rus
    return rep


def _cell_rows(data, method, config, plan, grid) -> list[MetricRow]:
    rho = class_stats(data).rho
    start = time.perf_counter()
    try:
        rep = _run_cell(data, method, config, plan, grid)
    except Exception as exc:  # recorded, not fatal to the run
        log.error("%s / %s failed: %s", data.name, method, exc)
        return [MetricRow(data.name, rho, method, m, math.nan, [], None, time.perf_counter() - start,
                          config.seed, plan.digest(), status=f"error: {type(exc).__name__}: {exc}")
                for m in METRICS]
    runtime = time.perf_counter() - start
    log.info("%s / %s: gmean %.4f (%.1fs)", data.name, method, rep.mean["gmean"], runtime)
    return [
        MetricRow(data.name, rho, method, m, rep.mean[m], [getattr(f, m) for f in rep.per_fold],
                  rep.chosen_alpha, runtime, config.seed, rep.plan_digest, rep.grid_selected)
        for m in METRICS
    ]


def run(config: BenchmarkConfig) -> BenchmarkReport:
    config.validate()
    paths = _resolve_datasets(config)
    datasets = [load(p) for p in paths]
    jobs = []
    for data in datasets:
        plan = stratified_kfold(data.labels, config.n_folds, plan_seed(config.seed, data.name))
        grid = None
        if "smote-rus-nc" in config.methods and config.alpha_grid != "off":
            wanted = DEFAULT_GRID if config.alpha_grid == "default" else config.alpha_grid
            grid = feasible_grid(data, wanted, plan, config.k_nc)
        for method in config.methods:
            jobs.append((data, method, plan, grid))
    log.info("running %d dataset x method cells", len(jobs))
    if config.n_jobs == 1:
        results = [_cell_rows(d, m, config, p, g) for d, m, p, g in jobs]
    else:
        results = Parallel(n_jobs=config.n_jobs)(delayed(_cell_rows)(d, m, config, p, g) for d, m, p, g in jobs)
    return BenchmarkReport([row for rows in results for row in rows])


def _pct(v: float) -> str:
    return "" if math.isnan(v) else f"{100 * v:.2f}"


def emit(report: BenchmarkReport, path, fmt: str = "csv", timing: bool = True) -> None:
    """Write the report. CSV is wide (one line per dataset x method, metrics
    as percentages to 2 decimals); JSON keeps raw values and per-fold arrays.

    ``timing=False`` blanks the runtime column so that reruns are byte-identical.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "csv":
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_COLUMNS)
            for cell in report.cells():
                head = cell[0]
                by_metric = {r.metric: r.mean for r in cell}
                w.writerow([
                    head.dataset,
                    f"{head.imbalance_ratio:.2f}",
                    head.method,
                    *(_pct(by_metric.get(m, math.nan)) for m in METRICS),
                    "" if head.chosen_alpha is None else f"{head.chosen_alpha:g}",
                    f"{head.runtime_s:.2f}" if timing else "",
                    head.seed,
                    str(head.grid_selected).lower(),
                    head.plan_hash,
                    head.status,
                ])
    elif fmt == "json":
        doc = {"columns": list(CSV_COLUMNS), "rows": [_json_row(c, timing) for c in report.cells()]}
        path.write_text(json.dumps(doc, indent=1, allow_nan=False) + "\n")
    else:
        raise ValueError(f"unknown format {fmt!r}")


def _nan_to_none(v):
    return None if isinstance(v, float) and math.isnan(v) else v


def _json_row(cell: list[MetricRow], timing: bool) -> dict:
    head = cell[0]
    return {
        "dataset": head.dataset,
        "imbalance_ratio": head.imbalance_ratio,
        "method": head.method,
        "chosen_alpha": head.chosen_alpha,
        "runtime_s": head.runtime_s if timing else None,
        "seed": head.seed,
        "grid_selected": head.grid_selected,
        "plan_hash": head.plan_hash,
        "status": head.status,
        "metrics": {r.metric: {"mean": _nan_to_none(r.mean), "per_fold": [_nan_to_none(v) for v in r.per_fold]}
                    for r in cell},
    }


def read_json(path) -> BenchmarkReport:
    """Inverse of ``emit(..., fmt="json")``; nulls come back as NaN."""
    doc = json.loads(Path(path).read_text())
    back = lambda v: math.nan if v is None else v
    rows = []
    for r in doc["rows"]:
        for metric, vals in r["metrics"].items():
            rows.append(MetricRow(r["dataset"], r["imbalance_ratio"], r["method"], metric, back(vals["mean"]),
                                  [back(v) for v in vals["per_fold"]], r["chosen_alpha"],
                                  r["runtime_s"] if r["runtime_s"] is not None else math.nan, r["seed"],
                                  r["plan_hash"], r["grid_selected"], r["status"]))
    return BenchmarkReport(rows)


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bench", description="Imbalanced-learning benchmark over KEEL/CSV datasets.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="evaluate a method matrix with stratified cross-validation")
    r.add_argument("--config", type=Path, help="flat key = value config file")
    r.add_argument("--data-dir")
    r.add_argument("--datasets", help="comma-separated ids or 'all'")
    r.add_argument("--methods", help=f"comma-separated, from {','.join(METHODS)}")
    r.add_argument("--seed", type=int)
    r.add_argument("--folds", type=int)
    r.add_argument("--alpha-grid", help="comma-separated reals, 'default' or 'off'")
    r.add_argument("--trees", type=int)
    r.add_argument("--jobs", type=int)
    r.add_argument("--out")
    r.add_argument("--format", choices=["csv", "json"])
    r.add_argument("--timing", action="store_true", help="record wall-clock runtime in the CSV")
    ls = sub.add_parser("list", help="list datasets with size and imbalance ratio")
    ls.add_argument("--data-dir")
    return ap


def _config_from_args(args) -> BenchmarkConfig:
    cfg = parse_config(args.config.read_text()) if args.config else BenchmarkConfig()
    overrides = {
        "data_dir": args.data_dir, "datasets": args.datasets, "methods": args.methods, "seed": args.seed,
        "n_folds": args.folds, "alpha_grid": args.alpha_grid, "n_trees": args.trees, "n_jobs": args.jobs,
        "output": args.out, "format": args.format,
    }
    text = "\n".join(f"{k} = {v}" for k, v in overrides.items() if v is not None)
    cfg = parse_config(text, cfg)
    if args.timing:
        cfg.timing = True
    return cfg


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose or args.command == "run" else logging.WARNING,
                        stream=sys.stderr, format="%(asctime)s %(levelname)s %(message)s")
    if args.command == "list":
        data_dir = args.data_dir or os.environ.get(DATA_DIR_ENV)
        if not data_dir:
            print(f"no data directory (use --data-dir or ${DATA_DIR_ENV})", file=sys.stderr)
            return 2
        try:
            entries = list_datasets(data_dir)
        except OSError as exc:
            print(exc, file=sys.stderr)
            return 2
        print(f"{'dataset':<30} {'n':>6} {'d':>4} {'IR':>8}")
        for e in entries:
            if e.error:
                print(f"{e.id:<30} error: {e.error}")
            else:
                print(f"{e.id:<30} {e.n:>6} {e.d:>4} {e.rho:>8.2f}")
        return 1 if any(e.error for e in entries) else 0
    try:
        config = _config_from_args(args).validate()
        report = run(config)
    except (ConfigError, DatasetError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    emit(report, config.output, config.format, timing=config.timing)
    log.info("wrote %s", config.output)
    return 1 if report.failures else 0


if __name__ == "__main__":
    sys.exit(main())
