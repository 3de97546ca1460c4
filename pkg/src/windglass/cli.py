"""Command-line surface: train, evaluate, benchmark, and explain.

Runs are driven by an INI-style config file (flat ``key = value`` pairs
under sections); any key can be overridden on the command line with
``--set section.key=value``, and the flag wins. Every command is
deterministic under a fixed seed and emits machine-readable CSV next to
its human-readable output.

Exit codes: 0 success, 2 usage error, 3 data error, 4 model-file error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import sys
import time
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from . import baselines, explain, glassbox, metrics
from .data import (
    CsvSchema,
    DataSplit,
    SupervisedMatrix,
    bin_centers,
    build_exogenous_features,
    build_lag_features,
    chronological_split,
    load_csv,
    normalize_apply,
    normalize_fit_apply,
)
from .glassbox import GlassBoxModel, TrainConfig
from .model_io import ModelFormatError, load_model, save_model

MODEL_KINDS = ("windebm", "windebm-no-interactions", "lr", "rt", "pm")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_MODEL = 4


class UsageError(Exception):
    """Bad flags or config keys; maps to exit code 2."""


# ---------------------------------------------------------------------------
# Run configuration
# ---------------------------------------------------------------------------

_TRAIN_FIELDS = {f.name: f.type for f in fields(TrainConfig)}

_KNOWN_KEYS = {
    "data": {"path", "timestamp_column", "target_column", "timestamp_format",
             "delimiter", "exogenous_columns"},
    "features": {"mode", "n_lags", "horizon_steps"},
    "split": {"train", "validation", "test"},
    "model": {"kind"},
    "train": set(_TRAIN_FIELDS),
    "output": {"directory", "model_file"},
    "benchmark": {"models", "horizons", "repeats"},
}


@dataclass
class RunConfig:
    """Everything one run needs, assembled from file plus overrides."""

    data_path: str
    timestamp_column: str
    target_column: str
    timestamp_format: str = "iso8601"
    delimiter: str = ","
    exogenous_columns: tuple[str, ...] | None = None
    feature_mode: str = "lags"
    n_lags: int = 48
    horizon_steps: int = 1
    fractions: tuple[float, float, float] = (0.8, 0.1, 0.1)
    model_kind: str = "windebm"
    train_config: TrainConfig = None
    out_dir: str = "out"
    model_file: str | None = None
    bench_models: tuple[str, ...] = ("windebm", "lr", "rt", "pm")
    bench_horizons: tuple[int, ...] = (1,)
    bench_repeats: int = 1

    def validate(self):
        if self.feature_mode not in ("lags", "exogenous"):
            raise UsageError(f"features.mode must be lags or exogenous, "
                             f"got {self.feature_mode!r}")
        if self.model_kind not in MODEL_KINDS:
            raise UsageError(f"model.kind must be one of {', '.join(MODEL_KINDS)}")
        if self.model_kind == "pm" and self.feature_mode != "lags":
            raise UsageError("the persistence model requires lag features")
        if self.timestamp_format not in ("iso8601", "epoch"):
            raise UsageError("data.timestamp_format must be iso8601 or epoch")
        for m in self.bench_models:
            if m not in MODEL_KINDS:
                raise UsageError(f"unknown benchmark model {m!r}")
        if self.bench_repeats < 1:
            raise UsageError("benchmark.repeats must be >= 1")


def _parse_train_value(key: str, raw: str):
    raw = raw.strip()
    if key == "interaction_budget":
        return raw if raw in ("auto", "all") else int(raw)
    typ = _TRAIN_FIELDS[key]
    if typ in ("int", int):
        return int(raw)
    return float(raw)


def read_run_config(path, overrides=()) -> RunConfig:
    """Parse the config file, apply --set overrides, and validate."""
    parser = configparser.ConfigParser(interpolation=None)
    loaded = parser.read(path)
    if not loaded:
        raise UsageError(f"cannot read config file: {path}")
    for item in overrides:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise UsageError(f"--set expects section.key=value, got {item!r}")
        target, value = item.split("=", 1)
        section, key = target.split(".", 1)
        section, key = section.strip(), key.strip()
        if not parser.has_section(section):
            parser.add_section(section)
        parser.set(section, key, value.strip())

    for section in parser.sections():
        if section not in _KNOWN_KEYS:
            raise UsageError(f"unknown config section [{section}]")
        for key in parser[section]:
            if key not in _KNOWN_KEYS[section]:
                raise UsageError(f"unknown config key {section}.{key}")

    def get(section, key, default=None):
        if parser.has_option(section, key):
            return parser.get(section, key)
        return default

    if not get("data", "path"):
        raise UsageError("config is missing data.path")
    if not get("data", "timestamp_column") or not get("data", "target_column"):
        raise UsageError("config is missing data.timestamp_column / data.target_column")

    exo = get("data", "exogenous_columns")
    exo_cols = None if exo is None else tuple(
        c.strip() for c in exo.split(",") if c.strip())

    train_kwargs = {}
    if parser.has_section("train"):
        for key, raw in parser["train"].items():
            train_kwargs[key] = _parse_train_value(key, raw)

    try:
        cfg = RunConfig(
            data_path=get("data", "path"),
            timestamp_column=get("data", "timestamp_column"),
            target_column=get("data", "target_column"),
            timestamp_format=get("data", "timestamp_format", "iso8601"),
            delimiter=get("data", "delimiter", ","),
            exogenous_columns=exo_cols,
            feature_mode=get("features", "mode", "lags"),
            n_lags=int(get("features", "n_lags", "48")),
            horizon_steps=int(get("features", "horizon_steps", "1")),
            fractions=(
                float(get("split", "train", "0.8")),
                float(get("split", "validation", "0.1")),
                float(get("split", "test", "0.1")),
            ),
            model_kind=get("model", "kind", "windebm"),
            train_config=TrainConfig(**train_kwargs),
            out_dir=get("output", "directory", "out"),
            model_file=get("output", "model_file"),
            bench_models=tuple(
                m.strip() for m in
                get("benchmark", "models", "windebm,lr,rt,pm").split(",")
                if m.strip()),
            bench_horizons=tuple(
                int(h) for h in get("benchmark", "horizons", "1").split(",")
                if h.strip()),
            bench_repeats=int(get("benchmark", "repeats", "1")),
        )
    except ValueError as exc:
        raise UsageError(f"bad config value: {exc}") from None
    cfg.validate()
    return cfg


# ---------------------------------------------------------------------------
# Shared pipeline steps
# ---------------------------------------------------------------------------

def _schema(cfg: RunConfig) -> CsvSchema:
    return CsvSchema(
        timestamp_column=cfg.timestamp_column,
        target_column=cfg.target_column,
        exogenous_columns=cfg.exogenous_columns,
        timestamp_format=cfg.timestamp_format,
        delimiter=cfg.delimiter,
    )


def _build_raw_matrix(cfg: RunConfig, horizon: int | None = None) -> SupervisedMatrix:
    frame = load_csv(cfg.data_path, _schema(cfg))
    if frame.dropped_rows:
        print(f"note: dropped {frame.dropped_rows} invalid rows during ingestion")
    if cfg.feature_mode == "lags":
        return build_lag_features(frame, cfg.n_lags, horizon or cfg.horizon_steps)
    return build_exogenous_features(frame)


def _fit_kind(kind: str, matrix: SupervisedMatrix, split, tc: TrainConfig):
    """Train one model kind on a normalized matrix. Returns the model."""
    if kind == "windebm":
        return glassbox.train(matrix, split, tc)
    if kind == "windebm-no-interactions":
        return glassbox.train(matrix, split, replace(tc, interaction_budget=0))
    if kind == "lr":
        return baselines.fit_ols(matrix, split.train)
    if kind == "rt":
        return baselines.fit_rt_baseline(matrix, split.train,
                                         max_bins=tc.max_bins)
    if kind == "pm":
        return baselines.PersistenceModel.from_matrix(matrix)
    raise UsageError(f"unknown model kind {kind!r}")


def clamp_unit(values: np.ndarray) -> np.ndarray:
    """Presentation-time clamp of forecasts to [0, 1]. Applied only at
    output so the additive breakdown stays exact."""
    return np.clip(values, 0.0, 1.0)


def _matrix_for_model(cfg: RunConfig, model) -> tuple[SupervisedMatrix, DataSplit]:
    """Rebuild the supervised matrix with the model's own normalization."""
    raw = _build_raw_matrix(cfg)
    split = chronological_split(raw.n_rows, cfg.fractions)
    if model.norm_params is None:
        raise ValueError("model file carries no normalization parameters")
    if len(model.feature_names) != raw.n_features:
        raise ValueError(
            f"model expects {len(model.feature_names)} features but the "
            f"configured data produces {raw.n_features}"
        )
    return normalize_apply(raw, model.norm_params), split


def _range_slice(split, name: str) -> slice:
    try:
        return {"train": split.train_slice, "val": split.val_slice,
                "test": split.test_slice}[name]
    except KeyError:
        raise UsageError(f"--range must be train, val, or test, got {name!r}") from None


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_train(args) -> int:
    cfg = read_run_config(args.config, args.set or ())
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    raw = _build_raw_matrix(cfg)
    split = chronological_split(raw.n_rows, cfg.fractions)
    matrix = normalize_fit_apply(raw, split.train)

    t0 = time.perf_counter()
    model = _fit_kind(cfg.model_kind, matrix, split, cfg.train_config)
    elapsed = time.perf_counter() - t0

    model_path = out / (cfg.model_file or f"{cfg.model_kind}.model.json")
    save_model(model, model_path)

    log_lines = [
        f"model_kind: {cfg.model_kind}",
        f"rows: {matrix.n_rows} features: {matrix.n_features}",
        f"split: train={split.train} val={split.val} test={split.test}",
        f"training_seconds: {elapsed:.3f}",
    ]
    if isinstance(model, GlassBoxModel):
        log_lines += [
            f"rounds_main: {model.rounds_main}",
            f"rounds_pairs: {model.rounds_pairs}",
            f"pairs: {[(p.i, p.j) for p in model.pairs]}",
            "validation_curve_main: "
            + " ".join(f"{v:.6f}" for v in model.val_curve_main),
            "validation_curve_pairs: "
            + " ".join(f"{v:.6f}" for v in model.val_curve_pairs),
        ]
    (out / "train.log").write_text("\n".join(log_lines) + "\n")
    print(f"saved {model_path} (trained in {elapsed:.2f}s)")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    model = load_model(args.model)
    cfg = read_run_config(args.config, args.set or ())
    matrix, split = _matrix_for_model(cfg, model)
    rows = _range_slice(split, args.range)

    X = matrix.X[rows]
    t0 = time.perf_counter()
    forecast = clamp_unit(model.predict(X))
    inference = time.perf_counter() - t0
    report = metrics.evaluate(forecast, matrix.y[rows])

    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    record = report.to_record()
    _write_csv(out / "metrics.csv",
               [*record.keys(), "inference_seconds"],
               [[*record.values(), f"{inference:.6f}"]])
    print(f"{args.range}: {report}  inference={inference:.4f}s")
    return EXIT_OK


def cmd_benchmark(args) -> int:
    cfg = read_run_config(args.config, args.set or ())
    repeats = args.repeats or cfg.bench_repeats
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    if cfg.feature_mode == "lags":
        horizons = list(cfg.bench_horizons)
    else:
        horizons = [None]  # horizon fixed by the exogenous inputs

    results = []  # (model, horizon_label, means, stds)
    timings = []
    for horizon in horizons:
        raw = _build_raw_matrix(cfg, horizon=horizon)
        split = chronological_split(raw.n_rows, cfg.fractions)
        matrix = normalize_fit_apply(raw, split.train)
        label = str(horizon) if horizon is not None else "-"
        for kind in cfg.bench_models:
            if kind == "pm" and cfg.feature_mode != "lags":
                print("note: persistence skipped (needs lag features)")
                continue
            scores = []
            for rep in range(repeats):
                tc = replace(cfg.train_config, seed=cfg.train_config.seed + rep)
                t0 = time.perf_counter()
                model = _fit_kind(kind, matrix, split, tc)
                t_fit = time.perf_counter() - t0
                t0 = time.perf_counter()
                forecast = clamp_unit(model.predict(matrix.X[split.test_slice]))
                t_pred = time.perf_counter() - t0
                rep_report = metrics.evaluate(forecast, matrix.y[split.test_slice])
                scores.append([rep_report.nrmse, rep_report.nmae, rep_report.r2])
                timings.append((kind, label, rep, t_fit, t_pred))
            arr = np.asarray(scores)
            results.append((kind, label, arr.mean(axis=0), arr.std(axis=0)))

    header = ["model", "horizon_steps", "nrmse", "nmae", "r2",
              "nrmse_std", "nmae_std", "r2_std"]
    rows = [
        [kind, label, *(repr(v) for v in means), *(repr(v) for v in stds)]
        for kind, label, means, stds in results
    ]
    _write_csv(out / "benchmark.csv", header, rows)

    widths = [10, 8, 18, 18, 18]
    lines = ["".join(h.ljust(w) for h, w in
                     zip(["model", "horizon", "nrmse", "nmae", "r2"], widths))]
    for kind, label, means, stds in results:
        cells = [kind, label]
        for mean, std in zip(means, stds):
            cells.append(f"{mean:.3f} ± {std:.3f}" if repeats > 1 else f"{mean:.3f}")
        lines.append("".join(c.ljust(w) for c, w in zip(cells, widths)))
    table = "\n".join(lines)
    (out / "benchmark.txt").write_text(table + "\n")
    print(table)
    for kind, label, rep, t_fit, t_pred in timings:
        print(f"timing: {kind} h={label} repeat={rep} "
              f"train={t_fit:.3f}s inference={t_pred:.3f}s")
    return EXIT_OK


def _require_glassbox(model, mode):
    if not isinstance(model, GlassBoxModel):
        raise UsageError(f"explain mode {mode!r} requires a glass-box model file")


def _pdp_grid(model, matrix, feature):
    if isinstance(model, GlassBoxModel):
        return bin_centers(model.bins, feature)
    if isinstance(model, baselines.RTBaseline):
        return bin_centers(model.bins, feature)
    qs = np.linspace(0.0, 1.0, 33)
    return np.unique(np.quantile(matrix.X[:, feature], qs))


def cmd_explain(args) -> int:
    model = load_model(args.model)
    cfg = read_run_config(args.config, args.set or ())
    matrix, split = _matrix_for_model(cfg, model)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    names = tuple(model.feature_names)

    def resolve(name: str) -> int:
        if name in names:
            return names.index(name)
        raise UsageError(
            f"unknown feature {name!r}; valid names: {', '.join(names)}")

    mode = args.mode
    if mode == "global":
        _require_glassbox(model, mode)
        report = explain.global_importance(model, matrix.X[split.train_slice])
        _write_csv(out / "importance.csv", ["term", "mean_abs_contribution"],
                   [[t, repr(s)] for t, s in report.terms])
        (out / "importance.txt").write_text(report.as_text() + "\n")
        print(report.as_text())
    elif mode == "local":
        _require_glassbox(model, mode)
        if args.row is None:
            raise UsageError("--row is required for local explanations")
        rows = _range_slice(split, args.range)
        X = matrix.X[rows]
        y = matrix.y[rows]
        if not 0 <= args.row < len(X):
            raise UsageError(f"--row must be in [0, {len(X)})")
        exp = explain.local_explanation(model, X[args.row], actual=y[args.row])
        _write_csv(out / "breakdown.csv", ["term", "contribution"],
                   [["intercept", repr(exp.intercept)]]
                   + [[t, repr(v)] for t, v in exp.contributions])
        print(exp.as_text())
    elif mode == "shape":
        _require_glassbox(model, mode)
        f = resolve(args.feature)
        curve = explain.export_shape(model, f, denormalize=args.denormalize)
        path = out / f"shape_{args.feature}.csv"
        _write_csv(path, ["bin_center", "value"],
                   [[repr(x), repr(v)] for x, v in zip(curve.x, curve.values)])
        print(f"wrote {path} ({len(curve.x)} bins)")
    elif mode == "heatmap":
        _require_glassbox(model, mode)
        try:
            a, b = (s.strip() for s in args.pair.split(","))
        except (AttributeError, ValueError):
            raise UsageError("--pair expects two feature names: a,b") from None
        i, j = resolve(a), resolve(b)
        curve = explain.export_pair_heatmap(model, (i, j),
                                            denormalize=args.denormalize)
        i, j = min(i, j), max(i, j)
        path = out / f"heatmap_{names[i]}_{names[j]}.csv"
        _write_csv(path, ["row", "col", "value"],
                   [[repr(curve.x[r]), repr(curve.y[c]), repr(curve.values[r, c])]
                    for r in range(len(curve.x)) for c in range(len(curve.y))])
        print(f"wrote {path} ({curve.values.shape[0]}x{curve.values.shape[1]} grid)")
    elif mode == "pdp":
        f = resolve(args.feature)
        grid = _pdp_grid(model, matrix, f)
        curve = explain.pdp(model.predict, matrix.X[split.train_slice], f, grid)
        path = out / f"pdp_{args.feature}.csv"
        _write_csv(path, ["bin_center", "value"],
                   [[repr(x), repr(v)] for x, v in zip(curve.x, curve.values)])
        print(f"wrote {path} (range {explain.pdp_importance(curve):.4f})")
    elif mode == "pfi":
        rows = _range_slice(split, args.range)
        result = explain.pfi(model.predict, matrix.X[rows], matrix.y[rows],
                             n_repeats=args.repeats or 5,
                             seed=cfg.train_config.seed,
                             feature_names=names)
        _write_csv(out / "pfi.csv", ["feature", "importance", "std"],
                   [[n, repr(v), repr(s)] for n, v, s in
                    zip(names, result.importances, result.stds)])
        for n in result.ordering():
            k = names.index(n)
            print(f"{n}: {result.importances[k]:+.5f} ± {result.stds[k]:.5f}")
    else:
        raise UsageError(f"unknown explain mode {mode!r}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="windglass",
        description="Glass-box wind power forecasting: train, evaluate, "
                    "benchmark, and explain.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="run config file (INI)")
        p.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                       help="override a config value (repeatable; flag wins)")

    p = sub.add_parser("train", help="fit a model and save it")
    common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score a saved model")
    common(p)
    p.add_argument("--model", required=True, help="model file")
    p.add_argument("--range", default="test", help="train | val | test")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("benchmark", help="models x horizons metric grid")
    common(p)
    p.add_argument("--repeats", type=int, default=None,
                   help="average this many seed-shifted runs")
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("explain", help="global/local explanations and exports")
    common(p)
    p.add_argument("--model", required=True, help="model file")
    p.add_argument("--mode", required=True,
                   choices=["global", "local", "shape", "heatmap", "pdp", "pfi"])
    p.add_argument("--row", type=int, default=None, help="row for local mode")
    p.add_argument("--feature", default=None, help="feature name")
    p.add_argument("--pair", default=None, help="pair for heatmap: a,b")
    p.add_argument("--range", default="test", help="row range: train | val | test")
    p.add_argument("--repeats", type=int, default=None, help="pfi repeats")
    p.add_argument("--denormalize", action="store_true",
                   help="report axis values in raw units")
    p.set_defaults(func=cmd_explain)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ModelFormatError as exc:
        print(f"model error: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except (ValueError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
