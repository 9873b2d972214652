"""Command-line interface: ``slce fit|stability|tune|evaluate|embed``.

Exit codes: 0 success, 1 invalid usage or input, 2 numerical failure.
Every command writes ``config.json`` with the fully resolved settings into
the output directory. Precedence is command-line flag, then ``--config``
file (YAML or JSON), then the ``SLCE_SEED`` environment variable (seed
only), then the built-in default.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np
import yaml

from slce import io
from slce.data import (
    DatasetError,
    SplitSpec,
    Standardizer,
    build_centroid_target,
    load_csv,
    split,
    split_indices,
)
from slce.evaluation import (
    EvalProtocol,
    MlpConfig,
    TuneSpec,
    default_lambda_grid,
    evaluate_protocol,
    pca_embed,
    tune_lambda,
)
from slce.features import select_features, stability
from slce.lce import LceConfig, TrainingError
from slce.sparse import SlceConfig, SlceModel, fit_slce

log = logging.getLogger("slce")

EXIT_USAGE = 1
EXIT_NUMERIC = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _as_list(value, item):
    if isinstance(value, str):
        value = value.replace(" ", "").split(",")
    elif not isinstance(value, (list, tuple)):
        value = [value]
    return [item(v) for v in value if v != ""]


def _int_list(value):
    return _as_list(value, int)


def _float_list(value):
    return _as_list(value, float)


def _bool(value):
    if isinstance(value, str):
        return value.strip().lower() in ("1", "true", "yes", "on")
    return bool(value)


# name -> (built-in default, converter applied to config-file values)
DEFAULTS = {
    "labels": ("last", str),
    "transpose": (False, _bool),
    "standardize": (False, _bool),
    "lambda": (0.1, float),
    "embed_dim": (5, int),
    "lr": (0.002, float),
    "tol": (1e-6, float),
    "max_iter": (50_000, int),
    "warmup": (10, int),
    "penalty_iters": (2000, int),
    "out": ("slce_out", str),
    "jobs": (1, int),
    "runs": (5, int),
    "fixed_seed": (False, _bool),
    "top_k": ([10, 50], _int_list),
    "repeats": (None, int),
    "train_fraction": (0.5, float),
    "grid": (None, _float_list),
    "grid_min": (0.04, float),
    "grid_max": (0.5, float),
    "grid_size": (8, int),
    "components": (3, int),
    "features": (None, _int_list),
    "model": (None, str),
    "mlp_epochs": (200, int),
    "mlp_lr": (0.001, float),
    "mlp_hidden": (500, int),
}


def _common(p):
    p.add_argument("--data", help="CSV file (rows are samples unless --transpose)")
    p.add_argument("--labels", help="label column: name, 0-based index, 'first' or 'last' (default)")
    p.add_argument("--transpose", action="store_true", default=None, help="rows of the file are features")
    p.add_argument("--standardize", action="store_true", default=None, help="z-score features with training statistics")
    p.add_argument("--seed", type=int, help="global seed (fallback: $SLCE_SEED, then 0)")
    p.add_argument("--out", help="output directory (default: slce_out)")
    p.add_argument("--config", help="YAML or JSON file of option values")
    p.add_argument("--embed-dim", dest="embed_dim", type=int, help="columns of A (default 5)")
    p.add_argument("--lr", type=float, help="Adam learning rate for both passes (default 0.002)")
    p.add_argument("--tol", type=float, help="first-pass convergence tolerance on |delta cost| (default 1e-6)")
    p.add_argument("--max-iter", dest="max_iter", type=int, help="first-pass iteration cap (default 50000)")
    p.add_argument("--warmup", type=int, help="unpenalized gate iterations (default 10)")
    p.add_argument("--penalty-iters", dest="penalty_iters", type=int, help="penalized gate iterations (default 2000)")
    p.add_argument("-v", "--verbose", action="store_true")


def _lambda_opt(p):
    p.add_argument("--lambda", dest="lambda", type=float, help="l1 weight on the gates (default 0.1)")


def _jobs_opt(p):
    p.add_argument("--jobs", type=int, help="parallel worker processes (default 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="slce", description="Sparse linear centroid-encoder feature selection.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fit", help="train one model and write the feature report and curves")
    _common(p)
    _lambda_opt(p)

    p = sub.add_parser("stability", help="refit with several seeds and compare the selected sets")
    _common(p)
    _lambda_opt(p)
    p.add_argument("--runs", type=int, help="number of runs (default 5)")
    p.add_argument("--fixed-seed", dest="fixed_seed", action="store_true", default=None, help="use the same seed for every run")

    p = sub.add_parser("tune", help="pick lambda by repeated 2-fold cross-validation")
    _common(p)
    _jobs_opt(p)
    p.add_argument("--grid", help="comma-separated lambda values (overrides --grid-min/max/size)")
    p.add_argument("--grid-min", dest="grid_min", type=float)
    p.add_argument("--grid-max", dest="grid_max", type=float)
    p.add_argument("--grid-size", dest="grid_size", type=int)
    p.add_argument("--repeats", type=int, help="CV repeats (default 10)")

    p = sub.add_parser("evaluate", help="repeated 50:50 split accuracy with the top-K features")
    _common(p)
    _lambda_opt(p)
    _jobs_opt(p)
    p.add_argument("--top-k", dest="top_k", help="comma-separated K values (default 10,50)")
    p.add_argument("--repeats", type=int, help="number of repeats (default 20)")
    p.add_argument("--train-fraction", dest="train_fraction", type=float)
    p.add_argument("--mlp-epochs", dest="mlp_epochs", type=int)
    p.add_argument("--mlp-lr", dest="mlp_lr", type=float)
    p.add_argument("--mlp-hidden", dest="mlp_hidden", type=int)

    p = sub.add_parser("embed", help="PCA coordinates of train/test samples on chosen features")
    _common(p)
    _lambda_opt(p)
    src = p.add_mutually_exclusive_group()
    src.add_argument("--model", help="sparse model JSON whose cut-off selection is used")
    src.add_argument("--features", help="comma-separated feature indices")
    src.add_argument("--all-features", dest="all_features", action="store_true", help="use every feature")
    p.add_argument("--components", type=int, help="number of principal axes (default 3)")
    p.add_argument("--train-fraction", dest="train_fraction", type=float)
    return parser


class Settings:
    """Resolved option values for one invocation."""

    def __init__(self, args, file_cfg):
        self._args = vars(args)
        self._file = file_cfg
        self.values = {}

    def get(self, name):
        if name in self.values:
            return self.values[name]
        default, conv = DEFAULTS[name]
        value = self._args.get(name)
        if value is None:
            value = self._file.get(name)
        value = default if value is None else conv(value)
        self.values[name] = value
        return value

    def seed(self):
        if "seed" in self.values:
            return self.values["seed"]
        seed = self._args.get("seed")
        if seed is None:
            seed = self._file.get("seed")
        if seed is None and os.environ.get("SLCE_SEED"):
            try:
                seed = int(os.environ["SLCE_SEED"])
            except ValueError:
                raise UsageError(f"SLCE_SEED must be an integer, got {os.environ['SLCE_SEED']!r}") from None
        seed = int(seed or 0)
        if seed < 0:
            raise UsageError("seed must be non-negative")
        self.values["seed"] = seed
        return seed


def _load_config(path):
    if path is None:
        return {}
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"config file not found: {p}")
    obj = yaml.safe_load(p.read_text(encoding="utf-8")) or {}
    if not isinstance(obj, dict):
        raise UsageError(f"config file {p} must hold a mapping")
    return {str(k).replace("-", "_"): v for k, v in obj.items()}


def _data_path(args, file_cfg):
    path = args.data or file_cfg.get("data")
    if not path:
        raise UsageError("--data is required")
    return str(path)


def _load(settings, path):
    label = settings.get("labels")
    if isinstance(label, str) and label.lstrip("-").isdigit():
        label = int(label)
    return load_csv(path, label, transpose=settings.get("transpose"))


def _slce_config(settings, seed, lam=None):
    lam = settings.get("lambda") if lam is None else lam
    if lam < 0:
        raise UsageError("lambda must be non-negative")
    lce = LceConfig(
        embedding_dim=settings.get("embed_dim"),
        learning_rate=settings.get("lr"),
        convergence_tol=settings.get("tol"),
        max_iterations=settings.get("max_iter"),
        init_seed=seed,
    )
    return SlceConfig(
        lce=lce,
        lam=lam,
        warmup_iterations=settings.get("warmup"),
        penalty_iterations=settings.get("penalty_iters"),
        learning_rate=settings.get("lr"),
    )


def _out_dir(settings):
    out = Path(settings.get("out"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _fit_one(ds, cfg):
    target = build_centroid_target(ds)
    return fit_slce(ds.features, target.targets, cfg)


def _standardized(settings, ds):
    return Standardizer.fit(ds).transform(ds) if settings.get("standardize") else ds


def cmd_fit(args, settings, data):
    seed = settings.seed()
    cfg = _slce_config(settings, seed)
    ds = _standardized(settings, _load(settings, data))
    out = _out_dir(settings)
    model = _fit_one(ds, cfg)
    report = select_features(model)
    io.save_model(out / "model.json", model)
    io.write_json(out / "features.json", io.report_to_dict(report, ds.feature_names))
    io.write_sparsity_curve(out / "sparsity_curve.csv", report)
    io.write_ratio_curve(out / "ratio_curve.csv", report)
    log.info("selected %d of %d features (lce iterations %d, converged=%s)",
             report.cutoff_index, ds.n_features, model.lce.iterations_run, model.lce.converged)
    print(f"selected {report.cutoff_index} of {ds.n_features} features -> {out}")
    return {"slce": asdict(cfg), "n_features": ds.n_features, "n_samples": ds.n_samples}


def cmd_stability(args, settings, data):
    n_runs = settings.get("runs")
    if n_runs < 2:
        raise UsageError("stability requires ≥ 2 runs")
    base = settings.seed()
    seeds = [base] * n_runs if settings.get("fixed_seed") else [base + i for i in range(n_runs)]
    ds = _standardized(settings, _load(settings, data))
    cfg = _slce_config(settings, base)
    out = _out_dir(settings)
    target = build_centroid_target(ds)
    selections = []
    for s in seeds:
        model = fit_slce(ds.features, target.targets, replace(cfg, lce=replace(cfg.lce, init_seed=s)))
        selections.append(select_features(model).selected)
    rep = stability(selections)
    result = io.stability_to_dict(rep)
    result["seeds"] = seeds
    result["lambda"] = cfg.lam
    io.write_json(out / "stability.json", result)
    print(f"jaccard {rep.jaccard:.4f} over {n_runs} runs (|∩|={rep.intersection_size}, |∪|={rep.union_size}) -> {out}")
    return {"slce": asdict(cfg), "run_seeds": seeds}


def cmd_tune(args, settings, data):
    grid = settings.get("grid")
    if grid is None:
        lo, hi, n = settings.get("grid_min"), settings.get("grid_max"), settings.get("grid_size")
        if lo <= 0 or hi < lo or n < 1:
            raise UsageError("grid bounds must satisfy 0 < grid-min <= grid-max and grid-size >= 1")
        grid = default_lambda_grid(n) if (lo, hi) == (0.04, 0.5) else tuple(
            float(x) for x in np.round(np.geomspace(lo, hi, n), 6)
        )
    grid = tuple(sorted(set(float(x) for x in grid)))
    if any(x < 0 for x in grid):
        raise UsageError("lambda must be non-negative")
    repeats = settings.get("repeats") or 10
    seed = settings.seed()
    spec = TuneSpec(grid, repeats, seed, settings.get("standardize"))
    cfg = _slce_config(settings, seed, lam=grid[0])
    ds = _load(settings, data)
    out = _out_dir(settings)
    result = tune_lambda(ds, spec, cfg, jobs=settings.get("jobs"))
    io.write_json(out / "tune.json", {"chosen_lambda": result.chosen_lambda, "rows": result.rows})
    io.write_csv(
        out / "cv_table.csv",
        ["lambda", "mean_accuracy", "std_accuracy", "mean_selected"],
        ([r["lambda"], r["mean_accuracy"], r["std_accuracy"], r["mean_selected"]] for r in result.rows),
    )
    print(f"chosen lambda {result.chosen_lambda} -> {out}")
    cells = [(r, f) for r in range(repeats) for f in range(spec.n_folds)]
    return {
        "tune": {"lambda_grid": list(grid), "n_folds": spec.n_folds, "n_repeats": repeats, "base_seed": seed},
        "slce": asdict(cfg),
        "fold_seeds": [seed + r for r in range(repeats)],
        "cell_init_seeds": [seed + spec.n_folds * r + f for r, f in cells],
    }


def cmd_evaluate(args, settings, data):
    seed = settings.seed()
    cfg = _slce_config(settings, seed)
    repeats = settings.get("repeats") or 20
    protocol = EvalProtocol(
        n_repeats=repeats,
        train_fraction=settings.get("train_fraction"),
        top_k_values=tuple(settings.get("top_k")),
        base_seed=seed,
        standardize=settings.get("standardize"),
        mlp=MlpConfig(
            hidden=settings.get("mlp_hidden"),
            learning_rate=settings.get("mlp_lr"),
            epochs=settings.get("mlp_epochs"),
        ),
    )
    ds = _load(settings, data)
    out = _out_dir(settings)
    rows = evaluate_protocol(ds, cfg, protocol, jobs=settings.get("jobs"))
    io.write_json(out / "accuracy.json", {"lambda": cfg.lam, "rows": [asdict(r) for r in rows]})
    io.write_csv(
        out / "accuracy.csv",
        ["k", "mean_accuracy", "std_accuracy", "n_repeats"],
        ([r.k, r.mean, r.std, len(r.accuracies)] for r in rows),
    )
    for r in rows:
        print(f"K={r.k}: {100 * r.mean:.1f} ± {100 * r.std:.1f}")
    return {
        "slce": asdict(cfg),
        "protocol": asdict(protocol),
        "repeat_seeds": [seed + r for r in range(repeats)],
    }


def cmd_embed(args, settings, data):
    seed = settings.seed()
    ds = _load(settings, data)
    spec = SplitSpec(settings.get("train_fraction"), seed, True)
    train, test = split(ds, spec)
    if settings.get("standardize"):
        z = Standardizer.fit(train)
        train, test = z.transform(train), z.transform(test)
    model_path = settings.get("model")
    features = settings.get("features")
    extra = {}
    if getattr(args, "all_features", False):
        idx = np.arange(ds.n_features)
        source = "all"
    elif model_path:
        model = io.load_model(model_path)
        if not isinstance(model, SlceModel):
            raise UsageError(f"{model_path} is not a sparse model file")
        if model.n_features != ds.n_features:
            raise UsageError(f"model has {model.n_features} gates but data has {ds.n_features} features")
        idx = np.sort(select_features(model).selected)
        source = f"model:{model_path}"
    elif features is not None:
        idx = np.array(sorted(set(features)), dtype=np.int64)
        if idx.size == 0 or idx.min() < 0 or idx.max() >= ds.n_features:
            raise UsageError(f"feature indices must lie in 0..{ds.n_features - 1}")
        source = "list"
    else:
        cfg = _slce_config(settings, seed)
        model = _fit_one(train, cfg)
        idx = np.sort(select_features(model).selected)
        source = "fit"
        extra["slce"] = asdict(cfg)
    emb = pca_embed(train.features[idx], test.features[idx], settings.get("components"))
    out = _out_dir(settings)
    comps = [f"c{i + 1}" for i in range(emb.n_components)]
    train_idx, test_idx = split_indices(ds.labels, spec)
    rows = [[int(i), "train", int(ds.labels[i]), *c] for i, c in zip(train_idx, emb.train_coords)]
    rows += [[int(i), "test", int(ds.labels[i]), *c] for i, c in zip(test_idx, emb.test_coords)]
    io.write_csv(out / "pca.csv", ["sample_id", "split", "label", *comps], rows)
    io.write_json(
        out / "embed.json",
        {
            "source": source,
            "features": idx,
            "n_components": emb.n_components,
            "explained_variance": emb.explained_variance,
            "explained_variance_ratio": emb.explained_variance_ratio,
            "degenerate": emb.degenerate,
        },
    )
    print(f"embedded {ds.n_samples} samples on {idx.size} features -> {out}")
    return {"split": asdict(spec), "feature_source": source, **extra}


COMMANDS = {
    "fit": cmd_fit,
    "stability": cmd_stability,
    "tune": cmd_tune,
    "evaluate": cmd_evaluate,
    "embed": cmd_embed,
}


def _resolved(settings, args, data, extra):
    echo = {"command": args.command, "data": data, "seed": settings.seed()}
    for name in sorted(settings.values):
        echo.setdefault(name, settings.values[name])
    echo.update(extra)
    return echo


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        file_cfg = _load_config(args.config)
        settings = Settings(args, file_cfg)
        data = _data_path(args, file_cfg)
        extra = COMMANDS[args.command](args, settings, data)
        io.write_json(Path(settings.get("out")) / "config.json", _resolved(settings, args, data, extra))
    except (TrainingError, FloatingPointError) as exc:
        print(f"slce: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (UsageError, DatasetError, ValueError, OSError) as exc:
        print(f"slce: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return 0


if __name__ == "__main__":
    sys.exit(main())
