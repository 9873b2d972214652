"""JSON and CSV serialization for models, reports and result tables.

Matrices are stored row-major as nested lists with an explicit ``shape``.
Floats are written with Python's shortest round-trip repr, so reruns with
the same inputs are byte-identical and reloaded models are exact.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict
from pathlib import Path

import numpy as np

from slce.features import FeatureReport, StabilityReport
from slce.lce import LceConfig, LceModel
from slce.sparse import SlceConfig, SlceModel

LCE_FORMAT = "slce.lce/1"
SLCE_FORMAT = "slce.slce/1"


def _clean(obj):
    """Make ``obj`` JSON-safe: arrays to lists, NaN/inf to None, tuples to lists."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (frozenset, set)):
        return sorted(_clean(v) for v in obj)
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2, allow_nan=False) + "\n"


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(dumps(obj), encoding="utf-8")
    return path


def read_json(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))


def _matrix(a):
    a = np.asarray(a, dtype=np.float64)
    return {"shape": list(a.shape), "order": "row-major", "data": a.tolist()}


def _unmatrix(obj):
    a = np.array(obj["data"], dtype=np.float64).reshape(obj["shape"])
    return a


def lce_to_dict(model: LceModel) -> dict:
    return {
        "format": LCE_FORMAT,
        "n_features": model.A.shape[0],
        "embedding_dim": model.embedding_dim,
        "seed": model.config.init_seed,
        "config": asdict(model.config),
        "A": _matrix(model.A),
        "converged": model.converged,
        "iterations_run": model.iterations_run,
        "cost_trace": model.cost_trace,
    }


def lce_from_dict(obj) -> LceModel:
    if obj.get("format") not in (LCE_FORMAT, SLCE_FORMAT):
        raise ValueError(f"unrecognized model format {obj.get('format')!r}")
    cfg = LceConfig(**{k: (math.inf if v is None else v) for k, v in obj["config"].items()})
    return LceModel(
        A=_unmatrix(obj["A"]),
        cost_trace=np.array(obj["cost_trace"], dtype=np.float64),
        converged=bool(obj["converged"]),
        iterations_run=int(obj["iterations_run"]),
        config=cfg,
    )


def slce_to_dict(model: SlceModel) -> dict:
    if model.lce is not None:
        out = lce_to_dict(model.lce)
    else:
        out = {
            "n_features": model.A.shape[0],
            "embedding_dim": model.A.shape[1],
            "seed": model.seed,
            "A": _matrix(model.A),
        }
    cfg = model.config
    out.update(
        {
            "format": SLCE_FORMAT,
            "b": model.b,
            "lambda": model.lam,
            "warmup_iterations": model.warmup_iterations,
            "penalty_iterations": model.penalty_iterations,
            "gate_learning_rate": cfg.learning_rate if cfg is not None else None,
            "gate_cost_trace": model.cost_trace,
        }
    )
    return out


def slce_from_dict(obj) -> SlceModel:
    if obj.get("format") != SLCE_FORMAT:
        raise ValueError(f"not a sparse model file (format {obj.get('format')!r})")
    lce = lce_from_dict(obj) if "config" in obj else None
    cfg = None
    if lce is not None:
        cfg = SlceConfig(
            lce=lce.config,
            lam=obj["lambda"],
            warmup_iterations=obj["warmup_iterations"],
            penalty_iterations=obj["penalty_iterations"],
            learning_rate=obj.get("gate_learning_rate") or 0.002,
        )
    return SlceModel(
        A=_unmatrix(obj["A"]),
        b=np.array(obj["b"], dtype=np.float64),
        lam=float(obj["lambda"]),
        warmup_iterations=int(obj["warmup_iterations"]),
        penalty_iterations=int(obj["penalty_iterations"]),
        cost_trace=np.array(obj["gate_cost_trace"], dtype=np.float64),
        seed=int(obj["seed"]),
        lce=lce,
        config=cfg,
    )


def save_model(path, model) -> Path:
    if isinstance(model, SlceModel):
        return write_json(path, slce_to_dict(model))
    return write_json(path, lce_to_dict(model))


def load_model(path):
    """Load either model kind, dispatching on the ``format`` field."""
    obj = read_json(path)
    if obj.get("format") == SLCE_FORMAT:
        return slce_from_dict(obj)
    return lce_from_dict(obj)


def report_to_dict(report: FeatureReport, feature_names=None) -> dict:
    out = {
        "n_features": report.n_features,
        "ranked_indices": report.ranked_indices,
        "ranked_weights": report.ranked_weights,
        "cutoff_index": report.cutoff_index,
        "cutoff_ratio": report.cutoff_ratio,
        "cutoff_defined": report.cutoff_defined,
    }
    if report.cutoff_index is not None:
        out["selected"] = report.selected
        if feature_names is not None:
            out["selected_names"] = [feature_names[i] for i in report.selected]
    return out


def stability_to_dict(rep: StabilityReport) -> dict:
    return {
        "n_runs": len(rep.run_selections),
        "per_run_counts": rep.per_run_counts,
        "intersection_size": rep.intersection_size,
        "union_size": rep.union_size,
        "jaccard": rep.jaccard,
        "intersection": rep.intersection,
        "union": rep.union,
        "run_selections": [sorted(s) for s in rep.run_selections],
    }


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])
    return path


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return int(v)
    return v


def write_sparsity_curve(path, report: FeatureReport) -> Path:
    """``rank,abs_weight`` with 1-based rank; the descending gate-magnitude curve."""
    rows = ((i + 1, w) for i, w in enumerate(report.ranked_weights))
    return write_csv(path, ["rank", "abs_weight"], rows)


def write_ratio_curve(path, report: FeatureReport) -> Path:
    """``position,ratio`` where ratio = w[p-1] / (w[p] + eps) for p = 1..d-1."""
    rows = ((p + 1, r) for p, r in enumerate(report.ratio_curve()))
    return write_csv(path, ["position", "ratio"], rows)
