"""Gate ranking, the consecutive-ratio cut-off and multi-run stability."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable

import numpy as np

from slce import kernels

RATIO_EPS = 1e-12


@dataclass(frozen=True)
class FeatureReport:
    """Features ordered by descending ``|b_j|`` (ties: lower index first).

    ``cutoff_index`` stays ``None`` until :func:`cutoff` is applied.
    """

    ranked_indices: np.ndarray
    ranked_weights: np.ndarray
    cutoff_index: int | None = None
    cutoff_ratio: float | None = None
    cutoff_defined: bool = True

    @property
    def n_features(self) -> int:
        return self.ranked_indices.shape[0]

    @property
    def selected(self) -> np.ndarray:
        if self.cutoff_index is None:
            raise ValueError("cut-off not applied yet")
        return self.ranked_indices[: self.cutoff_index]

    def ratio_curve(self, epsilon: float = RATIO_EPS) -> np.ndarray:
        """``w[p-1] / (w[p] + epsilon)`` for ``p = 1..d-1``."""
        w = self.ranked_weights
        return w[:-1] / (w[1:] + epsilon)


def rank_features(model_or_gates) -> FeatureReport:
    """Rank features by gate magnitude. Accepts a fitted model or a gate vector."""
    b = getattr(model_or_gates, "b", model_or_gates)
    w = np.abs(np.asarray(b, dtype=np.float64))
    if w.ndim != 1 or w.size == 0:
        raise ValueError("gate vector must be a non-empty 1-D array")
    order = np.argsort(-w, kind="stable")
    return FeatureReport(order, w[order])


def cutoff(report: FeatureReport, epsilon: float = RATIO_EPS) -> FeatureReport:
    """Keep the features before the largest consecutive-weight ratio.

    ``cutoff_index`` is the position ``p`` in ``1..d-1`` maximizing
    ``w[p-1] / (w[p] + epsilon)``, earliest ``p`` on ties. With a single
    feature the cut-off is undefined: everything is kept and
    ``cutoff_defined`` is False.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    w = np.ascontiguousarray(report.ranked_weights, dtype=np.float64)
    if w.size < 2:
        return replace(report, cutoff_index=int(w.size), cutoff_ratio=math.nan, cutoff_defined=False)
    p, ratio = kernels.max_ratio_cut(w, epsilon)
    return replace(report, cutoff_index=int(p), cutoff_ratio=float(ratio), cutoff_defined=True)


def select_features(model_or_gates, epsilon: float = RATIO_EPS) -> FeatureReport:
    """:func:`rank_features` followed by :func:`cutoff`."""
    return cutoff(rank_features(model_or_gates), epsilon)


def top_k(report: FeatureReport, k: int) -> np.ndarray:
    if k < 1:
        raise ValueError("k must be positive")
    if k > report.n_features:
        raise ValueError(f"k={k} exceeds the {report.n_features} available features")
    return report.ranked_indices[:k].copy()


@dataclass(frozen=True)
class StabilityReport:
    run_selections: tuple[frozenset, ...]
    intersection_size: int
    union_size: int
    jaccard: float
    per_run_counts: tuple[int, ...]

    @property
    def intersection(self) -> frozenset:
        return frozenset.intersection(*self.run_selections)

    @property
    def union(self) -> frozenset:
        return frozenset.union(*self.run_selections)


def stability(selections: Iterable[Iterable[int]]) -> StabilityReport:
    """Jaccard index of all runs at once: ``|common to all| / |seen in any|``."""
    sets = tuple(frozenset(int(i) for i in s) for s in selections)
    if len(sets) < 2:
        raise ValueError("stability requires at least two selections")
    if any(not s for s in sets):
        raise ValueError("empty feature set in input")
    inter = frozenset.intersection(*sets)
    union = frozenset.union(*sets)
    return StabilityReport(
        run_selections=sets,
        intersection_size=len(inter),
        union_size=len(union),
        jaccard=len(inter) / len(union),
        per_run_counts=tuple(len(s) for s in sets),
    )
