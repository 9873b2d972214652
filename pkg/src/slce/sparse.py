"""Sparse linear centroid-encoder.

Two convex passes: fit ``A`` with every gate at 1 (the plain encoder), then
freeze ``A`` and fit the diagonal gate vector ``b`` under an l1 penalty.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from slce import kernels
from slce.lce import LceConfig, LceModel, TrainingError, _check_shapes, fit_lce, reconstruction_cost
from slce.optim import AdamState


@dataclass(frozen=True)
class SlceConfig:
    lce: LceConfig = field(default_factory=LceConfig)
    lam: float = 0.1
    warmup_iterations: int = 10
    penalty_iterations: int = 2000
    learning_rate: float = 0.002

    def __post_init__(self):
        if not self.lam >= 0:
            raise ValueError("lambda must be non-negative")
        if self.warmup_iterations < 0 or self.penalty_iterations < 0:
            raise ValueError("iteration counts must be non-negative")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")

    @property
    def seed(self) -> int:
        return self.lce.init_seed


@dataclass
class SlceModel:
    A: np.ndarray
    b: np.ndarray
    lam: float
    warmup_iterations: int
    penalty_iterations: int
    cost_trace: np.ndarray
    seed: int
    lce: LceModel | None = None
    config: SlceConfig | None = None

    @property
    def n_features(self) -> int:
        return self.b.shape[0]


def _gated(b, X):
    return b[:, None] * X


def _check_gate(A, b, X, C):
    _check_shapes(A, X, C)
    if b.shape != (X.shape[0],):
        raise ValueError(f"gate vector shape {b.shape} does not match {X.shape[0]} features")


def slce_cost(A, b, X, Ctilde, lam: float) -> float:
    """``0.5 * ||Ctilde - A A^T (diag(b) X)||_F^2 + lam * ||b||_1``."""
    A, b, X, C = (np.asarray(m, dtype=np.float64) for m in (A, b, X, Ctilde))
    _check_gate(A, b, X, C)
    return reconstruction_cost(A, _gated(b, X), C) + lam * float(np.abs(b).sum())


def _smooth_gate_gradient(A, b, X, C):
    R = A @ (A.T @ _gated(b, X)) - C
    G = A @ (A.T @ R)
    return 0.5 * float(np.vdot(R, R)), kernels.gate_contraction(G, X)


def slce_gate_gradient(A, b, X, Ctilde, lam: float) -> np.ndarray:
    """Gradient over ``b`` of the smooth term plus the subgradient ``lam * sign(b)``.

    Coordinate j is ``diag((A A^T)^T (A A^T diag(b) X - Ctilde) X^T)_j``;
    ``sign(0)`` is taken as 0.
    """
    A, b, X, C = (np.ascontiguousarray(m, dtype=np.float64) for m in (A, b, X, Ctilde))
    _check_gate(A, b, X, C)
    _, g = _smooth_gate_gradient(A, b, X, C)
    if lam:
        g = g + lam * np.sign(b)
    return g


def fit_gates(A, X, Ctilde, lam, warmup_iterations=10, penalty_iterations=2000, learning_rate=0.002):
    """Second pass with ``A`` frozen; returns ``(b, cost_trace)``.

    ``b`` starts at all ones. The first ``warmup_iterations`` Adam steps use
    ``lam = 0``; the rest add the l1 subgradient. ``cost_trace[t]`` is the
    objective (with the penalty in force at that step) before step ``t``.
    """
    A = np.ascontiguousarray(A, dtype=np.float64)
    X = np.ascontiguousarray(X, dtype=np.float64)
    C = np.ascontiguousarray(Ctilde, dtype=np.float64)
    d = X.shape[0]
    b = np.ones(d)
    _check_gate(A, b, X, C)
    state = AdamState.fresh(d, learning_rate)
    total = warmup_iterations + penalty_iterations
    trace = np.empty(total)
    for t in range(total):
        penalty = lam if t >= warmup_iterations else 0.0
        smooth, g = _smooth_gate_gradient(A, b, X, C)
        cost = smooth + penalty * float(np.abs(b).sum())
        if not math.isfinite(cost):
            raise TrainingError(f"non-finite gate cost at iteration {t}", t)
        trace[t] = cost
        if penalty:
            g += penalty * np.sign(b)
        if not np.all(np.isfinite(g)):
            raise TrainingError(f"non-finite gate gradient at iteration {t}", t)
        state.update_(b, g)
    return b, trace


def fit_slce(X, Ctilde, cfg: SlceConfig | None = None, lce_model: LceModel | None = None) -> SlceModel:
    """Both passes. A precomputed first-pass ``lce_model`` may be supplied.

    Reusing one first-pass model across several ``lam`` values gives exactly
    the result of fitting each from scratch with the same seed, since the
    first pass does not depend on ``lam``.
    """
    cfg = cfg or SlceConfig()
    if lce_model is None:
        lce_model = fit_lce(X, Ctilde, cfg.lce)
    A = lce_model.A.copy()
    A.setflags(write=False)
    b, trace = fit_gates(
        A, X, Ctilde, cfg.lam, cfg.warmup_iterations, cfg.penalty_iterations, cfg.learning_rate
    )
    return SlceModel(
        A=A,
        b=b,
        lam=cfg.lam,
        warmup_iterations=cfg.warmup_iterations,
        penalty_iterations=cfg.penalty_iterations,
        cost_trace=trace,
        seed=cfg.seed,
        lce=lce_model,
        config=cfg,
    )
