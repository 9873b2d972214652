"""Linear centroid-encoder: fit ``A`` (d x k) so that ``A A^T x`` lands on the class centroid of ``x``."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from slce.optim import AdamState


class TrainingError(FloatingPointError):
    """Training produced a non-finite cost or gradient."""

    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration


@dataclass(frozen=True)
class LceConfig:
    embedding_dim: int = 5
    learning_rate: float = 0.002
    convergence_tol: float = 1e-6
    max_iterations: int = 50_000
    init_seed: int = 0
    init_scale: float = 1.0

    def __post_init__(self):
        if self.embedding_dim < 1:
            raise ValueError("embedding_dim must be positive")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.convergence_tol < 0 or math.isnan(self.convergence_tol):
            raise ValueError("convergence_tol must be non-negative")
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be non-negative")
        if self.init_seed < 0:
            raise ValueError("init_seed must be non-negative")
        if self.init_scale <= 0:
            raise ValueError("init_scale must be positive")


@dataclass
class LceModel:
    """A trained encoder.

    ``cost_trace[t]`` is the cost after ``t`` Adam steps, so the trace holds
    ``iterations_run + 1`` entries and ``cost_trace[0]`` is the cost at the
    random initialization.
    """

    A: np.ndarray
    cost_trace: np.ndarray
    converged: bool
    iterations_run: int
    config: LceConfig = field(default_factory=LceConfig)

    @property
    def embedding_dim(self) -> int:
        return self.A.shape[1]

    def embed(self, X):
        """k-dimensional codes ``A^T X`` of the sample columns of ``X``."""
        return self.A.T @ X


def _check_shapes(A, X, C):
    if A.ndim != 2 or X.ndim != 2 or C.ndim != 2:
        raise ValueError("A, X and Ctilde must be matrices")
    if A.shape[0] != X.shape[0]:
        raise ValueError(f"A has {A.shape[0]} rows but X has {X.shape[0]} features")
    if C.shape != X.shape:
        raise ValueError(f"Ctilde shape {C.shape} does not match X shape {X.shape}")


def reconstruction_cost(A, Z, C):
    """``0.5 * ||C - A A^T Z||_F^2``; shared by the plain and gated costs."""
    R = C - A @ (A.T @ Z)
    return 0.5 * float(np.vdot(R, R))


def lce_cost(A, X, Ctilde) -> float:
    """``0.5 * ||Ctilde - A A^T X||_F^2``."""
    A, X, C = (np.asarray(m, dtype=np.float64) for m in (A, X, Ctilde))
    _check_shapes(A, X, C)
    cost = reconstruction_cost(A, X, C)
    if not math.isfinite(cost):
        raise TrainingError("non-finite cost")
    return cost


def lce_gradient(A, X, Ctilde) -> np.ndarray:
    """``A A^T X X^T A + X X^T A A^T A - (Ctilde X^T + X Ctilde^T) A``.

    Products are grouped so that nothing of size d x d is formed.
    """
    A, X, C = (np.asarray(m, dtype=np.float64) for m in (A, X, Ctilde))
    _check_shapes(A, X, C)
    XtA = X.T @ A
    AtA = A.T @ A
    return A @ (XtA.T @ XtA) + X @ (XtA @ AtA) - (C @ XtA + X @ (C.T @ A))


def _cost_and_gradient(A, X, C):
    # residual form of the same gradient: R X^T A + X R^T A with R = A A^T X - C
    R = A @ (A.T @ X) - C
    cost = 0.5 * float(np.vdot(R, R))
    grad = R @ (X.T @ A) + X @ (R.T @ A)
    return cost, grad


def init_encoder(d: int, cfg: LceConfig) -> np.ndarray:
    """Seeded Gaussian init with standard deviation ``init_scale / sqrt(d)``."""
    rng = np.random.default_rng(cfg.init_seed)
    return rng.normal(0.0, cfg.init_scale / math.sqrt(d), size=(d, cfg.embedding_dim))


def fit_lce(X, Ctilde, cfg: LceConfig | None = None) -> LceModel:
    """Full-batch Adam on the centroid-reconstruction cost.

    Stops once two consecutive costs differ by at most ``convergence_tol``
    or after ``max_iterations`` steps (``converged=False``).
    """
    cfg = cfg or LceConfig()
    X = np.ascontiguousarray(X, dtype=np.float64)
    C = np.ascontiguousarray(Ctilde, dtype=np.float64)
    d = X.shape[0]
    if cfg.embedding_dim > d:
        raise ValueError(f"embedding_dim {cfg.embedding_dim} exceeds feature count {d}")
    A0 = init_encoder(d, cfg)
    _check_shapes(A0, X, C)

    # A is a column-major view of the flat parameter vector the optimizer updates
    params = A0.ravel(order="F").copy()
    A = params.reshape(A0.shape, order="F")
    state = AdamState.fresh(params.size, cfg.learning_rate)

    trace = []
    converged = False
    steps = 0
    while True:
        cost, grad = _cost_and_gradient(A, X, C)
        if not math.isfinite(cost):
            raise TrainingError(f"non-finite cost at iteration {steps}", steps)
        trace.append(cost)
        if steps > 0 and abs(trace[-1] - trace[-2]) <= cfg.convergence_tol:
            converged = True
            break
        if steps >= cfg.max_iterations:
            break
        g = grad.ravel(order="F")
        if not np.all(np.isfinite(g)):
            raise TrainingError(f"non-finite gradient at iteration {steps}", steps)
        state.update_(params, g)
        steps += 1

    return LceModel(
        A=np.array(A, order="C"),
        cost_trace=np.array(trace),
        converged=converged,
        iterations_run=steps,
        config=cfg,
    )
