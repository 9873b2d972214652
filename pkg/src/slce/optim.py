"""Full-batch Adam over flat parameter vectors and a central-difference oracle.

Matrices are flattened in column-major (Fortran) order before they reach
the optimizer, so moment vectors line up the same way on every run.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from slce import kernels


@dataclass
class AdamState:
    """Moment estimates and hyperparameters for one parameter vector."""

    first_moment: np.ndarray
    second_moment: np.ndarray
    step_count: int = 0
    learning_rate: float = 0.002
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def fresh(cls, size: int, learning_rate: float = 0.002, **kwargs) -> AdamState:
        return cls(np.zeros(size), np.zeros(size), 0, learning_rate, **kwargs)

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ValueError("beta1 and beta2 must lie in (0, 1)")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.first_moment.shape != self.second_moment.shape:
            raise ValueError("moment vectors differ in length")

    def update_(self, params: np.ndarray, gradient: np.ndarray) -> None:
        """Apply one step in place to ``params`` (1-D, float64, contiguous)."""
        _check(self, params, gradient)
        self.step_count += 1
        kernels.adam_update(
            params,
            gradient,
            self.first_moment,
            self.second_moment,
            self.step_count,
            self.learning_rate,
            self.beta1,
            self.beta2,
            self.epsilon,
        )


def _check(state, params, gradient):
    n = state.first_moment.shape[0]
    if params.shape != (n,) or gradient.shape != (n,):
        raise ValueError(
            f"length mismatch: params {params.shape}, gradient {gradient.shape}, moments ({n},)"
        )
    if not np.all(np.isfinite(gradient)):
        i = int(np.flatnonzero(~np.isfinite(gradient))[0])
        raise FloatingPointError(f"non-finite gradient entry at index {i}")


def adam_step(state: AdamState, params, gradient) -> tuple[AdamState, np.ndarray]:
    """Functional Adam step: returns a new state and new parameters.

    The inputs are left untouched.
    """
    params = np.array(params, dtype=np.float64).ravel()
    gradient = np.ascontiguousarray(gradient, dtype=np.float64).ravel()
    new = replace(
        state,
        first_moment=state.first_moment.copy(),
        second_moment=state.second_moment.copy(),
    )
    new.update_(params, gradient)
    return new, params


def finite_diff_gradient(cost, params, h: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of a scalar ``cost`` at ``params``.

    ``params`` may have any shape; the result has the same shape.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    p = np.array(params, dtype=np.float64)
    flat = p.reshape(-1)
    grad = np.empty_like(flat)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        f_plus = cost(p)
        flat[i] = orig - h
        f_minus = cost(p)
        flat[i] = orig
        if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
            raise FloatingPointError(f"non-finite cost near coordinate {i}")
        grad[i] = (f_plus - f_minus) / (2.0 * h)
    return grad.reshape(p.shape)


def flatten(matrix: np.ndarray) -> np.ndarray:
    """Column-major copy of ``matrix`` as a flat contiguous vector."""
    return np.asarray(matrix, dtype=np.float64).ravel(order="F").copy()


def unflatten(vector: np.ndarray, shape) -> np.ndarray:
    return np.asarray(vector).reshape(shape, order="F")
