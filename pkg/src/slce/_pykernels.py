"""NumPy implementations of the hot kernels.

Used when the compiled ``_ckernels`` extension is unavailable, and as the
reference the compiled versions are tested against.
"""

import numpy as np


def adam_update(params, grad, m, v, step, lr, beta1, beta2, eps):
    """In-place bias-corrected Adam update of ``params``, ``m`` and ``v``."""
    bc1 = 1.0 - beta1**step
    bc2 = 1.0 - beta2**step
    m *= beta1
    m += (1.0 - beta1) * grad
    v *= beta2
    v += (1.0 - beta2) * (grad * grad)
    params -= lr * (m / bc1) / (np.sqrt(v / bc2) + eps)


def gate_contraction(G, X):
    """Row-wise inner products: ``out[j] = sum_i G[j, i] * X[j, i]``."""
    return np.einsum("ij,ij->i", G, X)


def max_ratio_cut(weights, eps):
    """Position ``p`` in ``1..d-1`` maximizing ``w[p-1] / (w[p] + eps)``.

    The first maximum wins. Returns ``(p, ratio)``.
    """
    ratios = weights[:-1] / (weights[1:] + eps)
    p = int(np.argmax(ratios))
    return p + 1, float(ratios[p])
