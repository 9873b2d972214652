"""Planted-feature data: only a known subset of features carries class signal."""

from __future__ import annotations

import numpy as np

from slce.data import Dataset


def make_planted(
    n_samples: int = 100,
    n_features: int = 100,
    n_informative: int = 10,
    n_classes: int = 2,
    separation: float = 0.6,
    noise: float = 0.3,
    seed: int = 0,
    shuffle_features: bool = True,
) -> tuple[Dataset, np.ndarray]:
    """Gaussian classes whose means differ only on ``n_informative`` features.

    Each class mean is a random +-``separation``/2 pattern over the
    informative features and zero elsewhere; every feature gets i.i.d.
    ``noise``-scaled Gaussian noise. Classes are balanced (sizes differ by at
    most one). Returns the dataset and the sorted informative indices.
    """
    if not 0 < n_informative <= n_features:
        raise ValueError("n_informative must lie in 1..n_features")
    if n_samples < n_classes or n_classes < 2:
        raise ValueError("need n_samples >= n_classes >= 2")
    rng = np.random.default_rng(seed)
    labels = np.arange(n_samples) % n_classes
    rng.shuffle(labels)

    patterns = rng.choice([-1.0, 1.0], size=(n_informative, n_classes))
    if n_classes == 2:
        patterns[:, 1] = -patterns[:, 0]
    means = np.zeros((n_features, n_classes))
    informative = (
        np.sort(rng.choice(n_features, n_informative, replace=False))
        if shuffle_features
        else np.arange(n_informative)
    )
    means[informative] = 0.5 * separation * patterns

    X = means[:, labels] + noise * rng.standard_normal((n_features, n_samples))
    return Dataset(X, labels), informative
