"""Datasets, CSV ingestion, splitting and centroid targets.

Internally every sample is a *column*: ``features`` has shape
``(n_features, n_samples)``. The CSV loader normalizes whatever is on disk
to that orientation.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np


class DatasetError(ValueError):
    """Invalid dataset contents or an impossible split request."""


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Dataset:
    """Feature matrix (features x samples) with integer labels in ``0..M-1``."""

    features: np.ndarray
    labels: np.ndarray
    feature_names: tuple[str, ...] | None = None
    class_names: tuple[str, ...] | None = None

    def __post_init__(self):
        X = _frozen(self.features, np.float64)
        y = _frozen(self.labels, np.int64)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)
        if X.ndim != 2:
            raise DatasetError(f"features must be 2-D, got shape {X.shape}")
        d, n = X.shape
        if d < 1:
            raise DatasetError("dataset has no features")
        if y.shape != (n,):
            raise DatasetError(f"expected {n} labels, got shape {y.shape}")
        if not np.all(np.isfinite(X)):
            j, i = np.argwhere(~np.isfinite(X))[0]
            raise DatasetError(f"non-finite value at feature {j}, sample {i}")
        if n and y.min() < 0:
            raise DatasetError("labels must be non-negative")
        if self.class_names is not None:
            object.__setattr__(self, "class_names", tuple(self.class_names))
            m = len(self.class_names)
            if n and y.max() >= m:
                raise DatasetError(f"label {int(y.max())} has no class name")
        else:
            m = int(y.max()) + 1 if n else 0
        if m < 2:
            raise DatasetError("need at least two classes")
        if n < m:
            raise DatasetError(f"{n} samples cannot cover {m} classes")
        counts = np.bincount(y, minlength=m)
        if np.any(counts == 0):
            missing = int(np.flatnonzero(counts == 0)[0])
            raise DatasetError(f"class {missing} has no samples")
        if self.feature_names is not None:
            names = tuple(self.feature_names)
            if len(names) != d:
                raise DatasetError(f"{len(names)} feature names for {d} features")
            object.__setattr__(self, "feature_names", names)

    @property
    def n_features(self) -> int:
        return self.features.shape[0]

    @property
    def n_samples(self) -> int:
        return self.features.shape[1]

    @property
    def n_classes(self) -> int:
        if self.class_names is not None:
            return len(self.class_names)
        return int(self.labels.max()) + 1

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.n_classes)

    def subset(self, indices) -> Dataset:
        """Dataset restricted to the given sample (column) indices."""
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(
            self.features[:, idx],
            self.labels[idx],
            self.feature_names,
            self._class_names_for_subset(),
        )

    def take_features(self, indices) -> Dataset:
        """Dataset restricted to the given feature (row) indices, in that order."""
        idx = np.asarray(indices, dtype=np.int64)
        names = None
        if self.feature_names is not None:
            names = tuple(self.feature_names[i] for i in idx)
        return Dataset(self.features[idx, :], self.labels, names, self.class_names)

    def with_features(self, features) -> Dataset:
        return Dataset(features, self.labels, self.feature_names, self.class_names)

    def _class_names_for_subset(self):
        # keep M fixed so that label ids stay comparable across partitions
        if self.class_names is not None:
            return self.class_names
        return tuple(str(c) for c in range(self.n_classes))


@dataclass(frozen=True)
class CentroidTarget:
    """Per-sample class-centroid targets (``d x n``) and the centroids (``d x M``)."""

    targets: np.ndarray
    centroids: np.ndarray


def build_centroid_target(ds: Dataset) -> CentroidTarget:
    """Replace every sample column by the mean of its class."""
    m = ds.n_classes
    d = ds.n_features
    centroids = np.zeros((d, m))
    for j in range(m):
        centroids[:, j] = ds.features[:, ds.labels == j].mean(axis=1)
    targets = centroids[:, ds.labels]
    return CentroidTarget(_frozen(targets, np.float64), _frozen(centroids, np.float64))


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.5
    seed: int = 0
    stratified: bool = True

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise DatasetError(f"train_fraction must lie in (0, 1), got {self.train_fraction}")
        if self.seed < 0:
            raise DatasetError("seed must be non-negative")


def _n_train(count, fraction):
    return int(math.floor(fraction * count + 0.5))


def split_indices(labels, spec: SplitSpec) -> tuple[np.ndarray, np.ndarray]:
    """Sorted (train, test) sample indices for ``spec``."""
    labels = np.asarray(labels)
    rng = np.random.default_rng(spec.seed)
    if spec.stratified:
        train, test = [], []
        for c in np.unique(labels):
            members = np.flatnonzero(labels == c)
            k = _n_train(len(members), spec.train_fraction)
            if k < 1 or k >= len(members):
                raise DatasetError(
                    f"class {int(c)} has {len(members)} samples; cannot stratify "
                    f"at train fraction {spec.train_fraction}"
                )
            members = rng.permutation(members)
            train.append(members[:k])
            test.append(members[k:])
        return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))
    n = len(labels)
    k = _n_train(n, spec.train_fraction)
    if k < 1 or k >= n:
        raise DatasetError(f"{n} samples cannot be split at fraction {spec.train_fraction}")
    perm = rng.permutation(n)
    return np.sort(perm[:k]), np.sort(perm[k:])


def split(ds: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset]:
    """Partition samples into disjoint train and test datasets."""
    train_idx, test_idx = split_indices(ds.labels, spec)
    return ds.subset(train_idx), ds.subset(test_idx)


def stratified_folds(labels, n_folds: int, seed: int) -> list[np.ndarray]:
    """Assign samples to ``n_folds`` folds so every class lands in every fold."""
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    folds = [[] for _ in range(n_folds)]
    for c in np.unique(labels):
        members = rng.permutation(np.flatnonzero(labels == c))
        if len(members) < n_folds:
            raise DatasetError(
                f"class {int(c)} has {len(members)} samples; need at least {n_folds} for {n_folds}-fold CV"
            )
        for f, chunk in enumerate(np.array_split(members, n_folds)):
            folds[f].append(chunk)
    return [np.sort(np.concatenate(f)) for f in folds]


@dataclass(frozen=True)
class Standardizer:
    """Per-feature z-scoring with statistics taken from one (training) dataset."""

    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, ds: Dataset) -> Standardizer:
        mean = ds.features.mean(axis=1)
        scale = ds.features.std(axis=1)
        scale = np.where(scale > 0, scale, 1.0)
        return cls(mean, scale)

    def transform(self, ds: Dataset) -> Dataset:
        X = (ds.features - self.mean[:, None]) / self.scale[:, None]
        return ds.with_features(X)


def _parse_number(cell):
    try:
        return float(cell)
    except ValueError:
        return None


def _is_header(row, label_col):
    cells = [c for i, c in enumerate(row) if i != label_col]
    return any(_parse_number(c.strip()) is None for c in cells)


def load_csv(
    path,
    label_column: str | int = "last",
    transpose: bool = False,
    header: bool | None = None,
) -> Dataset:
    """Read a comma-delimited file into a :class:`Dataset`.

    By default rows are samples and one column holds the labels. With
    ``transpose=True`` rows are features and the ``label_column`` selector
    picks the *row* holding the labels; the optional header is then the
    first column.

    ``label_column`` is ``"last"``, ``"first"``, a 0-based index (negative
    allowed) or a header name. ``header=None`` detects a header row by the
    presence of non-numeric feature cells in the first line.

    Integer labels are remapped to ``0..M-1`` in ascending order; string
    labels in order of first appearance.
    """
    path = Path(path)
    if not path.is_file():
        raise DatasetError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8-sig") as fh:
        grid = [row for row in csv.reader(fh) if any(c.strip() for c in row)]
    if not grid:
        raise DatasetError(f"{path}: file is empty")

    if transpose:
        width = len(grid[0])
        if any(len(r) != width for r in grid):
            raise DatasetError(f"{path}: ragged rows")
        grid = [list(col) for col in zip(*grid)]

        def where(r, c):
            return c + 1, r + 1
    else:

        def where(r, c):
            return r + 1, c + 1

    width = len(grid[0])
    for r, row in enumerate(grid):
        if len(row) != width:
            raise DatasetError(f"{path}: row {where(r, 0)[0]} has {len(row)} cells, expected {width}")
    if width < 2:
        raise DatasetError(f"{path}: need a label column and at least one feature")

    names = None
    body_start = 0
    label_col = _resolve_label_column(label_column, grid[0], width, header)
    if header is None:
        header = _is_header(grid[0], label_col)
    if header:
        names = [c.strip() for c in grid[0]]
        body_start = 1
    body = grid[body_start:]
    if not body:
        raise DatasetError(f"{path}: no samples")

    feature_cols = [c for c in range(width) if c != label_col]
    X = np.empty((len(body), len(feature_cols)))
    for i, row in enumerate(body):
        for j, c in enumerate(feature_cols):
            cell = row[c].strip()
            value = _parse_number(cell)
            r_file, c_file = where(i + body_start, c)
            if value is None:
                raise DatasetError(f"non-numeric value {cell!r} at row {r_file}, col {c_file}")
            if not math.isfinite(value):
                raise DatasetError(f"non-finite value at row {r_file}, col {c_file}")
            X[i, j] = value

    raw = [row[label_col].strip() for row in body]
    for i, cell in enumerate(raw):
        if not cell:
            r_file, c_file = where(i + body_start, label_col)
            raise DatasetError(f"empty label at row {r_file}, col {c_file}")
    labels, class_names = encode_labels(raw)
    feature_names = [names[c] for c in feature_cols] if names else None
    return Dataset(X.T, labels, feature_names, class_names)


def _resolve_label_column(selector, first_row, width, header):
    if isinstance(selector, int):
        col = selector
    elif selector == "last":
        col = width - 1
    elif selector == "first":
        col = 0
    else:
        text = str(selector)
        try:
            col = int(text)
        except ValueError:
            stripped = [c.strip() for c in first_row]
            if header is False or text not in stripped:
                raise DatasetError(f"label column {text!r} not found in header") from None
            col = stripped.index(text)
    if col < 0:
        col += width
    if not 0 <= col < width:
        raise DatasetError(f"label column {selector!r} out of range for {width} columns")
    return col


def encode_labels(raw: Sequence[str]) -> tuple[np.ndarray, tuple[str, ...]]:
    """Map raw label strings to ``0..M-1``; see :func:`load_csv` for the ordering."""
    numeric = [_parse_number(c) for c in raw]
    if all(v is not None and math.isfinite(v) and float(v).is_integer() for v in numeric):
        values = [int(v) for v in numeric]
        uniq = sorted(set(values))
        index = {v: k for k, v in enumerate(uniq)}
        return np.array([index[v] for v in values], dtype=np.int64), tuple(str(v) for v in uniq)
    index: dict[str, int] = {}
    for c in raw:
        index.setdefault(c, len(index))
    return np.array([index[c] for c in raw], dtype=np.int64), tuple(index)


__all__ = [
    "CentroidTarget",
    "Dataset",
    "DatasetError",
    "SplitSpec",
    "Standardizer",
    "build_centroid_target",
    "encode_labels",
    "load_csv",
    "split",
    "split_indices",
    "stratified_folds",
]
