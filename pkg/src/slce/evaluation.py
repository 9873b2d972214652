"""Downstream evaluation: classifiers, PCA, repeated-split accuracy and lambda tuning."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from slce.data import (
    Dataset,
    DatasetError,
    SplitSpec,
    Standardizer,
    build_centroid_target,
    split,
    stratified_folds,
)
from slce.features import rank_features, select_features, top_k
from slce.lce import fit_lce
from slce.optim import AdamState
from slce.sparse import SlceConfig, fit_gates, fit_slce


# --------------------------------------------------------------------------
# classifiers
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class MlpConfig:
    hidden: int = 500
    learning_rate: float = 0.001
    epochs: int = 200
    seed: int = 0

    def __post_init__(self):
        if self.hidden < 1:
            raise ValueError("hidden width must be positive")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 0:
            raise ValueError("epochs must be non-negative")


@dataclass
class MlpClassifier:
    """One ReLU hidden layer and a softmax output. Inputs are sample columns."""

    hidden_weights: np.ndarray
    hidden_bias: np.ndarray
    output_weights: np.ndarray
    output_bias: np.ndarray
    config: MlpConfig
    trained: bool
    loss_trace: np.ndarray = field(default_factory=lambda: np.empty(0))

    @property
    def n_classes(self) -> int:
        return self.output_weights.shape[1]

    def decision_function(self, X) -> np.ndarray:
        H = np.maximum(self.hidden_weights.T @ X + self.hidden_bias[:, None], 0.0)
        return self.output_weights.T @ H + self.output_bias[:, None]

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.decision_function(np.asarray(X, dtype=np.float64)), axis=0)

    def score(self, ds: Dataset) -> float:
        return accuracy(ds.labels, self.predict(ds.features))


def accuracy(y_true, y_pred) -> float:
    y_true = np.asarray(y_true)
    return float(np.mean(y_true == np.asarray(y_pred))) if y_true.size else math.nan


def _softmax(Z):
    Z = Z - Z.max(axis=0, keepdims=True)
    E = np.exp(Z)
    return E / E.sum(axis=0, keepdims=True)


def train_mlp(train: Dataset, cfg: MlpConfig | None = None) -> MlpClassifier:
    """Minimize mean softmax cross-entropy with full-batch Adam."""
    cfg = cfg or MlpConfig()
    labels = train.labels
    m = train.n_classes
    if np.unique(labels).size < 2:
        raise DatasetError("MLP training needs at least two classes present")
    X = np.ascontiguousarray(train.features)
    d, n = X.shape
    h = cfg.hidden
    rng = np.random.default_rng(cfg.seed)
    shapes = [(d, h), (h,), (h, m), (m,)]
    sizes = [int(np.prod(s)) for s in shapes]
    params = np.concatenate(
        [
            rng.normal(0.0, 1.0 / math.sqrt(d), size=d * h),
            np.zeros(h),
            rng.normal(0.0, 1.0 / math.sqrt(h), size=h * m),
            np.zeros(m),
        ]
    )
    offsets = np.cumsum([0] + sizes)
    # views into the flat vector, column-major like every other optimized matrix
    W1, b1, W2, b2 = (
        params[offsets[i] : offsets[i + 1]].reshape(s, order="F") for i, s in enumerate(shapes)
    )
    Y = np.zeros((m, n))
    Y[labels, np.arange(n)] = 1.0
    state = AdamState.fresh(params.size, cfg.learning_rate)
    grad = np.empty_like(params)
    gW1, gb1, gW2, gb2 = (
        grad[offsets[i] : offsets[i + 1]].reshape(s, order="F") for i, s in enumerate(shapes)
    )
    losses = np.empty(cfg.epochs)
    for epoch in range(cfg.epochs):
        H = np.maximum(W1.T @ X + b1[:, None], 0.0)
        P = _softmax(W2.T @ H + b2[:, None])
        losses[epoch] = -np.mean(np.log(np.maximum(P[labels, np.arange(n)], 1e-300)))
        dZ = (P - Y) / n
        gW2[...] = H @ dZ.T
        gb2[...] = dZ.sum(axis=1)
        dH = W2 @ dZ
        dH[H <= 0.0] = 0.0
        gW1[...] = X @ dH.T
        gb1[...] = dH.sum(axis=1)
        state.update_(params, grad)
    return MlpClassifier(
        W1.copy(), b1.copy(), W2.copy(), b2.copy(), cfg, trained=cfg.epochs > 0, loss_trace=losses
    )


def class_centroids(train: Dataset) -> np.ndarray:
    return build_centroid_target(train).centroids


def nearest_centroid_predict(train: Dataset, test_features) -> np.ndarray:
    """Label of the closest training-class mean (Euclidean); ties go to the smaller label."""
    C = class_centroids(train)
    T = np.asarray(test_features, dtype=np.float64)
    if T.ndim == 1:
        T = T[:, None]
    if T.shape[0] != C.shape[0]:
        raise ValueError(f"test features have {T.shape[0]} rows, expected {C.shape[0]}")
    dist = ((T[:, :, None] - C[:, None, :]) ** 2).sum(axis=0)
    return np.argmin(dist, axis=1)


# --------------------------------------------------------------------------
# PCA
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class PcaEmbedding:
    train_coords: np.ndarray
    test_coords: np.ndarray
    components: np.ndarray
    explained_variance: np.ndarray
    mean: np.ndarray
    degenerate: bool
    total_variance: float = 0.0

    @property
    def n_components(self) -> int:
        return self.components.shape[0]

    @property
    def explained_variance_ratio(self) -> np.ndarray:
        return self.explained_variance / self.total_variance

    def reconstruct(self, coords) -> np.ndarray:
        """Map coordinates (samples x components) back to feature columns."""
        return (np.asarray(coords) @ self.components).T + self.mean[:, None]


def pca_embed(train_features, test_features, n_components: int = 3) -> PcaEmbedding:
    """Project both sets onto principal axes fitted to the training columns only.

    Axes are ordered by explained variance, and each is signed so that its
    largest-magnitude loading is positive. If the centered training data has
    rank below ``n_components`` (including fewer features or samples than
    requested axes), only the rank-many axes are returned and
    ``degenerate`` is set.
    """
    Xtr = np.asarray(train_features, dtype=np.float64)
    Xte = np.asarray(test_features, dtype=np.float64)
    d, n = Xtr.shape
    if Xte.ndim != 2 or Xte.shape[0] != d:
        raise ValueError("train and test features must have the same number of rows")
    if n_components < 1:
        raise ValueError("n_components must be at least 1")
    mean = Xtr.mean(axis=1)
    Z = (Xtr - mean[:, None]).T
    _, s, Vt = np.linalg.svd(Z, full_matrices=False)
    tol = s.max(initial=0.0) * max(Z.shape) * np.finfo(float).eps
    rank = int(np.sum(s > tol))
    keep = min(n_components, rank)
    V = Vt[:keep].copy()
    for row in V:
        j = int(np.argmax(np.abs(row)))
        if row[j] < 0:
            row *= -1.0
    var = s**2 / max(n - 1, 1)
    return PcaEmbedding(
        train_coords=Z @ V.T,
        test_coords=(Xte - mean[:, None]).T @ V.T,
        components=V,
        explained_variance=var[:keep],
        mean=mean,
        degenerate=keep < n_components,
        total_variance=float(var.sum()),
    )


# --------------------------------------------------------------------------
# repeated-split protocol
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class EvalProtocol:
    n_repeats: int = 20
    train_fraction: float = 0.5
    top_k_values: tuple[int, ...] = (10, 50)
    base_seed: int = 0
    stratified: bool = True
    standardize: bool = False
    mlp: MlpConfig = field(default_factory=MlpConfig)

    def __post_init__(self):
        if self.n_repeats < 1:
            raise ValueError("n_repeats must be at least 1")
        if not self.top_k_values or any(k < 1 for k in self.top_k_values):
            raise ValueError("top_k_values must be positive integers")

    def split_for(self, repeat: int) -> SplitSpec:
        return SplitSpec(self.train_fraction, self.base_seed + repeat, self.stratified)


@dataclass
class AccuracyRow:
    k: int | str
    mean: float
    std: float
    accuracies: list[float]


def _summarize(k, accs):
    a = np.asarray(accs, dtype=np.float64)
    std = float(a.std(ddof=1)) if a.size > 1 else 0.0
    return AccuracyRow(k, float(a.mean()), std, [float(x) for x in a])


def _prepare(train, test, standardize):
    if standardize:
        z = Standardizer.fit(train)
        return z.transform(train), z.transform(test)
    return train, test


def _eval_repeat(ds, slce_cfg, protocol, repeat):
    seed = protocol.base_seed + repeat
    train, test = split(ds, protocol.split_for(repeat))
    train, test = _prepare(train, test, protocol.standardize)
    cfg = replace(slce_cfg, lce=replace(slce_cfg.lce, init_seed=seed))
    target = build_centroid_target(train)
    model = fit_slce(train.features, target.targets, cfg)
    report = rank_features(model)
    mlp_cfg = replace(protocol.mlp, seed=seed)
    row = {}
    for k in protocol.top_k_values:
        # classifier input order is the data order, so k = d matches the all-features run
        idx = np.sort(top_k(report, k))
        clf = train_mlp(train.take_features(idx), mlp_cfg)
        row[k] = clf.score(test.take_features(idx))
    row["all"] = train_mlp(train, mlp_cfg).score(test)
    return row


def _run_jobs(fn, args_list, jobs):
    if jobs is None or jobs <= 1 or len(args_list) <= 1:
        return [fn(*a) for a in args_list]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, *zip(*args_list)))


def evaluate_protocol(
    ds: Dataset, slce_cfg: SlceConfig, protocol: EvalProtocol | None = None, jobs: int = 1
) -> list[AccuracyRow]:
    """Split, fit, keep the top-K gates, train the MLP and score the test half.

    One row per K plus a final ``"all"`` row using every feature. Repeat
    ``r`` uses seed ``base_seed + r`` for the split, the encoder init and the
    classifier init.
    """
    protocol = protocol or EvalProtocol()
    for k in protocol.top_k_values:
        if k > ds.n_features:
            raise ValueError(f"top-k {k} exceeds the {ds.n_features} available features")
    rows = _run_jobs(
        _eval_repeat, [(ds, slce_cfg, protocol, r) for r in range(protocol.n_repeats)], jobs
    )
    keys = list(protocol.top_k_values) + ["all"]
    return [_summarize(k, [row[k] for row in rows]) for k in keys]


# --------------------------------------------------------------------------
# lambda tuning
# --------------------------------------------------------------------------


def default_lambda_grid(n: int = 8) -> tuple[float, ...]:
    return tuple(float(x) for x in np.round(np.geomspace(0.04, 0.5, n), 6))


@dataclass(frozen=True)
class TuneSpec:
    lambda_grid: tuple[float, ...] = field(default_factory=default_lambda_grid)
    n_repeats: int = 10
    base_seed: int = 0
    standardize: bool = False

    n_folds = 2

    def __post_init__(self):
        grid = tuple(float(x) for x in self.lambda_grid)
        object.__setattr__(self, "lambda_grid", grid)
        if not grid:
            raise ValueError("lambda grid is empty")
        if any(not x >= 0 for x in grid):
            raise ValueError("lambda grid values must be non-negative")
        if any(a >= b for a, b in zip(grid, grid[1:])):
            raise ValueError("lambda grid must be strictly ascending")
        if self.n_repeats < 1:
            raise ValueError("n_repeats must be at least 1")


@dataclass
class TuneResult:
    chosen_lambda: float
    rows: list[dict]


def _tune_cell(train, spec, slce_cfg, repeat, direction):
    """Fit on one fold, score every lambda on the other."""
    folds = stratified_folds(train.labels, spec.n_folds, spec.base_seed + repeat)
    fit_idx, score_idx = folds[direction], folds[1 - direction]
    fit_ds, score_ds = _prepare(train.subset(fit_idx), train.subset(score_idx), spec.standardize)
    target = build_centroid_target(fit_ds)
    seed = slce_cfg.lce.init_seed + spec.n_folds * repeat + direction
    lce_model = fit_lce(fit_ds.features, target.targets, replace(slce_cfg.lce, init_seed=seed))
    out = []
    for lam in spec.lambda_grid:
        b, _ = fit_gates(
            lce_model.A,
            fit_ds.features,
            target.targets,
            lam,
            slce_cfg.warmup_iterations,
            slce_cfg.penalty_iterations,
            slce_cfg.learning_rate,
        )
        selected = np.sort(select_features(b).selected)
        pred = nearest_centroid_predict(fit_ds.take_features(selected), score_ds.features[selected])
        out.append((accuracy(score_ds.labels, pred), len(selected)))
    return out


def tune_lambda(train: Dataset, spec: TuneSpec | None = None, slce_cfg: SlceConfig | None = None, jobs: int = 1) -> TuneResult:
    """Repeated stratified 2-fold CV over the lambda grid.

    Each cell fits the encoder on one fold, then for every lambda fits the
    gates, applies the ratio cut-off and scores a nearest-centroid
    classifier on the other fold. The lambda with the best mean held-out
    accuracy wins; ties go to the larger lambda.
    """
    spec = spec or TuneSpec()
    slce_cfg = slce_cfg or SlceConfig()
    counts = train.class_counts()
    if counts.min() < spec.n_folds:
        raise DatasetError(
            f"class {int(np.argmin(counts))} has {int(counts.min())} samples; "
            f"need at least {spec.n_folds} for {spec.n_folds}-fold CV"
        )
    cells = [(train, spec, slce_cfg, r, f) for r in range(spec.n_repeats) for f in range(spec.n_folds)]
    results = _run_jobs(_tune_cell, cells, jobs)
    rows = []
    for i, lam in enumerate(spec.lambda_grid):
        accs = np.array([cell[i][0] for cell in results])
        sizes = np.array([cell[i][1] for cell in results])
        rows.append(
            {
                "lambda": lam,
                "mean_accuracy": float(accs.mean()),
                "std_accuracy": float(accs.std(ddof=1)) if accs.size > 1 else 0.0,
                "mean_selected": float(sizes.mean()),
                "accuracies": [float(a) for a in accs],
            }
        )
    best = max(r["mean_accuracy"] for r in rows)
    chosen = max(r["lambda"] for r in rows if r["mean_accuracy"] >= best - 1e-12)
    return TuneResult(chosen, rows)
