"""Sparse linear centroid-encoder feature selection.

Fit ``A`` so that ``A A^T x`` reconstructs the class centroid of ``x``, then
freeze ``A`` and learn an l1-penalized diagonal gate over the input features.
Features are ranked by gate magnitude and cut at the largest ratio between
consecutive ranked weights.
"""

from slce.data import (
    CentroidTarget,
    Dataset,
    DatasetError,
    SplitSpec,
    Standardizer,
    build_centroid_target,
    load_csv,
    split,
)
from slce.evaluation import (
    EvalProtocol,
    MlpClassifier,
    MlpConfig,
    TuneSpec,
    evaluate_protocol,
    nearest_centroid_predict,
    pca_embed,
    train_mlp,
    tune_lambda,
)
from slce.features import (
    FeatureReport,
    StabilityReport,
    cutoff,
    rank_features,
    select_features,
    stability,
    top_k,
)
from slce.kernels import BACKEND
from slce.lce import LceConfig, LceModel, TrainingError, fit_lce, lce_cost, lce_gradient
from slce.optim import AdamState, adam_step, finite_diff_gradient
from slce.sparse import SlceConfig, SlceModel, fit_slce, slce_cost, slce_gate_gradient

__version__ = "0.1.0"
