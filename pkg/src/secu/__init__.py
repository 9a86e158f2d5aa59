"""One-stage deep clustering on the unit sphere.

A small MLP encoder, per-head cluster centers, and online hard assignments
are optimized jointly: the encoder learns from soft two-view labels against
frozen centers, assignments are updated under a size or entropy constraint,
and centers move only toward their positive instances (stop-gradient on
negatives), either by momentum SGD or by a hardness-weighted closed form.
"""

from .assignment import (
    AssignmentState,
    ConstraintConfig,
    assign_entropy,
    assign_size,
    assignment_costs,
    dual_update,
    entropy_of_counts,
    init_pass,
    objective_entropy,
)
from .centers import ClusterCenters
from .data_io import AugmentConfig, Dataset, augment, gen_gaussian_mixture, load_features, save_features
from .discrimination import (
    grad_w_ce,
    grad_w_secu,
    grad_x,
    predict,
    predict_batch,
    secu_loss,
    soft_ce_loss,
    soft_labels,
)
from .encoder import EncoderMLP, LrSchedule
from .metrics import accuracy, ari, contingency_table, nmi, size_stats
from .numerics import make_rng, normalize, stable_softmax
from .trainer import EpochLog, Head, MetricsReport, TrainConfig, evaluate, fit, train_epoch

__version__ = "0.1.0"

__all__ = [
    "AssignmentState",
    "AugmentConfig",
    "ClusterCenters",
    "ConstraintConfig",
    "Dataset",
    "EncoderMLP",
    "EpochLog",
    "Head",
    "LrSchedule",
    "MetricsReport",
    "TrainConfig",
    "accuracy",
    "ari",
    "assign_entropy",
    "assign_size",
    "assignment_costs",
    "augment",
    "contingency_table",
    "dual_update",
    "entropy_of_counts",
    "evaluate",
    "fit",
    "gen_gaussian_mixture",
    "grad_w_ce",
    "grad_w_secu",
    "grad_x",
    "init_pass",
    "load_features",
    "make_rng",
    "nmi",
    "normalize",
    "objective_entropy",
    "predict",
    "predict_batch",
    "save_features",
    "secu_loss",
    "size_stats",
    "soft_ce_loss",
    "soft_labels",
    "stable_softmax",
    "train_epoch",
]
