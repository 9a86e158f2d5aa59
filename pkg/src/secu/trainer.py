"""Training loop: joint encoder, assignment, and center optimization.

Each epoch first freezes a copy of every head's centers. Per batch, two
augmented views are embedded; the representation loss scores both views
against the frozen centers with soft labels that mix last epoch's hard label
with the other view's prediction, and only this loss reaches the encoder.
The clustering path then treats the embeddings as constants: it re-scores
them against the live centers, updates the hard assignments under the head's
constraint, and finally updates the centers from the new hard labels
(positives only, both views averaged). Heads share the encoder and nothing
else.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .assignment import (
    AssignmentState,
    ConstraintConfig,
    apply_assignment,
    assign_entropy,
    assign_size,
    assignment_costs,
    dual_update,
    objective_entropy,
)
from .centers import ClusterCenters
from .data_io import AugmentConfig, Dataset, augment_batch
from .discrimination import grad_w_secu, one_hot, predict_batch, soft_labels
from .encoder import EncoderMLP, LrSchedule
from .metrics import accuracy, ari, nmi, size_stats
from .numerics import log_softmax, make_rng, matmul

CENTER_MODES = ("sgd", "closed_form", "coke")


@dataclass
class TrainConfig:
    epochs: int = 50
    batch_size: int = 128
    seed: int = 0
    tau: float = 0.2
    temperature: float = 0.05
    temperature_centers: float | None = None
    heads: tuple = (10,)
    center_mode: str = "sgd"
    lr_centers: float = 1.2
    center_momentum: float = 0.9
    lr_encoder: float = 0.2
    encoder_momentum: float = 0.9
    warmup_epochs: int = 5
    hidden_dims: tuple = (64, 64)
    embed_dim: int = 128
    init_farthest: bool = True
    constraint: ConstraintConfig = field(default_factory=ConstraintConfig)
    augment: AugmentConfig = field(default_factory=AugmentConfig)

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if not 0 <= self.tau <= 1:
            raise ValueError(f"tau must be in [0, 1], got {self.tau}")
        if self.temperature <= 0:
            raise ValueError(f"temperature must be positive, got {self.temperature}")
        if not self.heads:
            raise ValueError("need at least one clustering head")
        if any(int(k) < 1 for k in self.heads):
            raise ValueError(f"head cluster counts must be >= 1, got {self.heads}")
        if self.center_mode not in CENTER_MODES:
            raise ValueError(
                f"center_mode must be one of {CENTER_MODES}, got {self.center_mode!r}"
            )
        if self.lr_centers < 0 or self.lr_encoder <= 0:
            raise ValueError("learning rates must be positive")
        if self.embed_dim < 1 or any(int(h) < 1 for h in self.hidden_dims):
            raise ValueError("encoder widths must be positive")

    @property
    def lam_centers(self) -> float:
        return self.temperature if self.temperature_centers is None else self.temperature_centers


@dataclass
class Head:
    """One clustering task: centers, assignment state, resolved constraint."""

    centers: ClusterCenters
    state: AssignmentState
    constraint: ConstraintConfig
    w_prev: np.ndarray | None = None


@dataclass
class EpochLog:
    epoch: int
    loss_repr: float
    loss_ctr: float
    objective: float | None
    count_min: int
    count_max: int
    acc: float | None
    nmi: float | None
    ari: float | None

    def to_json(self) -> str:
        return json.dumps(
            {
                "epoch": self.epoch,
                "loss_repr": self.loss_repr,
                "loss_ctr": self.loss_ctr,
                "objective": self.objective,
                "count_min": self.count_min,
                "count_max": self.count_max,
                "acc": self.acc,
                "nmi": self.nmi,
                "ari": self.ari,
            }
        )


@dataclass
class MetricsReport:
    acc: float | None
    nmi: float | None
    ari: float | None
    count_max: int
    count_min: int
    n: int
    k: int

    def as_dict(self) -> dict:
        return {
            "acc": self.acc,
            "nmi": self.nmi,
            "ari": self.ari,
            "count_max": self.count_max,
            "count_min": self.count_min,
            "n": self.n,
            "k": self.k,
        }


def embed_dataset(enc: EncoderMLP, features, batch_size: int = 512) -> np.ndarray:
    """Unit-norm embeddings of raw features, batched, tapes discarded."""
    features = np.asarray(features, dtype=np.float64)
    chunks = []
    for start in range(0, features.shape[0], batch_size):
        emb, _ = enc.forward(features[start : start + batch_size])
        chunks.append(emb)
    return np.concatenate(chunks, axis=0)


def _scores(logits, lam: float, use_logits: bool) -> np.ndarray:
    """Assignment scores from temperature-scaled logits: x.w or log p."""
    return logits * lam if use_logits else log_softmax(logits)


def _assign_batch(head: Head, costs, idx):
    """Apply the head's constrained assignment rule to one batch of costs."""
    cfg = head.constraint
    if cfg.mode == "entropy":
        for row, i in enumerate(idx):
            assign_entropy(costs[row], int(i), head.state, cfg.alpha)
    elif cfg.mode == "greedy":
        apply_assignment(head.state, idx, np.argmin(costs, axis=1))
    else:
        labels = assign_size(costs, head.state, with_upper=cfg.mode == "size_lb_ub")
        apply_assignment(head.state, idx, labels)
        dual_update(labels, cfg, head.state)


def train_epoch(
    enc: EncoderMLP,
    heads: list,
    dataset: Dataset,
    cfg: TrainConfig,
    epoch: int,
    lr_encoder: float,
    rng: np.random.Generator,
) -> EpochLog:
    """One pass of the two-view loop over a shuffled dataset."""
    lam = cfg.temperature
    lam_c = cfg.lam_centers
    n = dataset.n
    n_heads = len(heads)
    for head in heads:
        head.w_prev = head.centers.snapshot()
        if head.constraint.reset_duals_each_epoch:
            head.state.reset_duals()
        if cfg.center_mode in ("closed_form", "coke"):
            head.centers.reset_accumulator()
    perm = rng.permutation(n)
    loss_repr_sum = 0.0
    loss_ctr_sum = 0.0
    n_batches = 0
    for start in range(0, n, cfg.batch_size):
        idx = perm[start : start + cfg.batch_size]
        bsz = idx.size
        xb = dataset.features[idx]
        v1 = augment_batch(xb, cfg.augment, rng)
        v2 = augment_batch(xb, cfg.augment, rng)
        e1, tape1 = enc.forward(v1)
        e2, tape2 = enc.forward(v2)

        # Representation path: frozen centers, soft labels, encoder step.
        d_e1 = np.zeros_like(e1)
        d_e2 = np.zeros_like(e2)
        batch_repr = 0.0
        for head in heads:
            p1, logits1 = predict_batch(e1, head.w_prev, lam)
            p2, logits2 = predict_batch(e2, head.w_prev, lam)
            y_hard = one_hot(head.state.labels[idx], head.state.k)
            y1 = soft_labels(y_hard, p2, cfg.tau)
            y2 = soft_labels(y_hard, p1, cfg.tau)
            batch_repr += (
                -np.sum(y1 * log_softmax(logits1)) - np.sum(y2 * log_softmax(logits2))
            ) / (2.0 * bsz)
            scale = 1.0 / (lam * bsz * 2.0 * n_heads)
            d_e1 += matmul(p1 - y1, head.w_prev) * scale
            d_e2 += matmul(p2 - y2, head.w_prev) * scale
        grads = enc.backward(tape1, d_e1)
        grads += enc.backward(tape2, d_e2)
        enc.sgd_step(grads, lr_encoder, cfg.encoder_momentum)
        loss_repr_sum += batch_repr / n_heads

        # Clustering path: detached embeddings, live centers, hard labels.
        batch_ctr = 0.0
        for head in heads:
            w = head.centers.w
            p1c, logits1c = predict_batch(e1, w, lam_c)
            p2c, logits2c = predict_batch(e2, w, lam_c)
            use_logits = head.constraint.use_logit_scores
            costs = assignment_costs(
                _scores(logits1c, lam_c, use_logits),
                _scores(logits2c, lam_c, use_logits),
            )
            _assign_batch(head, costs, idx)
            yb = head.state.labels[idx]
            rows = np.arange(bsz)
            lp1 = log_softmax(logits1c)
            lp2 = log_softmax(logits2c)
            batch_ctr += (-np.sum(lp1[rows, yb]) - np.sum(lp2[rows, yb])) / (2.0 * bsz)
            if cfg.center_mode == "sgd":
                grad = (
                    grad_w_secu(e1, yb, w, lam_c) + grad_w_secu(e2, yb, w, lam_c)
                ) / (2.0 * bsz)
                head.centers.sgd_update(grad, cfg.lr_centers, cfg.center_momentum)
            else:
                if cfg.center_mode == "coke":
                    p_pos1 = np.zeros(bsz)
                    p_pos2 = np.zeros(bsz)
                else:
                    p_pos1 = p1c[rows, yb]
                    p_pos2 = p2c[rows, yb]
                head.centers.accumulate(e1, yb, p_pos1)
                head.centers.accumulate(e2, yb, p_pos2)
                head.centers.closed_form_update(clear=False)
        loss_ctr_sum += batch_ctr / n_heads
        n_batches += 1

    # Epoch-end reporting on clean features, canonical head first in the list.
    emb = embed_dataset(enc, dataset.features)
    main = heads[0]
    objective = None
    if main.constraint.mode == "entropy":
        _, logits = predict_batch(emb, main.centers.w, lam_c)
        costs = assignment_costs(_scores(logits, lam_c, main.constraint.use_logit_scores))
        objective = objective_entropy(costs, main.state, main.constraint.alpha)
    counts = main.state.counts
    acc_v = nmi_v = ari_v = None
    if dataset.labels is not None:
        pred = np.argmax(matmul(emb, main.centers.w.T), axis=1)
        acc_v = accuracy(pred, dataset.labels)
        nmi_v = nmi(pred, dataset.labels)
        ari_v = ari(pred, dataset.labels)
    return EpochLog(
        epoch=epoch,
        loss_repr=loss_repr_sum / max(n_batches, 1),
        loss_ctr=loss_ctr_sum / max(n_batches, 1),
        objective=objective,
        count_min=int(counts.min()),
        count_max=int(counts.max()),
        acc=acc_v,
        nmi=nmi_v,
        ari=ari_v,
    )


def fit(dataset: Dataset, cfg: TrainConfig):
    """Initialize assignments and centers, then train for cfg.epochs epochs.

    Returns (encoder, heads, logs). A dedicated pass with the encoder frozen
    initializes every head: provisional centers are sampled from the
    embeddings, every instance is assigned once under the head's constraint,
    and the centers are re-fit to that assignment.
    """
    from .assignment import init_pass

    enc = EncoderMLP(
        [dataset.dim, *cfg.hidden_dims, cfg.embed_dim], make_rng(cfg.seed, 0)
    )
    emb = embed_dataset(enc, dataset.features)
    heads = []
    for hi, k in enumerate(cfg.heads):
        centers = ClusterCenters.from_embeddings(
            emb, int(k), make_rng(cfg.seed, 2, hi), farthest=cfg.init_farthest
        )
        state = AssignmentState(dataset.n, int(k))
        constraint = replace(
            cfg.constraint, alpha=cfg.constraint.resolved_alpha(dataset.n)
        )
        init_pass(emb, centers, constraint, state, cfg.lam_centers, cfg.batch_size)
        heads.append(Head(centers, state, constraint))
    logs = []
    if cfg.epochs > 0:
        schedule = LrSchedule(
            cfg.lr_encoder, min(cfg.warmup_epochs, cfg.epochs), cfg.epochs
        )
        rng = make_rng(cfg.seed, 1)
        for epoch in range(cfg.epochs):
            logs.append(
                train_epoch(enc, heads, dataset, cfg, epoch, schedule.at(epoch), rng)
            )
    return enc, heads, logs


def evaluate(enc: EncoderMLP, centers: ClusterCenters, dataset: Dataset) -> MetricsReport:
    """Unconstrained argmax evaluation of one head on clean features."""
    if dataset.dim != enc.layer_dims[0]:
        raise ValueError(
            f"dataset dim {dataset.dim} != encoder input dim {enc.layer_dims[0]}"
        )
    emb = embed_dataset(enc, dataset.features)
    pred = np.argmax(matmul(emb, centers.w.T), axis=1)
    count_max, count_min = size_stats(pred, centers.k)
    acc_v = nmi_v = ari_v = None
    if dataset.labels is not None:
        acc_v = accuracy(pred, dataset.labels)
        nmi_v = nmi(pred, dataset.labels)
        ari_v = ari(pred, dataset.labels)
    return MetricsReport(acc_v, nmi_v, ari_v, count_max, count_min, dataset.n, centers.k)


def save_logs(logs, path):
    """Write one JSON object per epoch, schema fixed, nulls where unknown."""
    with open(path, "w", encoding="utf-8") as fh:
        for log in logs:
            fh.write(log.to_json() + "\n")
