"""Online cluster-assignment solvers and their bookkeeping.

Four modes:

* ``greedy``        -- plain argmin of the per-cluster cost.
* ``size_lb``       -- lower-bound size constraint enforced through one dual
                       variable per cluster, updated by projected gradient
                       ascent once per batch.
* ``size_lb_ub``    -- adds upper-bound duals on top of ``size_lb``.
* ``entropy``       -- a single global constraint on the entropy of the
                       cluster-size distribution, enforced by an alpha-weighted
                       penalty with exact sequential (per instance) updates.

Costs are negated scores averaged over one or two views; a score is either
the raw inner product x.w (default) or log p, per configuration.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MODES = ("greedy", "size_lb", "size_lb_ub", "entropy")


@dataclass
class ConstraintConfig:
    """Assignment-constraint settings.

    ``alpha=None`` means "resolve to 6N/50 when the dataset size is known".
    ``use_logit_scores`` picks raw inner products over log-probabilities as
    the assignment score.
    """

    mode: str = "size_lb"
    gamma: float = 0.9
    gamma_prime: float = 1.0
    alpha: float | None = None
    eta_rho: float = 0.1
    use_logit_scores: bool = True
    reset_duals_each_epoch: bool = False

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not 0 < self.gamma <= 1:
            raise ValueError(f"gamma must be in (0, 1], got {self.gamma}")
        if self.mode == "size_lb_ub" and self.gamma_prime < 1:
            raise ValueError(f"gamma_prime must be >= 1, got {self.gamma_prime}")
        if self.alpha is not None and self.alpha < 0:
            raise ValueError(f"alpha must be nonnegative, got {self.alpha}")
        if self.eta_rho <= 0:
            raise ValueError(f"eta_rho must be positive, got {self.eta_rho}")

    def resolved_alpha(self, n: int) -> float:
        return 6.0 * n / 50.0 if self.alpha is None else float(self.alpha)


@dataclass
class AssignmentState:
    """Hard labels, live cluster counts, and dual variables for one head."""

    n: int
    k: int
    labels: np.ndarray = field(init=False)
    counts: np.ndarray = field(init=False)
    duals_lb: np.ndarray = field(init=False)
    duals_ub: np.ndarray = field(init=False)

    def __post_init__(self):
        self.labels = np.full(self.n, -1, dtype=np.int64)
        self.counts = np.zeros(self.k, dtype=np.int64)
        self.duals_lb = np.zeros(self.k)
        self.duals_ub = np.zeros(self.k)

    @property
    def n_assigned(self) -> int:
        return int(np.sum(self.counts))

    def recount(self) -> np.ndarray:
        assigned = self.labels[self.labels >= 0]
        return np.bincount(assigned, minlength=self.k).astype(np.int64)

    def check_consistent(self):
        if not np.array_equal(self.counts, self.recount()):
            raise ValueError("cluster counts inconsistent with stored labels")

    def reset_duals(self):
        self.duals_lb[:] = 0.0
        self.duals_ub[:] = 0.0


def assignment_costs(*view_scores) -> np.ndarray:
    """Combine one or two per-cluster score arrays into costs.

    Cost is the negated mean of the views: -(s1 + s2)/2 for two views,
    -s for one. Accepts (K,) vectors or (b, K) batches.
    """
    if not 1 <= len(view_scores) <= 2:
        raise ValueError(f"expected 1 or 2 views, got {len(view_scores)}")
    total = np.asarray(view_scores[0], dtype=np.float64).copy()
    for extra in view_scores[1:]:
        total += np.asarray(extra, dtype=np.float64)
    return -total / len(view_scores)


def assign_size(costs, state: AssignmentState, with_upper: bool = False):
    """Dual-adjusted argmin: argmin_j cost_j - rho_j (+ rho'_j if active).

    Ties resolve to the lowest cluster index. Accepts a (K,) cost vector or a
    (b, K) batch; selection only, the caller applies the labels.
    """
    costs = np.asarray(costs, dtype=np.float64)
    adjusted = costs - state.duals_lb
    if with_upper:
        adjusted = adjusted + state.duals_ub
    return np.argmin(adjusted, axis=-1)


def apply_assignment(state: AssignmentState, indices, new_labels):
    """Store labels for the given instances and keep counts in sync."""
    indices = np.atleast_1d(np.asarray(indices, dtype=np.int64))
    new_labels = np.atleast_1d(np.asarray(new_labels, dtype=np.int64))
    for i, j in zip(indices, new_labels):
        prev = state.labels[i]
        if prev >= 0:
            state.counts[prev] -= 1
        state.labels[i] = j
        state.counts[j] += 1


def dual_update(batch_labels, cfg: ConstraintConfig, state: AssignmentState):
    """Projected gradient-ascent step on the size-constraint duals.

    rho_j  <- max(0, rho_j  - eta * (batch_fraction_j - gamma / K))
    rho'_j <- max(0, rho'_j + eta * (batch_fraction_j - gamma' / K))
    """
    batch_labels = np.asarray(batch_labels)
    if batch_labels.size == 0:
        raise ValueError("dual update needs a nonempty batch")
    frac = np.bincount(batch_labels, minlength=state.k) / batch_labels.size
    state.duals_lb = np.maximum(
        0.0, state.duals_lb - cfg.eta_rho * (frac - cfg.gamma / state.k)
    )
    if cfg.mode == "size_lb_ub":
        state.duals_ub = np.maximum(
            0.0, state.duals_ub + cfg.eta_rho * (frac - cfg.gamma_prime / state.k)
        )


def _nlogn(n) -> np.ndarray:
    n = np.asarray(n, dtype=np.float64)
    out = np.zeros_like(n)
    pos = n > 0
    out[pos] = n[pos] * np.log(n[pos])
    return out


def entropy_of_counts(counts, n: int) -> float:
    """Entropy of the cluster-size distribution, with 0*log(0) := 0."""
    counts = np.asarray(counts, dtype=np.float64)
    if n <= 0 or abs(float(np.sum(counts)) - n) > 1e-9:
        raise ValueError("counts must sum to n > 0")
    return float(np.log(n) - np.sum(_nlogn(counts)) / n)


def assign_entropy(costs, i: int, state: AssignmentState, alpha: float) -> int:
    """Entropy-penalized assignment of instance ``i``, applied in place.

    Picks argmin_j cost_j - alpha * H(counts with i moved to j) and updates
    labels/counts immediately (sequential semantics). The candidate entropies
    are evaluated incrementally: moving one instance changes at most the two
    affected count terms, so the whole call is O(K).
    """
    costs = np.asarray(costs, dtype=np.float64)
    if costs.shape != (state.k,):
        raise ValueError(f"expected {state.k} costs, got shape {costs.shape}")
    if alpha < 0:
        raise ValueError(f"alpha must be nonnegative, got {alpha}")
    prev = int(state.labels[i])
    base = state.counts.astype(np.float64)
    if prev >= 0:
        if state.counts[prev] <= 0:
            raise ValueError("counts inconsistent with stored labels")
        base[prev] -= 1.0
        n_new = state.n_assigned
    else:
        n_new = state.n_assigned + 1
    if alpha == 0.0:
        j = int(np.argmin(costs))
    else:
        # H(candidate j) = log(n) - (S0 - nlogn(base_j) + nlogn(base_j + 1))/n
        s0 = float(np.sum(_nlogn(base)))
        s_cand = s0 - _nlogn(base) + _nlogn(base + 1.0)
        h_cand = np.log(n_new) - s_cand / n_new
        j = int(np.argmin(costs - alpha * h_cand))
    apply_assignment(state, [i], [j])
    return j


def objective_entropy(costs, state: AssignmentState, alpha: float) -> float:
    """sum_i cost[i, y_i] - alpha * H(counts), over fully assigned instances."""
    costs = np.asarray(costs, dtype=np.float64)
    if np.any(state.labels < 0):
        raise ValueError("objective requires every instance to be assigned")
    assigned = float(np.sum(costs[np.arange(state.n), state.labels]))
    return assigned - alpha * entropy_of_counts(state.counts, state.n)


def init_pass(
    embeddings,
    centers,
    cfg: ConstraintConfig,
    state: AssignmentState,
    lam: float,
    batch_size: int = 128,
):
    """Assign every instance once, then fit centers to that assignment.

    Runs over the data in index order against the provisional centers: greedy
    or dual-adjusted argmin per batch (duals start at whatever the fresh state
    holds, i.e. zero), or sequential entropy updates with counts growing as
    instances are first assigned. Afterwards the centers are re-fit with the
    hardness-weighted closed form on the full assignment; clusters that ended
    up empty keep their provisional center.
    """
    from .discrimination import predict_batch
    from .numerics import log_softmax

    embeddings = np.asarray(embeddings, dtype=np.float64)
    n = embeddings.shape[0]
    if n != state.n:
        raise ValueError(f"state sized for {state.n} instances, got {n}")
    alpha = cfg.resolved_alpha(n)
    for start in range(0, n, batch_size):
        idx = np.arange(start, min(start + batch_size, n))
        probs, logits = predict_batch(embeddings[idx], centers.w, lam)
        scores = logits * lam if cfg.use_logit_scores else log_softmax(logits)
        costs = assignment_costs(scores)
        if cfg.mode == "entropy":
            for row, i in enumerate(idx):
                assign_entropy(costs[row], int(i), state, alpha)
        elif cfg.mode == "greedy":
            apply_assignment(state, idx, np.argmin(costs, axis=1))
        else:
            labels = assign_size(costs, state, with_upper=cfg.mode == "size_lb_ub")
            apply_assignment(state, idx, labels)
            dual_update(labels, cfg, state)
    probs, _ = predict_batch(embeddings, centers.w, lam)
    p_pos = probs[np.arange(n), state.labels]
    centers.reset_accumulator()
    centers.accumulate(embeddings, state.labels, p_pos)
    centers.closed_form_update()


def save_assignments(path, labels):
    """Write one "index,cluster" row per instance."""
    labels = np.asarray(labels)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("index,cluster\n")
        for i, y in enumerate(labels):
            fh.write(f"{i},{int(y)}\n")
