"""Cluster-center maintenance on the unit sphere.

Three update rules, all ending in a row-wise projection back to unit norm:

* momentum SGD on the stop-gradient center gradient;
* the hardness-weighted closed form, where each assigned instance counts
  with weight (1 - p_iy) so poorly classified instances pull hardest -- one
  application equals a projected gradient-descent step of rate exactly 1 on
  the frozen-probability surrogate objective;
* the uniform mean over assigned instances (classic spherical k-means step),
  which the closed form degenerates to as the temperature grows.

Clusters that receive nothing keep their previous center.
"""

from __future__ import annotations

import numpy as np

from .numerics import (
    EPS_NORM,
    DegenerateVectorError,
    make_rng,
    normalize,
    normalize_rows,
)


def closed_form_from(sums, weights, w_prev) -> np.ndarray:
    """Hardness-weighted means, unit-projected; empty rows carry over."""
    w_new = np.array(w_prev, dtype=np.float64, copy=True)
    for j in range(w_new.shape[0]):
        if weights[j] > EPS_NORM:
            w_new[j] = normalize(sums[j] / weights[j])
    return w_new


def projected_gd_from(sums, weights, w_prev, lr: float) -> np.ndarray:
    """Gradient step w - lr*(w - mean_j), unit-projected, on populated rows.

    The gradient is that of the frozen-probability surrogate whose optimum
    is the hardness-weighted mean; at lr=1 this lands exactly on
    ``closed_form_from``.
    """
    w_new = np.array(w_prev, dtype=np.float64, copy=True)
    for j in range(w_new.shape[0]):
        if weights[j] > EPS_NORM:
            mean = sums[j] / weights[j]
            w_new[j] = normalize(w_new[j] - lr * (w_new[j] - mean))
    return w_new


class ClusterCenters:
    """K unit-norm center rows with SGD buffers and a hardness accumulator."""

    def __init__(self, w):
        self.w = normalize_rows(np.asarray(w, dtype=np.float64))
        self.k, self.d = self.w.shape
        self.momentum = np.zeros_like(self.w)
        self.acc_sums = np.zeros_like(self.w)
        self.acc_weights = np.zeros(self.k)

    @classmethod
    def from_embeddings(
        cls, embeddings, k: int, rng: np.random.Generator, farthest: bool = False
    ) -> "ClusterCenters":
        """Seed K centers from distinct rows of an embedding matrix.

        ``farthest`` switches from a uniform draw to farthest-point seeding:
        start from one random row, then greedily add the row with the largest
        minimum distance to the rows chosen so far.
        """
        embeddings = np.asarray(embeddings, dtype=np.float64)
        n = embeddings.shape[0]
        if k > n:
            raise ValueError(f"cannot seed {k} centers from {n} embeddings")
        if not farthest:
            chosen = rng.choice(n, size=k, replace=False)
        else:
            chosen = [int(rng.integers(n))]
            min_d2 = np.sum((embeddings - embeddings[chosen[0]]) ** 2, axis=1)
            for _ in range(k - 1):
                nxt = int(np.argmax(min_d2))
                chosen.append(nxt)
                d2 = np.sum((embeddings - embeddings[nxt]) ** 2, axis=1)
                min_d2 = np.minimum(min_d2, d2)
            chosen = np.asarray(chosen)
        return cls(embeddings[chosen])

    def snapshot(self) -> np.ndarray:
        """Deep copy of the current centers (frozen reference for one epoch)."""
        return self.w.copy()

    def sgd_update(self, grad, lr: float, momentum: float = 0.0):
        """Momentum-SGD step on every row, then renormalize rows.

        Rows whose step is exactly zero are left untouched, so a zero
        gradient with empty buffers is a true no-op.
        """
        grad = np.asarray(grad, dtype=np.float64)
        if grad.shape != self.w.shape:
            raise ValueError(f"grad shape {grad.shape} != centers {self.w.shape}")
        if lr < 0 or not 0 <= momentum < 1:
            raise ValueError(f"bad lr/momentum: {lr}, {momentum}")
        self.momentum = momentum * self.momentum + grad
        step = lr * self.momentum
        moved = np.any(step != 0.0, axis=1)
        if not np.any(moved):
            return
        stepped = self.w[moved] - step[moved]
        try:
            self.w[moved] = normalize_rows(stepped)
        except DegenerateVectorError as err:
            raise DegenerateVectorError(
                f"a center row collapsed after the step (divergent lr?): {err}"
            ) from err

    def reset_accumulator(self):
        self.acc_sums[:] = 0.0
        self.acc_weights[:] = 0.0

    def accumulate(self, x, labels, p_pos):
        """Add a batch to the hardness accumulator.

        For each instance: sums[y] += (1 - p) x and weights[y] += (1 - p),
        where p is the instance's probability for its own cluster. Instances
        at p = 1 contribute nothing.
        """
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        labels = np.atleast_1d(np.asarray(labels, dtype=np.int64))
        p_pos = np.atleast_1d(np.asarray(p_pos, dtype=np.float64))
        if np.any(p_pos < 0) or np.any(p_pos > 1):
            raise ValueError("p values must lie in [0, 1]")
        if np.any(labels < 0) or np.any(labels >= self.k):
            raise ValueError(f"labels must lie in [0, {self.k})")
        for i in range(labels.size):
            wgt = 1.0 - p_pos[i]
            self.acc_sums[labels[i]] += wgt * x[i]
            self.acc_weights[labels[i]] += wgt

    def closed_form_update(self, clear: bool = True):
        """Replace populated rows with their projected hardness-weighted mean.

        Rows whose accumulated weight is at or below the degeneracy threshold
        keep their previous center. ``clear=False`` keeps the accumulator for
        cumulative per-batch application within an epoch.
        """
        self.w = closed_form_from(self.acc_sums, self.acc_weights, self.w)
        if clear:
            self.reset_accumulator()

    def coke_update(self, x, labels):
        """Uniform-mean update: w_j <- project(mean of assigned instances).

        Empty clusters carry their previous center; an assigned set whose mean
        degenerates to (near) zero raises.
        """
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        labels = np.atleast_1d(np.asarray(labels, dtype=np.int64))
        if np.any(labels < 0) or np.any(labels >= self.k):
            raise ValueError(f"labels must lie in [0, {self.k})")
        sums = np.zeros_like(self.w)
        counts = np.zeros(self.k)
        for i in range(labels.size):
            sums[labels[i]] += x[i]
            counts[labels[i]] += 1.0
        w_new = self.w.copy()
        for j in range(self.k):
            if counts[j] > 0:
                w_new[j] = normalize(sums[j] / counts[j])
        self.w = w_new


def seed_centers(embeddings, k: int, seed: int, farthest: bool = False):
    """``from_embeddings`` with the package-default center-seeding stream."""
    return ClusterCenters.from_embeddings(embeddings, k, make_rng(seed, 2), farthest)
