"""Empirical checks of the analysis behind the stabilized center update.

Three probes:

* ``coverage_probe``: with a batch of b instances over K clusters, at most b
  clusters can see a positive instance (pigeonhole); the probe samples label
  batches and histograms how many clusters were covered.
* ``variance_ratio_probe``: on the unit sphere, compares the variance of
  instances around their own cluster mean against the variance around the
  average of the other clusters' means, and evaluates the closed-form
  prediction Var_neg = ((K-2)/((K-1)(1-a^2)) + 1/(K-1)) * Var_pos that holds
  for uniformly distributed mean directions with mean norm a.
* ``drift_probe``: runs the full-CE and positives-only center updates side by
  side on frozen embeddings and reports per-step displacement, exposing how
  much negative-instance noise moves centers that have no positives.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .discrimination import grad_w_ce, grad_w_secu, predict_batch
from .metrics import size_stats
from .numerics import make_rng, normalize_rows


def coverage_probe(k: int, b: int, trials: int, rng: np.random.Generator) -> np.ndarray:
    """Distinct clusters covered by each of ``trials`` uniform label batches.

    Raises if any batch ever covers more than b clusters (it cannot).
    """
    if not 1 <= b <= k:
        raise ValueError(f"need 1 <= b <= K, got b={b}, K={k}")
    covered = np.empty(trials, dtype=np.int64)
    for t in range(trials):
        labels = rng.integers(0, k, size=b)
        covered[t] = np.unique(labels).size
    if np.any(covered > b):
        raise AssertionError("a batch covered more clusters than its size")
    return covered


def random_unit_vectors(n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    return normalize_rows(rng.normal(size=(n, d)))


@dataclass
class SphereClusterModel:
    """K clusters of unit-norm points whose within-cluster mean has norm a.

    A sample from cluster j is built as x = a * mu_j + sqrt(1 - a^2) * t with
    t a uniform unit vector in the tangent space at mu_j, so ||x|| = 1 exactly
    and E[x | j] = a * mu_j exactly. Mean directions are drawn uniformly on
    the sphere.
    """

    k: int
    d: int
    mean_norm: float
    directions: np.ndarray

    @classmethod
    def sample_model(cls, k: int, d: int, mean_norm: float, rng) -> "SphereClusterModel":
        if not 0 < mean_norm < 1:
            raise ValueError(f"mean norm must be in (0, 1), got {mean_norm}")
        if k < 2 or d < 2:
            raise ValueError("need K >= 2 and d >= 2")
        return cls(k, d, mean_norm, random_unit_vectors(k, d, rng))

    def sample(self, clusters, rng) -> np.ndarray:
        clusters = np.asarray(clusters, dtype=np.int64)
        mu = self.directions[clusters]
        raw = rng.normal(size=(clusters.size, self.d))
        tangent = raw - np.sum(raw * mu, axis=1, keepdims=True) * mu
        tangent = normalize_rows(tangent)
        a = self.mean_norm
        return a * mu + np.sqrt(1.0 - a * a) * tangent


@dataclass
class VarianceReport:
    var_pos: float
    var_neg: float
    predicted_ratio: float
    empirical_ratio: float
    achieved_mean_norm: float


def predicted_variance_ratio(k: int, a: float) -> float:
    """Closed-form Var_neg / Var_pos for uniform centers with mean norm a."""
    return (k - 2) / ((k - 1) * (1.0 - a * a)) + 1.0 / (k - 1)


def variance_ratio_probe(
    model: SphereClusterModel, samples: int, rng: np.random.Generator
) -> VarianceReport:
    """Empirical positive/negative variances against the closed form.

    Var_pos averages ||x - a*mu_c||^2 over samples from their own cluster c;
    Var_neg averages ||x - m_c||^2 where m_c is the mean of the other
    clusters' means. The achieved per-cluster mean norm is measured from the
    samples rather than assumed.
    """
    clusters = rng.integers(0, model.k, size=samples)
    x = model.sample(clusters, rng)
    a = model.mean_norm
    mu = a * model.directions
    var_pos = float(np.mean(np.sum((x - mu[clusters]) ** 2, axis=1)))
    total = np.sum(mu, axis=0)
    others = (total[None, :] - mu) / (model.k - 1)   # row c: mean of mu_j, j != c
    var_neg = float(np.mean(np.sum((x - others[clusters]) ** 2, axis=1)))
    achieved = []
    for j in range(model.k):
        sel = clusters == j
        if np.any(sel):
            achieved.append(np.sqrt(np.sum(np.mean(x[sel], axis=0) ** 2)))
    return VarianceReport(
        var_pos=var_pos,
        var_neg=var_neg,
        predicted_ratio=predicted_variance_ratio(model.k, a),
        empirical_ratio=var_neg / var_pos,
        achieved_mean_norm=float(np.mean(achieved)),
    )


@dataclass
class DriftReport:
    displacement_ce: np.ndarray    # per-step mean center movement
    displacement_secu: np.ndarray
    final_sizes_ce: tuple[int, int]    # (max, min) after greedy re-assignment
    final_sizes_secu: tuple[int, int]


def drift_probe(
    x,
    labels,
    steps: int,
    lr: float = 0.5,
    lam: float = 0.1,
    batch_size: int = 64,
    seed: int = 0,
    w0=None,
) -> DriftReport:
    """Center trajectories under full-CE vs positives-only gradients.

    Embeddings and labels stay frozen; both trajectories start from the same
    centers (random unless ``w0`` is given) and consume identical batch
    streams. Reported per step is the mean row displacement; at the end each
    center set greedily re-assigns the data and the size extrema are
    recorded.
    """
    x = np.asarray(x, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    k = int(labels.max()) + 1
    rng = make_rng(seed, 7)
    if w0 is None:
        w0 = random_unit_vectors(k, x.shape[1], rng)
    else:
        w0 = normalize_rows(np.asarray(w0, dtype=np.float64))
    trajectories = {}
    finals = {}
    for name, grad_fn in (("ce", grad_w_ce), ("secu", grad_w_secu)):
        w = w0.copy()
        moves = np.empty(steps)
        batch_rng = make_rng(seed, 8)
        for t in range(steps):
            idx = batch_rng.choice(x.shape[0], size=min(batch_size, x.shape[0]), replace=False)
            grad = grad_fn(x[idx], labels[idx], w, lam) / idx.size
            w_new = normalize_rows(w - lr * grad)
            moves[t] = float(np.mean(np.sqrt(np.sum((w_new - w) ** 2, axis=1))))
            w = w_new
        _, logits = predict_batch(x, w, lam)
        pred = np.argmin(-logits, axis=1)
        trajectories[name] = moves
        finals[name] = size_stats(pred, k)
    return DriftReport(
        displacement_ce=trajectories["ce"],
        displacement_secu=trajectories["secu"],
        final_sizes_ce=finals["ce"],
        final_sizes_secu=finals["secu"],
    )
