"""Predictions, discrimination losses, and their analytic gradients.

Two loss flavors share identical values but differ in the center gradient:
the standard cross entropy pulls each center toward its positives and pushes
it away from every negative in the batch, while the stabilized variant treats
negative centers as constants (stop-gradient), so a center moves only when
the batch contains positives for it. The embedding gradient is the same for
both. Everything here is stateless and operates on unit-norm rows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import log_softmax, matmul, matvec, stable_softmax


@dataclass
class Prediction:
    """Per-cluster probabilities and the pre-softmax scores they came from."""

    probs: np.ndarray   # (K,)
    logits: np.ndarray  # (K,) inner products divided by temperature


def _check_temperature(lam: float):
    if not lam > 0:
        raise ValueError(f"temperature must be positive, got {lam}")


def predict(x, w, lam: float) -> Prediction:
    """Softmax prediction of one embedding against K unit-norm centers."""
    _check_temperature(lam)
    logits = matvec(w, np.asarray(x, dtype=np.float64)) / lam
    return Prediction(stable_softmax(logits), logits)


def predict_batch(x, w, lam: float) -> tuple[np.ndarray, np.ndarray]:
    """Batch version of ``predict``: returns (probs, logits), each (b, K)."""
    _check_temperature(lam)
    logits = matmul(np.asarray(x, dtype=np.float64), np.asarray(w).T) / lam
    return stable_softmax(logits), logits


def one_hot(labels, k: int) -> np.ndarray:
    labels = np.asarray(labels)
    if np.any(labels < 0) or np.any(labels >= k):
        raise ValueError(f"labels must lie in [0, {k})")
    out = np.zeros((labels.size, k))
    out[np.arange(labels.size), labels] = 1.0
    return out


def secu_loss(x, y: int, w, lam: float) -> float:
    """-log p_y for one instance; value identical to cross entropy.

    The stop-gradient on negative centers changes gradients only, never the
    value, so this also evaluates the standard CE loss.
    """
    _check_temperature(lam)
    k = np.asarray(w).shape[0]
    if not 0 <= y < k:
        raise ValueError(f"cluster index {y} outside [0, {k})")
    logits = matvec(w, np.asarray(x, dtype=np.float64)) / lam
    return float(-log_softmax(logits)[y])


def soft_ce_loss(x, y_soft, w, lam: float) -> float:
    """Cross entropy -sum_j y_soft_j * log p_j against a soft label."""
    _check_temperature(lam)
    logits = matvec(w, np.asarray(x, dtype=np.float64)) / lam
    return float(-np.sum(np.asarray(y_soft, dtype=np.float64) * log_softmax(logits)))


def grad_x(x, y_soft, w, lam: float) -> np.ndarray:
    """d(soft CE)/dx = (1/lam) * sum_j (p_j - y_j) w_j.

    This is the raw-embedding gradient; the caller's encoder backward applies
    the unit-norm Jacobian.
    """
    _check_temperature(lam)
    w = np.asarray(w, dtype=np.float64)
    p = stable_softmax(matvec(w, np.asarray(x, dtype=np.float64)) / lam)
    return matvec(w.T, p - np.asarray(y_soft, dtype=np.float64)) / lam


def grad_x_batch(x, y_soft, w, lam: float) -> np.ndarray:
    """Batch version of ``grad_x``: (b, d) gradients for (b, K) soft labels."""
    p, _ = predict_batch(x, w, lam)
    return matmul(p - np.asarray(y_soft, dtype=np.float64), np.asarray(w)) / lam


def grad_w_secu(x, labels, w, lam: float) -> np.ndarray:
    """Center gradient with stop-gradient on negatives.

    Row j is (1/lam) * sum_{i: y_i = j} (p_ij - 1) x_i; rows of clusters with
    no positive instance in the batch are exactly zero.
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    p, _ = predict_batch(x, w, lam)
    k = np.asarray(w).shape[0]
    mask = one_hot(labels, k)
    return matmul((mask * (p - 1.0)).T, x) / lam


def grad_w_ce(x, labels, w, lam: float) -> np.ndarray:
    """Standard CE center gradient: positives pull, every negative pushes.

    Row j is (1/lam) * (sum_{i:y_i=j} (p_ij - 1) x_i + sum_{k:y_k!=j} p_kj x_k),
    i.e. (1/lam) * sum_i (p_ij - [y_i = j]) x_i.
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    p, _ = predict_batch(x, w, lam)
    k = np.asarray(w).shape[0]
    return matmul((p - one_hot(labels, k)).T, x) / lam


def soft_labels(y_prev, p_other_view, tau: float) -> np.ndarray:
    """Mix last epoch's hard label with the other view's prediction.

    Returns tau * y_prev + (1 - tau) * p_other_view; with two views, view 1
    mixes in view 2's prediction and vice versa.
    """
    if not 0 <= tau <= 1:
        raise ValueError(f"tau must be in [0, 1], got {tau}")
    y_prev = np.asarray(y_prev, dtype=np.float64)
    p_other = np.asarray(p_other_view, dtype=np.float64)
    return tau * y_prev + (1.0 - tau) * p_other
