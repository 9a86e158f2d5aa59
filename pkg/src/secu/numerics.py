"""Deterministic dense kernels, stable softmax, normalization, seeded RNG.

Every contraction in this module accumulates strictly left to right over the
reduction axis (one fused vector operation per reduction index), so two calls
with identical inputs return bit-identical float64 results and no BLAS
reassociation can change them between runs. These kernels are the reference
path used by the rest of the package.
"""

from __future__ import annotations

import numpy as np

# Global threshold below which a vector is considered degenerate (zero).
EPS_NORM = 1e-12


class DegenerateVectorError(ValueError):
    """A vector (or matrix row) has 2-norm at or below ``EPS_NORM``."""


def require_finite(a, name: str = "array") -> np.ndarray:
    """Return ``a`` as float64, raising if any entry is NaN or infinite."""
    out = np.asarray(a, dtype=np.float64)
    if not np.all(np.isfinite(out)):
        raise ValueError(f"{name} contains non-finite entries")
    return out


def stable_softmax(scores) -> np.ndarray:
    """Softmax over the last axis with max-subtraction.

    Safe for scores up to +-1e4: the largest exponent evaluated is exp(0).
    Output rows sum to 1 within 1e-12 and are shift-invariant in the input.
    """
    s = require_finite(scores, "softmax scores")
    if s.shape[-1] < 1:
        raise ValueError("softmax needs at least one score")
    e = np.exp(s - np.max(s, axis=-1, keepdims=True))
    return e / np.sum(e, axis=-1, keepdims=True)


def log_softmax(scores) -> np.ndarray:
    """log(softmax(scores)) over the last axis, computed without underflow."""
    s = require_finite(scores, "softmax scores")
    if s.shape[-1] < 1:
        raise ValueError("softmax needs at least one score")
    shifted = s - np.max(s, axis=-1, keepdims=True)
    return shifted - np.log(np.sum(np.exp(shifted), axis=-1, keepdims=True))


def normalize(v) -> np.ndarray:
    """Project a vector onto the unit sphere; degenerate input raises."""
    out = require_finite(v, "vector")
    if out.ndim != 1:
        raise ValueError(f"normalize expects a vector, got shape {out.shape}")
    n = np.sqrt(np.sum(out * out))
    if n <= EPS_NORM:
        raise DegenerateVectorError(f"norm {n:.3e} at or below {EPS_NORM:.0e}")
    return out / n


def normalize_rows(m) -> np.ndarray:
    """Row-wise unit normalization of a 2-D array; any degenerate row raises."""
    out = require_finite(m, "matrix")
    if out.ndim != 2:
        raise ValueError(f"normalize_rows expects a matrix, got shape {out.shape}")
    norms = np.sqrt(np.sum(out * out, axis=1, keepdims=True))
    if np.any(norms <= EPS_NORM):
        bad = int(np.argmax(norms[:, 0] <= EPS_NORM))
        raise DegenerateVectorError(f"row {bad} has norm at or below {EPS_NORM:.0e}")
    return out / norms


def matvec(a, x) -> np.ndarray:
    """y = A @ x with left-to-right accumulation over the columns of A."""
    a = np.asarray(a, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if a.ndim != 2 or x.ndim != 1 or a.shape[1] != x.shape[0]:
        raise ValueError(f"shape mismatch: {a.shape} @ {x.shape}")
    out = np.zeros(a.shape[0])
    for k in range(a.shape[1]):
        out += a[:, k] * x[k]
    return out


def matmul(a, b) -> np.ndarray:
    """C = A @ B with left-to-right accumulation over the inner axis."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ValueError(f"shape mismatch: {a.shape} @ {b.shape}")
    out = np.zeros((a.shape[0], b.shape[1]))
    for k in range(a.shape[1]):
        out += a[:, k, None] * b[None, k, :]
    return out


def axpy(alpha: float, x, y) -> np.ndarray:
    """alpha * x + y, elementwise, in float64."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {y.shape}")
    return float(alpha) * x + y


def make_rng(*entropy: int) -> np.random.Generator:
    """Seeded PCG64 generator; the package-wide stream-splitting rule.

    The stream is fully determined by the integer tuple: ``make_rng(seed)``
    is the root stream and children are derived by appending indices, e.g.
    ``make_rng(seed, trial)`` for independent per-trial streams. Identical
    tuples always reproduce the identical stream.
    """
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))
