"""Synthetic datasets, vector-space view augmentation, and feature files.

The generator replaces image corpora at desk scale: well separated isotropic
Gaussian blobs with known labels. Augmentation likewise stands in for image
transforms and works directly on raw feature vectors (additive noise,
coordinate masking, global scale jitter); the encoder renormalizes later, so
augmented vectors need not be unit norm.

Feature files come in two formats: CSV with an optional trailing "label"
column, and a binary container ("SECF"): magic, u32 version, u64 N, u32 d,
u8 has_labels, then float32 features row-major and u32 labels if present,
all little-endian.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .numerics import require_finite

SECF_MAGIC = b"SECF"
SECF_VERSION = 1


@dataclass
class Dataset:
    features: np.ndarray            # (N, d) float64
    labels: np.ndarray | None = None  # (N,) int64 class indices
    name: str = "dataset"

    def __post_init__(self):
        self.features = require_finite(self.features, "features")
        if self.features.ndim != 2:
            raise ValueError(f"features must be 2-D, got {self.features.shape}")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)
            if self.labels.shape != (self.features.shape[0],):
                raise ValueError("labels length must match feature rows")
            if np.any(self.labels < 0):
                raise ValueError("labels must be nonnegative")

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]


@dataclass
class AugmentConfig:
    noise_sigma: float = 0.1
    mask_prob: float = 0.1
    scale_jitter: float = 0.1

    def __post_init__(self):
        if self.noise_sigma < 0:
            raise ValueError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        if not 0 <= self.mask_prob < 1:
            raise ValueError(f"mask_prob must be in [0, 1), got {self.mask_prob}")
        if self.scale_jitter < 0:
            raise ValueError(f"scale_jitter must be >= 0, got {self.scale_jitter}")


def gen_gaussian_mixture(
    k_true: int,
    per_cluster_n: int,
    d: int,
    separation: float,
    rng: np.random.Generator,
    max_retries: int = 100,
) -> Dataset:
    """Isotropic unit-variance blobs with pairwise mean distance >= separation.

    Means are drawn from N(0, separation^2 I) and the whole draw is rejected
    until every pair is at least ``separation`` apart; after ``max_retries``
    failed draws the placement is declared infeasible.
    """
    if separation <= 0:
        raise ValueError(f"separation must be positive, got {separation}")
    means = None
    for _ in range(max_retries):
        candidate = rng.normal(0.0, separation, size=(k_true, d))
        diff = candidate[:, None, :] - candidate[None, :, :]
        dist = np.sqrt(np.sum(diff * diff, axis=2))
        np.fill_diagonal(dist, np.inf)
        if np.all(dist >= separation):
            means = candidate
            break
    if means is None:
        raise ValueError(
            f"could not place {k_true} means >= {separation} apart "
            f"in {max_retries} draws"
        )
    features = np.concatenate(
        [means[j] + rng.normal(0.0, 1.0, size=(per_cluster_n, d)) for j in range(k_true)]
    )
    labels = np.repeat(np.arange(k_true, dtype=np.int64), per_cluster_n)
    return Dataset(features, labels, name=f"gauss{k_true}x{per_cluster_n}")


def augment(x, cfg: AugmentConfig, rng: np.random.Generator) -> np.ndarray:
    """One perturbed view of a raw feature vector.

    In order: additive N(0, sigma^2 I) noise, independent coordinate zeroing
    with probability mask_prob, then one global scale factor 1 + U(-j, +j).
    """
    x = np.asarray(x, dtype=np.float64)
    out = x + rng.normal(0.0, cfg.noise_sigma, size=x.shape) if cfg.noise_sigma > 0 else x.copy()
    if cfg.mask_prob > 0:
        out = out * (rng.random(x.shape) >= cfg.mask_prob)
    if cfg.scale_jitter > 0:
        out = out * (1.0 + rng.uniform(-cfg.scale_jitter, cfg.scale_jitter))
    return out


def augment_batch(x, cfg: AugmentConfig, rng: np.random.Generator) -> np.ndarray:
    """Row-wise ``augment`` of a feature matrix (one jitter scalar per row)."""
    x = np.asarray(x, dtype=np.float64)
    out = x + rng.normal(0.0, cfg.noise_sigma, size=x.shape) if cfg.noise_sigma > 0 else x.copy()
    if cfg.mask_prob > 0:
        out = out * (rng.random(x.shape) >= cfg.mask_prob)
    if cfg.scale_jitter > 0:
        scales = 1.0 + rng.uniform(-cfg.scale_jitter, cfg.scale_jitter, size=(x.shape[0], 1))
        out = out * scales
    return out


def save_features_csv(ds: Dataset, path):
    """Write features (and labels, if any) with 17 significant digits."""
    with open(path, "w", encoding="utf-8") as fh:
        header = [f"f{j}" for j in range(ds.dim)]
        if ds.labels is not None:
            header.append("label")
        fh.write(",".join(header) + "\n")
        for i in range(ds.n):
            row = [format(v, ".17g") for v in ds.features[i]]
            if ds.labels is not None:
                row.append(str(int(ds.labels[i])))
            fh.write(",".join(row) + "\n")


def load_features_csv(path) -> Dataset:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if not header:
            raise ValueError(f"{path}: empty file")
        cols = header.split(",")
        has_labels = cols[-1] == "label"
        d = len(cols) - 1 if has_labels else len(cols)
        if d < 1:
            raise ValueError(f"{path}: no feature columns in header")
        feats, labels = [], []
        for lineno, line in enumerate(fh, start=2):
            parts = line.strip().split(",")
            if len(parts) != len(cols):
                raise ValueError(
                    f"{path}:{lineno}: expected {len(cols)} fields, got {len(parts)}"
                )
            feats.append([float(v) for v in parts[:d]])
            if has_labels:
                labels.append(int(parts[d]))
    if not feats:
        raise ValueError(f"{path}: no data rows")
    return Dataset(
        np.asarray(feats, dtype=np.float64),
        np.asarray(labels, dtype=np.int64) if has_labels else None,
        name=str(path),
    )


class BinaryParseError(ValueError):
    """Malformed binary feature file; carries the failing byte offset."""

    def __init__(self, path, offset: int, message: str):
        self.offset = offset
        super().__init__(f"{path}: byte {offset}: {message}")


def save_features_bin(ds: Dataset, path):
    """Binary container; features stored as float32 (storage mode only)."""
    with open(path, "wb") as fh:
        fh.write(SECF_MAGIC)
        fh.write(struct.pack("<IQIB", SECF_VERSION, ds.n, ds.dim,
                             1 if ds.labels is not None else 0))
        fh.write(ds.features.astype("<f4").tobytes(order="C"))
        if ds.labels is not None:
            fh.write(ds.labels.astype("<u4").tobytes())


def load_features_bin(path) -> Dataset:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != SECF_MAGIC:
        raise BinaryParseError(path, 0, f"bad magic {data[:4]!r}")
    head_fmt = "<IQIB"
    head_size = struct.calcsize(head_fmt)
    if len(data) < 4 + head_size:
        raise BinaryParseError(path, len(data), "truncated header")
    version, n, d, has_labels = struct.unpack_from(head_fmt, data, 4)
    if version != SECF_VERSION:
        raise BinaryParseError(path, 4, f"unsupported version {version}")
    if has_labels not in (0, 1):
        raise BinaryParseError(path, 4 + head_size - 1, f"bad label flag {has_labels}")
    offset = 4 + head_size
    feat_bytes = n * d * 4
    if len(data) < offset + feat_bytes:
        raise BinaryParseError(path, len(data), "truncated feature block")
    features = np.frombuffer(
        data, dtype="<f4", count=n * d, offset=offset
    ).astype(np.float64).reshape(n, d)
    offset += feat_bytes
    labels = None
    if has_labels:
        if len(data) < offset + n * 4:
            raise BinaryParseError(path, len(data), "truncated label block")
        labels = np.frombuffer(data, dtype="<u4", count=n, offset=offset).astype(np.int64)
        offset += n * 4
    if len(data) != offset:
        raise BinaryParseError(path, offset, f"{len(data) - offset} trailing bytes")
    return Dataset(features, labels, name=str(path))


def load_features(path) -> Dataset:
    """Dispatch on extension: .csv for text, anything else binary."""
    if str(path).endswith(".csv"):
        return load_features_csv(path)
    return load_features_bin(path)


def save_features(ds: Dataset, path):
    if str(path).endswith(".csv"):
        save_features_csv(ds, path)
    else:
        save_features_bin(ds, path)
