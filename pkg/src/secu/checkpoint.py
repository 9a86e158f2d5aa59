"""Binary checkpoint container for an encoder plus per-head centers.

Layout (little-endian throughout):

    magic "SECU" | u32 version | u32 layer count L | (L+1) x u32 layer dims
    per layer, in declaration order: f64 weight blob (out x in, row-major),
        f64 bias blob (out)
    momentum buffers, same shapes and order
    u32 head count H
    per head: u32 K | u32 d | f64 center blob (K x d) | f64 momentum blob
"""

from __future__ import annotations

import struct

import numpy as np

from .centers import ClusterCenters
from .encoder import EncoderMLP

MAGIC = b"SECU"
VERSION = 1


def _write_f64(fh, arr):
    fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def save_checkpoint(path, enc: EncoderMLP, heads=()):
    """Serialize an encoder and any number of center blocks."""
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, enc.n_layers))
        fh.write(struct.pack(f"<{len(enc.layer_dims)}I", *enc.layer_dims))
        for w, b in zip(enc.weights, enc.biases):
            _write_f64(fh, w)
            _write_f64(fh, b)
        for mw, mb in zip(enc.momentum_w, enc.momentum_b):
            _write_f64(fh, mw)
            _write_f64(fh, mb)
        fh.write(struct.pack("<I", len(heads)))
        for centers in heads:
            fh.write(struct.pack("<II", centers.k, centers.d))
            _write_f64(fh, centers.w)
            _write_f64(fh, centers.momentum)


class _Reader:
    def __init__(self, data, path):
        self.data = data
        self.path = path
        self.offset = 0

    def take(self, fmt):
        size = struct.calcsize(fmt)
        if self.offset + size > len(self.data):
            raise ValueError(f"{self.path}: truncated at byte {self.offset}")
        vals = struct.unpack_from(fmt, self.data, self.offset)
        self.offset += size
        return vals

    def take_f64(self, shape):
        count = int(np.prod(shape))
        size = count * 8
        if self.offset + size > len(self.data):
            raise ValueError(f"{self.path}: truncated at byte {self.offset}")
        arr = np.frombuffer(self.data, dtype="<f8", count=count, offset=self.offset)
        self.offset += size
        return arr.astype(np.float64).reshape(shape)


def load_checkpoint(path) -> tuple[EncoderMLP, list[ClusterCenters]]:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != MAGIC:
        raise ValueError(f"{path}: bad magic {data[:4]!r}")
    r = _Reader(data, path)
    r.offset = 4
    version, n_layers = r.take("<II")
    if version != VERSION:
        raise ValueError(f"{path}: unsupported version {version}")
    dims = list(r.take(f"<{n_layers + 1}I"))
    enc = EncoderMLP.__new__(EncoderMLP)
    enc.layer_dims = dims
    enc.weights, enc.biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        enc.weights.append(r.take_f64((fan_out, fan_in)))
        enc.biases.append(r.take_f64((fan_out,)))
    enc.momentum_w, enc.momentum_b = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        enc.momentum_w.append(r.take_f64((fan_out, fan_in)))
        enc.momentum_b.append(r.take_f64((fan_out,)))
    enc.version = 0
    (n_heads,) = r.take("<I")
    heads = []
    for _ in range(n_heads):
        k, d = r.take("<II")
        w = r.take_f64((k, d))
        mom = r.take_f64((k, d))
        centers = ClusterCenters(w)
        centers.w = w  # keep stored bytes; construction re-normalization
        centers.momentum = mom  # would drift rows by an ulp
        heads.append(centers)
    if r.offset != len(data):
        raise ValueError(f"{path}: {len(data) - r.offset} trailing bytes")
    return enc, heads
