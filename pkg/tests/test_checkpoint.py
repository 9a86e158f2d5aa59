import numpy as np
import pytest

from secu.centers import ClusterCenters
from secu.checkpoint import load_checkpoint, save_checkpoint
from secu.encoder import EncoderMLP
from secu.numerics import make_rng


def make_state(seed=0):
    enc = EncoderMLP([6, 10, 4], make_rng(seed, 0))
    grads = enc.zero_grads()
    for g in grads.weights:
        g += 0.01
    enc.sgd_step(grads, lr=0.1, momentum=0.9)  # nonzero momentum buffers
    heads = [
        ClusterCenters(make_rng(seed, 2, 0).normal(size=(3, 4))),
        ClusterCenters(make_rng(seed, 2, 1).normal(size=(5, 4))),
    ]
    heads[0].momentum += 0.25
    return enc, heads


class TestCheckpointRoundTrip:
    def test_bit_exact_round_trip(self, tmp_path):
        enc, heads = make_state()
        path = tmp_path / "ckpt.bin"
        save_checkpoint(path, enc, heads)
        enc2, heads2 = load_checkpoint(path)
        assert enc2.layer_dims == enc.layer_dims
        for a, b in zip(enc.weights, enc2.weights):
            assert np.array_equal(a, b)
        for a, b in zip(enc.biases, enc2.biases):
            assert np.array_equal(a, b)
        for a, b in zip(enc.momentum_w, enc2.momentum_w):
            assert np.array_equal(a, b)
        assert len(heads2) == 2
        for h, h2 in zip(heads, heads2):
            assert np.array_equal(h.w, h2.w)
            assert np.array_equal(h.momentum, h2.momentum)

    def test_loaded_encoder_embeds_identically(self, tmp_path):
        enc, heads = make_state()
        path = tmp_path / "ckpt.bin"
        save_checkpoint(path, enc, heads)
        enc2, _ = load_checkpoint(path)
        x = make_rng(1).normal(size=(5, 6))
        a, _ = enc.forward(x)
        b, _ = enc2.forward(x)
        assert np.array_equal(a, b)

    def test_no_heads(self, tmp_path):
        enc, _ = make_state()
        path = tmp_path / "ckpt.bin"
        save_checkpoint(path, enc, [])
        _, heads = load_checkpoint(path)
        assert heads == []

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "ckpt.bin"
        path.write_bytes(b"JUNKJUNKJUNK")
        with pytest.raises(ValueError, match="magic"):
            load_checkpoint(path)

    def test_truncation_detected(self, tmp_path):
        enc, heads = make_state()
        path = tmp_path / "ckpt.bin"
        save_checkpoint(path, enc, heads)
        data = path.read_bytes()
        cut = tmp_path / "cut.bin"
        cut.write_bytes(data[:-16])
        with pytest.raises(ValueError, match="truncated"):
            load_checkpoint(cut)

    def test_trailing_bytes_detected(self, tmp_path):
        enc, heads = make_state()
        path = tmp_path / "ckpt.bin"
        save_checkpoint(path, enc, heads)
        path.write_bytes(path.read_bytes() + b"\x00")
        with pytest.raises(ValueError, match="trailing"):
            load_checkpoint(path)
