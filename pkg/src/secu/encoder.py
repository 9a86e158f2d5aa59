"""Small MLP encoder with manual forward/backward and momentum SGD.

The network is a chain of fully connected layers with rectifier activations
on the hidden layers and a final unit-norm projection of the output, so every
embedding lives on the sphere. Gradients are computed by an explicit reverse
pass (no autodiff); the unit-norm projection contributes the Jacobian
(I - e e^T)/||z|| where e is the emitted embedding and z the pre-norm output.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import EPS_NORM, DegenerateVectorError, make_rng, matmul


class StaleTapeError(ValueError):
    """A tape was produced by a forward pass of an older parameter state."""


@dataclass
class LrSchedule:
    """Linear warmup to ``base_lr`` followed by cosine decay to zero.

    During warmup, epoch e runs at base_lr * (e + 1) / warmup_epochs. After
    warmup, epoch e runs at base_lr * 0.5 * (1 + cos(pi * t)) where t sweeps
    [0, 1] across the remaining epochs (t = 0 right at the seam).
    """

    base_lr: float
    warmup_epochs: int
    total_epochs: int

    def __post_init__(self):
        if self.base_lr <= 0:
            raise ValueError(f"base_lr must be positive, got {self.base_lr}")
        if not 0 <= self.warmup_epochs <= self.total_epochs:
            raise ValueError(
                f"need 0 <= warmup_epochs <= total_epochs, got "
                f"{self.warmup_epochs} / {self.total_epochs}"
            )

    def at(self, epoch: int) -> float:
        if not 0 <= epoch < self.total_epochs:
            raise ValueError(f"epoch {epoch} outside [0, {self.total_epochs})")
        if epoch < self.warmup_epochs:
            return self.base_lr * (epoch + 1) / self.warmup_epochs
        span = self.total_epochs - self.warmup_epochs - 1
        t = 0.0 if span <= 0 else (epoch - self.warmup_epochs) / span
        return self.base_lr * 0.5 * (1.0 + np.cos(np.pi * t))


@dataclass
class ActivationTape:
    """Intermediates captured by one forward pass, consumed by backward."""

    inputs: np.ndarray            # (b, d_in)
    pre_acts: list                # per layer pre-activation, (b, dims[l+1])
    hidden: list                  # per hidden layer post-activation
    pre_norm: np.ndarray          # (b, d_out) final linear output
    norms: np.ndarray             # (b, 1) row norms of pre_norm
    embeddings: np.ndarray        # (b, d_out) unit rows
    version: int


@dataclass
class ParamGrads:
    weights: list
    biases: list

    def __iadd__(self, other: "ParamGrads") -> "ParamGrads":
        for w, ow in zip(self.weights, other.weights):
            w += ow
        for b, ob in zip(self.biases, other.biases):
            b += ob
        return self


class EncoderMLP:
    """MLP f(.) mapping raw features to unit-norm embeddings.

    Parameters
    ----------
    layer_dims : sequence of int
        [d_in, h_1, ..., d_out]; at least one linear layer (length >= 2).
    rng : np.random.Generator
        Source for the fan-in scaled uniform weight init.
    """

    def __init__(self, layer_dims, rng: np.random.Generator):
        dims = [int(d) for d in layer_dims]
        if len(dims) < 2:
            raise ValueError("encoder needs at least one linear layer")
        if any(d < 1 for d in dims):
            raise ValueError(f"all layer dims must be positive, got {dims}")
        self.layer_dims = dims
        self.weights = []
        self.biases = []
        for fan_in, fan_out in zip(dims[:-1], dims[1:]):
            bound = 1.0 / np.sqrt(fan_in)
            self.weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
            self.biases.append(rng.uniform(-bound, bound, size=fan_out))
        self.momentum_w = [np.zeros_like(w) for w in self.weights]
        self.momentum_b = [np.zeros_like(b) for b in self.biases]
        self.version = 0

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    @property
    def out_dim(self) -> int:
        return self.layer_dims[-1]

    def forward(self, x) -> tuple[np.ndarray, ActivationTape]:
        """Embed a batch of inputs; returns (unit-norm embeddings, tape)."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.layer_dims[0]:
            raise ValueError(
                f"expected input of shape (b, {self.layer_dims[0]}), got {x.shape}"
            )
        pre_acts, hidden = [], []
        h = x
        for l in range(self.n_layers):
            z = matmul(h, self.weights[l].T) + self.biases[l]
            pre_acts.append(z)
            if l < self.n_layers - 1:
                h = np.maximum(z, 0.0)
                hidden.append(h)
        pre_norm = pre_acts[-1]
        norms = np.sqrt(np.sum(pre_norm * pre_norm, axis=1, keepdims=True))
        if np.any(norms <= EPS_NORM):
            raise DegenerateVectorError("encoder output collapsed to zero norm")
        emb = pre_norm / norms
        tape = ActivationTape(x, pre_acts, hidden, pre_norm, norms, emb, self.version)
        return emb, tape

    def backward(self, tape: ActivationTape, grad_embedding) -> ParamGrads:
        """Backpropagate d(loss)/d(embedding) to parameter gradients.

        Contributions are summed over the batch; scale ``grad_embedding``
        beforehand if a mean is wanted.
        """
        if tape.version != self.version:
            raise StaleTapeError(
                f"tape from parameter version {tape.version}, now {self.version}"
            )
        g = np.asarray(grad_embedding, dtype=np.float64)
        if g.shape != tape.embeddings.shape:
            raise ValueError(
                f"grad shape {g.shape} != embedding shape {tape.embeddings.shape}"
            )
        e = tape.embeddings
        # Through the unit-norm projection: (g - (g.e) e) / ||z||.
        delta = (g - np.sum(g * e, axis=1, keepdims=True) * e) / tape.norms
        grads_w = [None] * self.n_layers
        grads_b = [None] * self.n_layers
        for l in range(self.n_layers - 1, -1, -1):
            below = tape.inputs if l == 0 else tape.hidden[l - 1]
            grads_w[l] = matmul(delta.T, below)
            grads_b[l] = np.sum(delta, axis=0)
            if l > 0:
                delta = matmul(delta, self.weights[l]) * (tape.pre_acts[l - 1] > 0)
        return ParamGrads(grads_w, grads_b)

    def zero_grads(self) -> ParamGrads:
        return ParamGrads(
            [np.zeros_like(w) for w in self.weights],
            [np.zeros_like(b) for b in self.biases],
        )

    def sgd_step(self, grads: ParamGrads, lr: float, momentum: float = 0.0):
        """buf <- momentum*buf + grad; param <- param - lr*buf."""
        if lr < 0:
            raise ValueError(f"lr must be nonnegative, got {lr}")
        if not 0 <= momentum < 1:
            raise ValueError(f"momentum must be in [0, 1), got {momentum}")
        for gw, w in zip(grads.weights, self.weights):
            if gw.shape != w.shape:
                raise ValueError(f"weight grad shape {gw.shape} != {w.shape}")
        for l in range(self.n_layers):
            self.momentum_w[l] = momentum * self.momentum_w[l] + grads.weights[l]
            self.momentum_b[l] = momentum * self.momentum_b[l] + grads.biases[l]
            self.weights[l] = self.weights[l] - lr * self.momentum_w[l]
            self.biases[l] = self.biases[l] - lr * self.momentum_b[l]
        self.version += 1


def default_encoder(d_in: int, hidden_dims, d_out: int, seed: int) -> EncoderMLP:
    """Encoder with the package-default init stream for a given seed."""
    return EncoderMLP([d_in, *hidden_dims, d_out], make_rng(seed, 0))
