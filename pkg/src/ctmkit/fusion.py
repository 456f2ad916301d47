"""Topic/embedding fusion and the reconstruction autoencoder.

The fused representation is [gamma * theta | embedding] per document. A small
dense autoencoder (input -> hidden -> latent -> hidden -> output, rectifier on
the hidden layers, identity elsewhere) is trained by full-batch gradient
descent with momentum on mean-squared reconstruction error; its bottleneck
activations are the latent matrix used for clustering and projection.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .embeddings import EmbeddingMatrix

MOMENTUM = 0.9


@dataclass
class FusedMatrix:
    matrix: np.ndarray  # n_docs x (K + D)
    gamma: float
    n_topics: int
    emb_dim: int
    ids: list[str] = field(default_factory=list)

    @property
    def n_docs(self) -> int:
        return int(self.matrix.shape[0])

    @property
    def width(self) -> int:
        return int(self.matrix.shape[1])


def fuse(theta: np.ndarray, emb: EmbeddingMatrix, gamma: float,
         ids: list[str] | None = None) -> FusedMatrix:
    """Concatenate gamma-scaled topic proportions with embedding rows.

    ``ids``, when given, is the corpus id order theta follows; it must match
    the embedding ids exactly.
    """
    theta = np.asarray(theta, dtype=np.float64)
    if gamma < 0:
        raise ValueError(f"gamma must be >= 0, got {gamma}")
    if theta.shape[0] != emb.n_docs:
        raise ValueError(
            f"row count mismatch: theta has {theta.shape[0]} rows, "
            f"embeddings have {emb.n_docs}"
        )
    if ids is not None and list(ids) != list(emb.ids):
        raise ValueError("id order mismatch between topic matrix and embeddings")
    fused = np.hstack([gamma * theta, emb.vectors.astype(np.float64)])
    return FusedMatrix(matrix=fused, gamma=float(gamma),
                       n_topics=theta.shape[1], emb_dim=emb.dim, ids=list(emb.ids))


@dataclass
class AutoencoderParams:
    w1: np.ndarray  # input -> hidden
    b1: np.ndarray
    w2: np.ndarray  # hidden -> latent
    b2: np.ndarray
    w3: np.ndarray  # latent -> hidden
    b3: np.ndarray
    w4: np.ndarray  # hidden -> output
    b4: np.ndarray
    col_mean: np.ndarray
    col_scale: np.ndarray  # stddev with constant columns pinned to 1
    seed: int
    loss_history: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def input_dim(self) -> int:
        return self.w1.shape[0]

    @property
    def latent_dim(self) -> int:
        return self.w2.shape[1]

    def weights(self) -> list[np.ndarray]:
        return [self.w1, self.b1, self.w2, self.b2, self.w3, self.b3, self.w4, self.b4]


def _standardize(X: np.ndarray, mean: np.ndarray, scale: np.ndarray) -> np.ndarray:
    return (X - mean) / scale


def _forward(p: AutoencoderParams, Xs: np.ndarray):
    z1 = Xs @ p.w1 + p.b1
    h1 = np.maximum(z1, 0.0)
    lat = h1 @ p.w2 + p.b2
    z3 = lat @ p.w3 + p.b3
    h3 = np.maximum(z3, 0.0)
    out = h3 @ p.w4 + p.b4
    return z1, h1, lat, z3, h3, out


def reconstruction_loss(p: AutoencoderParams, X: np.ndarray) -> float:
    """MSE over all entries of the standardized input."""
    Xs = _standardize(np.asarray(X, dtype=np.float64), p.col_mean, p.col_scale)
    out = _forward(p, Xs)[-1]
    return float(np.mean((out - Xs) ** 2))


def reconstruction_gradients(p: AutoencoderParams, X: np.ndarray):
    """Analytic gradients of the MSE loss w.r.t. every parameter array.

    Returns (loss, [dw1, db1, dw2, db2, dw3, db3, dw4, db4]) in the same
    order as ``AutoencoderParams.weights()``.
    """
    Xs = _standardize(np.asarray(X, dtype=np.float64), p.col_mean, p.col_scale)
    z1, h1, lat, z3, h3, out = _forward(p, Xs)
    n_entries = Xs.size
    loss = float(np.mean((out - Xs) ** 2))

    d_out = 2.0 * (out - Xs) / n_entries
    dw4 = h3.T @ d_out
    db4 = d_out.sum(axis=0)
    d_h3 = d_out @ p.w4.T
    d_z3 = d_h3 * (z3 > 0)
    dw3 = lat.T @ d_z3
    db3 = d_z3.sum(axis=0)
    d_lat = d_z3 @ p.w3.T
    dw2 = h1.T @ d_lat
    db2 = d_lat.sum(axis=0)
    d_h1 = d_lat @ p.w2.T
    d_z1 = d_h1 * (z1 > 0)
    dw1 = Xs.T @ d_z1
    db1 = d_z1.sum(axis=0)
    return loss, [dw1, db1, dw2, db2, dw3, db3, dw4, db4]


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def init_params(input_dim: int, hidden: int, latent: int, seed: int,
                col_mean: np.ndarray, col_scale: np.ndarray) -> AutoencoderParams:
    rng = np.random.default_rng(seed)
    return AutoencoderParams(
        w1=_glorot(rng, input_dim, hidden), b1=np.zeros(hidden),
        w2=_glorot(rng, hidden, latent), b2=np.zeros(latent),
        w3=_glorot(rng, latent, hidden), b3=np.zeros(hidden),
        w4=_glorot(rng, hidden, input_dim), b4=np.zeros(input_dim),
        col_mean=col_mean, col_scale=col_scale, seed=seed,
    )


def train_autoencoder(
    X,
    latent: int = 32,
    hidden: int = 128,
    epochs: int = 200,
    learning_rate: float = 1e-3,
    seed: int = 0,
) -> tuple[AutoencoderParams, np.ndarray]:
    """Fit the autoencoder and return (params, latent rows).

    ``X`` is a FusedMatrix or a plain 2-D array. Inputs are standardized per
    column (constant columns map to zero) and the statistics are stored with
    the parameters. Raises when the loss goes non-finite, reporting the epoch.
    """
    data = X.matrix if isinstance(X, FusedMatrix) else np.asarray(X, dtype=np.float64)
    n, width = data.shape
    if n < 2:
        raise ValueError(f"need at least 2 rows to train, got {n}")
    if latent >= width:
        raise ValueError(f"latent dim {latent} must be < input width {width}")

    col_mean = data.mean(axis=0)
    std = data.std(axis=0)
    col_scale = np.where(std > 0, std, 1.0)
    p = init_params(width, hidden, latent, seed, col_mean, col_scale)

    velocity = [np.zeros_like(w) for w in p.weights()]
    history = np.zeros(epochs + 1)
    with np.errstate(over="ignore", invalid="ignore"):  # divergence is caught below
        for epoch in range(epochs):
            loss, grads = reconstruction_gradients(p, data)
            if not np.isfinite(loss):
                raise ValueError(f"training diverged: non-finite loss at epoch {epoch}")
            history[epoch] = loss
            params = p.weights()
            for j in range(len(params)):
                velocity[j] = MOMENTUM * velocity[j] - learning_rate * grads[j]
                params[j] += velocity[j]
    final = reconstruction_loss(p, data)
    if not np.isfinite(final):
        raise ValueError(f"training diverged: non-finite loss at epoch {epochs}")
    history[epochs] = final
    p.loss_history = history
    return p, encode(p, data)


def encode(p: AutoencoderParams, X) -> np.ndarray:
    """Deterministic forward pass to the latent layer, using the training
    standardization statistics."""
    data = X.matrix if isinstance(X, FusedMatrix) else np.asarray(X, dtype=np.float64)
    if data.shape[1] != p.input_dim:
        raise ValueError(
            f"input width {data.shape[1]} does not match encoder width {p.input_dim}"
        )
    Xs = _standardize(data, p.col_mean, p.col_scale)
    h1 = np.maximum(Xs @ p.w1 + p.b1, 0.0)
    return h1 @ p.w2 + p.b2


def save_params(p: AutoencoderParams, path) -> None:
    """Single-file JSON export: shapes, flattened weights, standardization
    statistics, seed."""
    payload = {
        "seed": p.seed,
        "arrays": {
            name: {"shape": list(arr.shape), "data": [float(x) for x in arr.ravel()]}
            for name, arr in [
                ("w1", p.w1), ("b1", p.b1), ("w2", p.w2), ("b2", p.b2),
                ("w3", p.w3), ("b3", p.b3), ("w4", p.w4), ("b4", p.b4),
                ("col_mean", p.col_mean), ("col_scale", p.col_scale),
                ("loss_history", p.loss_history),
            ]
        },
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True) + "\n", encoding="utf-8")


def load_params(path) -> AutoencoderParams:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    arrays = {
        name: np.asarray(spec["data"], dtype=np.float64).reshape(spec["shape"])
        for name, spec in payload["arrays"].items()
    }
    return AutoencoderParams(
        w1=arrays["w1"], b1=arrays["b1"], w2=arrays["w2"], b2=arrays["b2"],
        w3=arrays["w3"], b3=arrays["b3"], w4=arrays["w4"], b4=arrays["b4"],
        col_mean=arrays["col_mean"], col_scale=arrays["col_scale"],
        seed=int(payload["seed"]), loss_history=arrays["loss_history"],
    )
