"""Character-level 1D-CNN: embedding -> conv1d(relu) -> flatten -> dense(relu) -> dense(sigmoid).

Forward and backward passes are written directly against NumPy so that every
gradient can be checked against finite differences. All training math runs in
float64.
"""

from dataclasses import dataclass, fields
from typing import Dict, List, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.errors import InputShapeError, UsageError
from src.tokenizer import VOCAB_SIZE

BCE_EPS = 1e-7
EMBEDDING_INIT_BOUND = 0.05

TENSOR_NAMES = ("embedding", "conv_w", "conv_b", "dense1_w", "dense1_b", "dense2_w", "dense2_b")


class Hyperparams(BaseModel):
    model_config = ConfigDict(frozen=True)

    nf: int = Field(1024, ge=1, description="Number of convolution filters")
    ks: int = Field(4, ge=1, description="Kernel size in characters")
    sl: int = Field(1, ge=1, description="Stride in characters")
    d: int = Field(100, ge=1, description="Embedding dimension")
    l: int = Field(45, ge=1, description="Sequence length in characters")  # noqa: E741
    hn: int = Field(256, ge=1, description="Width of the hidden dense layer")

    @model_validator(mode="after")
    def _kernel_fits(self) -> "Hyperparams":
        if self.ks > self.l:
            raise ValueError(f"kernel size {self.ks} exceeds sequence length {self.l}")
        return self

    @property
    def conv_out_len(self) -> int:
        return (self.l - self.ks) // self.sl + 1

    @property
    def flatten_width(self) -> int:
        return self.conv_out_len * self.nf

    def as_line(self) -> str:
        return " ".join(f"{key}={value}" for key, value in self.model_dump().items())


# Best grid point reported for the reference dataset.
DEFAULT_HYPERPARAMS = Hyperparams(nf=1024, ks=4, sl=1, d=100, l=45, hn=256)


def tensor_shapes(hp: Hyperparams, vocab_size: int = VOCAB_SIZE) -> Dict[str, Tuple[int, ...]]:
    return {
        "embedding": (vocab_size, hp.d),
        "conv_w": (hp.ks, hp.d, hp.nf),
        "conv_b": (hp.nf,),
        "dense1_w": (hp.flatten_width, hp.hn),
        "dense1_b": (hp.hn,),
        "dense2_w": (hp.hn,),
        "dense2_b": (),
    }


@dataclass
class ModelParams:
    hp: Hyperparams
    embedding: np.ndarray
    conv_w: np.ndarray
    conv_b: np.ndarray
    dense1_w: np.ndarray
    dense1_b: np.ndarray
    dense2_w: np.ndarray
    dense2_b: np.ndarray

    @classmethod
    def zeros(cls, hp: Hyperparams, vocab_size: int = VOCAB_SIZE) -> "ModelParams":
        arrays = {name: np.zeros(shape, dtype=np.float64)
                  for name, shape in tensor_shapes(hp, vocab_size).items()}
        return cls(hp=hp, **arrays)

    @property
    def vocab_size(self) -> int:
        return self.embedding.shape[0]

    def tensors(self) -> Dict[str, np.ndarray]:
        return {f.name: getattr(self, f.name) for f in fields(self) if f.name != "hp"}

    def size(self) -> int:
        return sum(int(a.size) for a in self.tensors().values())

    def copy(self) -> "ModelParams":
        return ModelParams(hp=self.hp, **{k: v.copy() for k, v in self.tensors().items()})

    def zeros_like(self) -> "ModelParams":
        return ModelParams(hp=self.hp, **{k: np.zeros_like(v) for k, v in self.tensors().items()})

    def all_finite(self) -> bool:
        return all(np.isfinite(a).all() for a in self.tensors().values())


# Gradients share the parameter layout one-to-one.
Gradients = ModelParams


@dataclass
class ForwardCache:
    x: np.ndarray
    patches: np.ndarray
    z_conv: np.ndarray
    flat: np.ndarray
    z_hidden: np.ndarray
    hidden: np.ndarray
    prob: np.ndarray


def _glorot(rng: np.random.Generator, shape: Tuple[int, ...], fan_in: int, fan_out: int) -> np.ndarray:
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape)


def init_params(hp: Hyperparams, seed: int, vocab_size: int = VOCAB_SIZE) -> ModelParams:
    rng = np.random.default_rng(seed)
    params = ModelParams.zeros(hp, vocab_size)
    params.embedding = rng.uniform(-EMBEDDING_INIT_BOUND, EMBEDDING_INIT_BOUND,
                                   size=params.embedding.shape)
    # receptive-field fans for the convolution kernel
    params.conv_w = _glorot(rng, params.conv_w.shape, hp.ks * hp.d, hp.ks * hp.nf)
    params.dense1_w = _glorot(rng, params.dense1_w.shape, hp.flatten_width, hp.hn)
    params.dense2_w = _glorot(rng, params.dense2_w.shape, hp.hn, 1)
    return params


def sigmoid(z: np.ndarray) -> np.ndarray:
    # exp of a non-positive argument only, so neither branch overflows
    z = np.asarray(z, dtype=np.float64)
    e = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def _window_index(hp: Hyperparams) -> np.ndarray:
    """(conv_out_len, ks) matrix of input positions covered by each window."""
    starts = np.arange(hp.conv_out_len) * hp.sl
    return starts[:, None] + np.arange(hp.ks)[None, :]


def _check_input(params: ModelParams, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x)
    if x.ndim != 2 or x.shape[1] != params.hp.l:
        raise InputShapeError(f"expected index sequences of length {params.hp.l}, got shape {x.shape}")
    if x.size and (x.min() < 0 or x.max() >= params.vocab_size):
        raise InputShapeError(f"indices must lie in 0..{params.vocab_size - 1}")
    return x.astype(np.int64, copy=False)


def forward_batch(params: ModelParams, x: np.ndarray) -> Tuple[np.ndarray, ForwardCache]:
    hp = params.hp
    x = _check_input(params, x)
    batch = x.shape[0]

    embedded = params.embedding[x]                                   # (B, l, d)
    patches = embedded[:, _window_index(hp), :].reshape(batch, hp.conv_out_len, hp.ks * hp.d)
    kernel = params.conv_w.reshape(hp.ks * hp.d, hp.nf)
    z_conv = patches @ kernel + params.conv_b                        # (B, L, nf)
    flat = np.maximum(z_conv, 0.0).reshape(batch, hp.flatten_width)  # position-major
    z_hidden = flat @ params.dense1_w + params.dense1_b
    hidden = np.maximum(z_hidden, 0.0)
    prob = sigmoid(hidden @ params.dense2_w + params.dense2_b)

    cache = ForwardCache(x=x, patches=patches, z_conv=z_conv, flat=flat,
                         z_hidden=z_hidden, hidden=hidden, prob=prob)
    return prob, cache


def forward(params: ModelParams, x: np.ndarray) -> Tuple[float, ForwardCache]:
    x = np.asarray(x)
    if x.ndim != 1:
        raise InputShapeError(f"forward expects a single index sequence, got shape {x.shape}")
    prob, cache = forward_batch(params, x[None, :])
    return float(prob[0]), cache


def _bce(prob: np.ndarray, y: np.ndarray) -> np.ndarray:
    p = np.clip(prob, BCE_EPS, 1.0 - BCE_EPS)
    return -(y * np.log(p) + (1.0 - y) * np.log(1.0 - p))


def bce_loss(p: float, y: int) -> float:
    return float(_bce(np.float64(p), np.float64(y)))


def backward_arrays(params: ModelParams, x: np.ndarray, y: np.ndarray) -> Tuple[Gradients, float]:
    """Gradients of the mean BCE over a batch of index sequences ``x`` with targets ``y``."""
    x = np.asarray(x)
    if x.ndim != 2 or x.shape[0] == 0:
        raise UsageError("backward needs a nonempty batch")
    hp = params.hp
    y = np.asarray(y, dtype=np.float64)
    prob, cache = forward_batch(params, x)
    batch = x.shape[0]
    grads = params.zeros_like()

    # sigmoid and BCE folded together: dL/dz = p - y
    d_out = (prob - y) / batch
    grads.dense2_w = cache.hidden.T @ d_out
    grads.dense2_b = np.asarray(d_out.sum())

    d_hidden = np.outer(d_out, params.dense2_w) * (cache.z_hidden > 0)
    grads.dense1_w = cache.flat.T @ d_hidden
    grads.dense1_b = d_hidden.sum(axis=0)

    d_conv = (d_hidden @ params.dense1_w.T).reshape(cache.z_conv.shape) * (cache.z_conv > 0)
    rows = batch * hp.conv_out_len
    grads.conv_w = (cache.patches.reshape(rows, -1).T @ d_conv.reshape(rows, hp.nf)).reshape(
        params.conv_w.shape)
    grads.conv_b = d_conv.sum(axis=(0, 1))

    d_patches = (d_conv @ params.conv_w.reshape(hp.ks * hp.d, hp.nf).T).reshape(
        batch, hp.conv_out_len, hp.ks, hp.d)
    d_embedded = np.zeros((batch, hp.l, hp.d))
    positions = np.arange(hp.conv_out_len) * hp.sl
    for k in range(hp.ks):
        # positions are distinct for a fixed kernel offset, so plain += is safe
        d_embedded[:, positions + k, :] += d_patches[:, :, k, :]
    np.add.at(grads.embedding, cache.x, d_embedded)

    loss = float(_bce(prob, y).mean())
    return grads, loss


def backward(params: ModelParams, batch: Sequence[Tuple[np.ndarray, int]]) -> Tuple[Gradients, float]:
    if not batch:
        raise UsageError("backward needs a nonempty batch")
    x = np.stack([np.asarray(seq) for seq, _ in batch])
    y = np.array([label for _, label in batch], dtype=np.float64)
    return backward_arrays(params, x, y)


def mean_loss(params: ModelParams, x: np.ndarray, y: np.ndarray, batch_size: int = 512) -> float:
    y = np.asarray(y, dtype=np.float64)
    total = 0.0
    for start in range(0, len(x), batch_size):
        prob, _ = forward_batch(params, x[start:start + batch_size])
        total += float(_bce(prob, y[start:start + batch_size]).sum())
    return total / max(len(x), 1)


def predict_batches(params: ModelParams, x: np.ndarray, batch_size: int = 512) -> np.ndarray:
    chunks: List[np.ndarray] = []
    for start in range(0, len(x), batch_size):
        prob, _ = forward_batch(params, x[start:start + batch_size])
        chunks.append(prob)
    return np.concatenate(chunks) if chunks else np.zeros(0)
