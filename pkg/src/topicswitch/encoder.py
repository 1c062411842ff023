"""Deterministic mini-transformer encoder used as the built-in embedding backend.

The encoder runs a forward pass only: token lookup plus sinusoidal
positions, then ``n_layers`` of multi-head self-attention and a
position-wise feed-forward block, each with a residual connection and
layer normalization, finally pooled into one fixed-width vector.  All
weights are drawn once from a seeded generator, so the same (text, config)
always produces the same vector bit for bit.

Tokenization is intentionally simple: lowercase, split on anything that
is not a Unicode letter or digit, then map each token into a fixed-size
id space with a stable 64-bit hash.  Texts longer than ``max_tokens``
are encoded in chunks whose pooled vectors are averaged.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from . import kernels
from .errors import EmptyText, ShapeMismatch

_TOKEN_SPLIT = re.compile(r"[\W_]+", re.UNICODE)

LAYER_NORM_EPS = 1e-5

# Scale picked so pooled vectors track token content.  Position encodings
# and the sub-layer output projections are damped: both inject components
# shared across texts, and anything shared survives mean pooling while
# per-token signal shrinks with length, which would push all cosines
# toward 1 and flatten the index.
POSITION_SCALE = 0.1
OUT_PROJECTION_SCALE = 0.1

POOLING_MODES = ("mean", "first")


@dataclass(frozen=True)
class EncoderConfig:
    """Hyper-parameters of the built-in encoder.

    Defaults are scaled down from the classic 512-wide, 6-layer stack so
    that desk-scale runs finish in milliseconds; pass ``d_model=512,
    n_layers=6`` for the full-size geometry.
    """

    d_model: int = 64
    n_heads: int = 4
    n_layers: int = 2
    d_ff: int = 128
    vocab_size: int = 4096
    max_tokens: int = 256
    seed: int = 0
    pooling: str = "mean"

    def __post_init__(self) -> None:
        for name in ("d_model", "n_heads", "n_layers", "d_ff", "vocab_size", "max_tokens"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.d_model % self.n_heads != 0:
            raise ValueError("d_model must be divisible by n_heads")
        if self.pooling not in POOLING_MODES:
            raise ValueError(f"pooling must be one of {POOLING_MODES}")

    @property
    def d_k(self) -> int:
        return self.d_model // self.n_heads


@dataclass(frozen=True)
class AttentionWeights:
    """Stacked per-layer weights; leading axis of every array is the layer.

    Shapes: ``wq``/``wk``/``wv`` (layers, heads, d_model, d_k), ``wo``
    (layers, d_model, d_model), ``w1`` (layers, d_model, d_ff), ``b1``
    (layers, d_ff), ``w2`` (layers, d_ff, d_model), ``b2`` (layers, d_model).
    """

    wq: np.ndarray
    wk: np.ndarray
    wv: np.ndarray
    wo: np.ndarray
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray

    @property
    def n_layers(self) -> int:
        return self.wq.shape[0]

    @property
    def n_heads(self) -> int:
        return self.wq.shape[1]

    @property
    def d_model(self) -> int:
        return self.wq.shape[2]


@dataclass(frozen=True)
class EmbeddingVector:
    """Fixed-width real vector representing one text span."""

    values: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 1:
            raise ShapeMismatch(f"embedding must be 1-D, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("embedding contains non-finite entries")
        object.__setattr__(self, "values", arr)

    @property
    def dim(self) -> int:
        return int(self.values.shape[0])


def as_array(vec) -> np.ndarray:
    """Coerce an EmbeddingVector, sequence, or ndarray to a float64 1-D array."""
    values = getattr(vec, "values", vec)
    return np.asarray(values, dtype=np.float64)


# --------------------------------------------------------------------------
# tokenization and seeded parameters
# --------------------------------------------------------------------------


def _token_bucket(token: str, vocab_size: int) -> int:
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") % vocab_size


def tokenize(text: str, vocab_size: int) -> np.ndarray:
    """Lowercase, split on non-alphanumerics, hash each token to an id."""
    tokens = [t for t in _TOKEN_SPLIT.split(text.lower()) if t]
    return np.array([_token_bucket(t, vocab_size) for t in tokens], dtype=np.int64)


def sinusoidal_positions(n_positions: int, d_model: int) -> np.ndarray:
    """Classic fixed sin/cos position encodings, shape (n_positions, d_model)."""
    pos = np.arange(n_positions, dtype=np.float64)[:, None]
    dim = np.arange(d_model, dtype=np.float64)[None, :]
    angle = pos / np.power(10000.0, 2.0 * np.floor(dim / 2.0) / d_model)
    enc = np.empty((n_positions, d_model))
    enc[:, 0::2] = np.sin(angle[:, 0::2])
    enc[:, 1::2] = np.cos(angle[:, 1::2])
    return enc


def seeded_weights(config: EncoderConfig) -> tuple[np.ndarray, AttentionWeights]:
    """Draw the token table and all layer weights from one seeded stream.

    Draw order is fixed (table first, then per layer: per-head q/k/v,
    output projection, FFN mats) so a config's parameters never depend
    on call history.  Biases start at zero.
    """
    rng = np.random.default_rng(config.seed)
    d, h, dk, dff, layers = (
        config.d_model,
        config.n_heads,
        config.d_k,
        config.d_ff,
        config.n_layers,
    )
    table = rng.standard_normal((config.vocab_size, d))
    wq = np.empty((layers, h, d, dk))
    wk = np.empty((layers, h, d, dk))
    wv = np.empty((layers, h, d, dk))
    wo = np.empty((layers, d, d))
    w1 = np.empty((layers, d, dff))
    b1 = np.zeros((layers, dff))
    w2 = np.empty((layers, dff, d))
    b2 = np.zeros((layers, d))
    for layer in range(layers):
        for head in range(h):
            wq[layer, head] = rng.standard_normal((d, dk)) / np.sqrt(d)
            wk[layer, head] = rng.standard_normal((d, dk)) / np.sqrt(d)
            wv[layer, head] = rng.standard_normal((d, dk)) / np.sqrt(d)
        wo[layer] = rng.standard_normal((d, d)) * OUT_PROJECTION_SCALE / np.sqrt(d)
        w1[layer] = rng.standard_normal((d, dff)) / np.sqrt(d)
        w2[layer] = rng.standard_normal((dff, d)) * OUT_PROJECTION_SCALE / np.sqrt(dff)
    weights = AttentionWeights(wq=wq, wk=wk, wv=wv, wo=wo, w1=w1, b1=b1, w2=w2, b2=b2)
    return table, weights


@lru_cache(maxsize=8)
def _materialized(config: EncoderConfig) -> tuple[np.ndarray, np.ndarray, AttentionWeights]:
    table, weights = seeded_weights(config)
    positions = sinusoidal_positions(config.max_tokens, config.d_model)
    return table, positions, weights


# --------------------------------------------------------------------------
# public operations
# --------------------------------------------------------------------------


def _check_matrix(name: str, m) -> np.ndarray:
    arr = np.asarray(m, dtype=np.float64)
    if arr.ndim != 2:
        raise ShapeMismatch(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ShapeMismatch(f"{name} contains non-finite entries")
    return np.ascontiguousarray(arr)


def scaled_dot_product_attention(q, k, v) -> np.ndarray:
    """softmax(q kᵀ / sqrt(d_k)) v.

    All three inputs are (n, d_k) matrices over the same n positions.
    """
    q, k, v = _check_matrix("q", q), _check_matrix("k", k), _check_matrix("v", v)
    if q.shape != k.shape or q.shape[0] != v.shape[0]:
        raise ShapeMismatch(f"inconsistent shapes: q{q.shape} k{k.shape} v{v.shape}")
    if q.shape[1] < 1:
        raise ShapeMismatch("d_k must be at least 1")
    return kernels.attention(q, k, v)


def multi_head_attention(x, weights: AttentionWeights, layer: int) -> np.ndarray:
    """Project x into per-head q/k/v, attend, concatenate, and project out."""
    x = _check_matrix("x", x)
    if x.shape[1] != weights.d_model:
        raise ShapeMismatch(f"x width {x.shape[1]} != d_model {weights.d_model}")
    return kernels.mha(
        x,
        np.ascontiguousarray(weights.wq[layer]),
        np.ascontiguousarray(weights.wk[layer]),
        np.ascontiguousarray(weights.wv[layer]),
        np.ascontiguousarray(weights.wo[layer]),
    )


def position_wise_ffn(x, weights: AttentionWeights, layer: int) -> np.ndarray:
    """relu(x w1 + b1) w2 + b2 applied independently per position.

    Accepts one position (1-D) or a stack of positions (2-D); the output
    matches the input rank.
    """
    arr = np.asarray(x, dtype=np.float64)
    single = arr.ndim == 1
    if single:
        arr = arr[None, :]
    arr = _check_matrix("x", arr)
    if arr.shape[1] != weights.d_model:
        raise ShapeMismatch(f"x width {arr.shape[1]} != d_model {weights.d_model}")
    out = kernels.ffn(
        arr,
        np.ascontiguousarray(weights.w1[layer]),
        np.ascontiguousarray(weights.b1[layer]),
        np.ascontiguousarray(weights.w2[layer]),
        np.ascontiguousarray(weights.b2[layer]),
    )
    return out[0] if single else out


def _encode_ids(
    ids: np.ndarray,
    config: EncoderConfig,
    table: np.ndarray,
    positions: np.ndarray,
    weights: AttentionWeights,
) -> np.ndarray:
    pooled = []
    for start in range(0, len(ids), config.max_tokens):
        chunk = ids[start : start + config.max_tokens]
        emb = np.ascontiguousarray(table[chunk] + POSITION_SCALE * positions[: len(chunk)])
        out = kernels.encoder_forward(
            emb,
            weights.wq,
            weights.wk,
            weights.wv,
            weights.wo,
            weights.w1,
            weights.b1,
            weights.w2,
            weights.b2,
            LAYER_NORM_EPS,
        )
        pooled.append(out.mean(axis=0) if config.pooling == "mean" else out[0])
    return np.mean(pooled, axis=0) if len(pooled) > 1 else pooled[0]


def encode(text: str, config: EncoderConfig = EncoderConfig()) -> EmbeddingVector:
    """Embed one text span; deterministic given (text, config).

    Raises EmptyText when the text is empty or tokenizes to nothing.
    """
    if not text or not text.strip():
        raise EmptyText("cannot encode empty text")
    ids = tokenize(text, config.vocab_size)
    if ids.size == 0:
        raise EmptyText("text has no alphanumeric tokens")
    table, positions, weights = _materialized(config)
    return EmbeddingVector(_encode_ids(ids, config, table, positions, weights))


class BuiltinBackend:
    """Embedding backend wrapping :func:`encode` behind the common interface.

    Texts that cannot be tokenized map to the zero vector so the
    zero-norm guard downstream skips the pair instead of aborting a run.
    """

    name = "builtin"

    def __init__(self, config: EncoderConfig | None = None):
        self.config = config or EncoderConfig()

    @property
    def dim(self) -> int:
        return self.config.d_model

    def embed_texts(self, texts: Sequence[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.dim))
        for i, text in enumerate(texts):
            try:
                out[i] = encode(text, self.config).values
            except EmptyText:
                pass
        return out
