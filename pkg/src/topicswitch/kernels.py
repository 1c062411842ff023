"""Numerical kernels for the encoder forward pass.

Two complete implementations live here:

* a vectorized pure-numpy path (``*_np`` functions), and
* a loop-style path compiled with numba ``@njit`` when available.

The active path is chosen once at import time.  Set the environment
variable ``TOPICSWITCH_NUMBA=0`` to force the numpy fallback; anything
else (or an importable numba) selects the compiled path.  Both paths
stay importable so tests and ``benchmarks/bench_encoder.py`` can compare
them in one process.

All kernels take C-contiguous float64 arrays.  ``fastmath`` stays off so
repeated calls are bit-identical within a path.
"""

from __future__ import annotations

import os

import numpy as np

_FLAG = os.environ.get("TOPICSWITCH_NUMBA", "1").strip().lower()
NUMBA_REQUESTED = _FLAG not in ("0", "false", "no", "off")

try:
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    NUMBA_AVAILABLE = False

NUMBA_ACTIVE = NUMBA_REQUESTED and NUMBA_AVAILABLE


# --------------------------------------------------------------------------
# pure-numpy path
# --------------------------------------------------------------------------


def softmax_rows_np(scores: np.ndarray) -> np.ndarray:
    """Row-wise softmax of a 2-D score matrix."""
    shifted = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def layer_norm_rows_np(x: np.ndarray, eps: float) -> np.ndarray:
    """Normalize each row to zero mean and unit variance (no learned gain)."""
    mean = x.mean(axis=1, keepdims=True)
    var = ((x - mean) ** 2).mean(axis=1, keepdims=True)
    return (x - mean) / np.sqrt(var + eps)


def attention_np(q: np.ndarray, k: np.ndarray, v: np.ndarray) -> np.ndarray:
    """softmax(q kᵀ / sqrt(d_k)) v for one head."""
    d_k = q.shape[1]
    scores = (q @ k.T) / np.sqrt(d_k)
    return softmax_rows_np(scores) @ v


def mha_np(
    x: np.ndarray,
    wq: np.ndarray,
    wk: np.ndarray,
    wv: np.ndarray,
    wo: np.ndarray,
) -> np.ndarray:
    """Multi-head attention for one layer.

    ``wq``/``wk``/``wv`` have shape (heads, d_model, d_k); ``wo`` is
    (d_model, d_model).  Head outputs are concatenated then projected.
    """
    n = x.shape[0]
    heads, _, d_k = wq.shape
    concat = np.empty((n, heads * d_k))
    for h in range(heads):
        concat[:, h * d_k : (h + 1) * d_k] = attention_np(x @ wq[h], x @ wk[h], x @ wv[h])
    return concat @ wo


def ffn_np(
    x: np.ndarray,
    w1: np.ndarray,
    b1: np.ndarray,
    w2: np.ndarray,
    b2: np.ndarray,
) -> np.ndarray:
    """Position-wise feed-forward: relu(x w1 + b1) w2 + b2, row by row."""
    return np.maximum(0.0, x @ w1 + b1) @ w2 + b2


def encoder_forward_np(
    emb: np.ndarray,
    wq: np.ndarray,
    wk: np.ndarray,
    wv: np.ndarray,
    wo: np.ndarray,
    w1: np.ndarray,
    b1: np.ndarray,
    w2: np.ndarray,
    b2: np.ndarray,
    eps: float,
) -> np.ndarray:
    """Run the full encoder stack over one chunk of token embeddings.

    Weight arrays carry a leading layer axis.  Each layer applies
    self-attention and the feed-forward block, each followed by a
    residual connection and row layer-normalization.
    """
    x = emb
    for layer in range(wq.shape[0]):
        x = layer_norm_rows_np(x + mha_np(x, wq[layer], wk[layer], wv[layer], wo[layer]), eps)
        x = layer_norm_rows_np(x + ffn_np(x, w1[layer], b1[layer], w2[layer], b2[layer]), eps)
    return x


# --------------------------------------------------------------------------
# numba path (loop style; compiled only when active)
# --------------------------------------------------------------------------

if NUMBA_ACTIVE:

    @njit(cache=True, nogil=True)
    def softmax_rows_nb(scores):
        n, m = scores.shape
        out = np.empty((n, m))
        for i in range(n):
            row_max = scores[i, 0]
            for j in range(1, m):
                if scores[i, j] > row_max:
                    row_max = scores[i, j]
            total = 0.0
            for j in range(m):
                e = np.exp(scores[i, j] - row_max)
                out[i, j] = e
                total += e
            for j in range(m):
                out[i, j] /= total
        return out

    @njit(cache=True, nogil=True)
    def layer_norm_rows_nb(x, eps):
        n, d = x.shape
        out = np.empty((n, d))
        for i in range(n):
            mean = 0.0
            for j in range(d):
                mean += x[i, j]
            mean /= d
            var = 0.0
            for j in range(d):
                dev = x[i, j] - mean
                var += dev * dev
            var /= d
            denom = np.sqrt(var + eps)
            for j in range(d):
                out[i, j] = (x[i, j] - mean) / denom
        return out

    @njit(cache=True, nogil=True)
    def attention_nb(q, k, v):
        d_k = q.shape[1]
        scores = np.dot(q, np.ascontiguousarray(k.T)) / np.sqrt(d_k)
        return np.dot(softmax_rows_nb(scores), v)

    @njit(cache=True, nogil=True)
    def mha_nb(x, wq, wk, wv, wo):
        n = x.shape[0]
        heads = wq.shape[0]
        d_k = wq.shape[2]
        concat = np.empty((n, heads * d_k))
        for h in range(heads):
            head = attention_nb(
                np.dot(x, np.ascontiguousarray(wq[h])),
                np.dot(x, np.ascontiguousarray(wk[h])),
                np.dot(x, np.ascontiguousarray(wv[h])),
            )
            concat[:, h * d_k : (h + 1) * d_k] = head
        return np.dot(concat, wo)

    @njit(cache=True, nogil=True)
    def ffn_nb(x, w1, b1, w2, b2):
        hidden = np.dot(x, w1)
        n, d_ff = hidden.shape
        for i in range(n):
            for j in range(d_ff):
                h = hidden[i, j] + b1[j]
                hidden[i, j] = h if h > 0.0 else 0.0
        out = np.dot(hidden, w2)
        for i in range(out.shape[0]):
            for j in range(out.shape[1]):
                out[i, j] += b2[j]
        return out

    @njit(cache=True, nogil=True)
    def encoder_forward_nb(emb, wq, wk, wv, wo, w1, b1, w2, b2, eps):
        x = emb
        for layer in range(wq.shape[0]):
            x = layer_norm_rows_nb(
                x + mha_nb(
                    x,
                    np.ascontiguousarray(wq[layer]),
                    np.ascontiguousarray(wk[layer]),
                    np.ascontiguousarray(wv[layer]),
                    np.ascontiguousarray(wo[layer]),
                ),
                eps,
            )
            x = layer_norm_rows_nb(
                x + ffn_nb(
                    x,
                    np.ascontiguousarray(w1[layer]),
                    np.ascontiguousarray(b1[layer]),
                    np.ascontiguousarray(w2[layer]),
                    np.ascontiguousarray(b2[layer]),
                ),
                eps,
            )
        return x

    softmax_rows = softmax_rows_nb
    layer_norm_rows = layer_norm_rows_nb
    attention = attention_nb
    mha = mha_nb
    ffn = ffn_nb
    encoder_forward = encoder_forward_nb
else:
    softmax_rows = softmax_rows_np
    layer_norm_rows = layer_norm_rows_np
    attention = attention_np
    mha = mha_np
    ffn = ffn_np
    encoder_forward = encoder_forward_np


def active_path() -> str:
    """Name of the kernel path selected at import time."""
    return "numba" if NUMBA_ACTIVE else "numpy"
