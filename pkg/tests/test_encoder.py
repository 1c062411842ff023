"""Encoder math against hand cases and independent re-implementations.

The oracle functions below re-derive each definition step by step with
plain numpy, independently of the kernel implementations they check.
"""

import math

import numpy as np
import pytest

from topicswitch import kernels
from topicswitch.encoder import (
    AttentionWeights,
    BuiltinBackend,
    EncoderConfig,
    LAYER_NORM_EPS,
    POSITION_SCALE,
    encode,
    multi_head_attention,
    position_wise_ffn,
    scaled_dot_product_attention,
    seeded_weights,
    sinusoidal_positions,
    tokenize,
)
from topicswitch.errors import EmptyText, ShapeMismatch


# --- oracles ---------------------------------------------------------------


def oracle_softmax(row):
    shifted = [v - max(row) for v in row]
    exps = [math.exp(v) for v in shifted]
    total = sum(exps)
    return [e / total for e in exps]


def oracle_attention(q, k, v):
    n, d_k = q.shape
    scores = [[float(q[i] @ k[j]) / math.sqrt(d_k) for j in range(n)] for i in range(n)]
    weights = [oracle_softmax(r) for r in scores]
    return np.array([[sum(weights[i][j] * v[j, c] for j in range(n)) for c in range(v.shape[1])] for i in range(n)])


def oracle_mha(x, wq, wk, wv, wo):
    heads = [oracle_attention(x @ wq[h], x @ wk[h], x @ wv[h]) for h in range(wq.shape[0])]
    return np.hstack(heads) @ wo


def oracle_ffn(x, w1, b1, w2, b2):
    inner = x @ w1 + b1
    return np.where(inner > 0, inner, 0.0) @ w2 + b2


def oracle_layer_norm(x, eps):
    out = np.empty_like(x)
    for i in range(x.shape[0]):
        mean = x[i].mean()
        var = ((x[i] - mean) ** 2).mean()
        out[i] = (x[i] - mean) / math.sqrt(var + eps)
    return out


# --- scaled dot-product attention ------------------------------------------


def test_single_token_attends_to_itself():
    q = np.array([[0.3, -1.2]])
    k = np.array([[2.0, 0.1]])
    v = np.array([[5.0, 7.0]])
    out = scaled_dot_product_attention(q, k, v)
    np.testing.assert_array_equal(out, v)


def test_zero_scores_average_values():
    rng = np.random.default_rng(3)
    k = rng.standard_normal((4, 3))
    v = rng.standard_normal((4, 3))
    out = scaled_dot_product_attention(np.zeros((4, 3)), k, v)
    np.testing.assert_allclose(out, np.tile(v.mean(axis=0), (4, 1)), atol=1e-12)


def test_two_token_hand_case():
    q = np.array([[1.0], [0.0]])
    k = np.array([[1.0], [0.0]])
    v = np.array([[2.0], [4.0]])
    out = scaled_dot_product_attention(q, k, v)
    e = math.exp(1.0)
    row0 = (e * 2.0 + 1.0 * 4.0) / (e + 1.0)
    np.testing.assert_allclose(out, [[row0], [3.0]], atol=1e-12)


def test_attention_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        scaled_dot_product_attention(np.zeros((2, 3)), np.zeros((2, 2)), np.zeros((2, 3)))


def test_softmax_rows_sum_to_one_and_nonnegative():
    rng = np.random.default_rng(11)
    for _ in range(20):
        scores = rng.standard_normal((5, 7)) * rng.uniform(0.1, 30)
        a = kernels.softmax_rows(np.ascontiguousarray(scores))
        assert np.all(a >= 0)
        np.testing.assert_allclose(a.sum(axis=1), np.ones(5), atol=1e-9)


def test_softmax_shift_invariance():
    rng = np.random.default_rng(12)
    scores = rng.standard_normal((4, 6))
    shifted = scores.copy()
    shifted[2] += 123.5
    a = kernels.softmax_rows(np.ascontiguousarray(scores))
    b = kernels.softmax_rows(np.ascontiguousarray(shifted))
    np.testing.assert_allclose(a[2], b[2], atol=1e-12)
    np.testing.assert_array_equal(a[[0, 1, 3]], b[[0, 1, 3]])


# --- multi-head attention ---------------------------------------------------


def _identity_weights(d):
    eye = np.eye(d)[None, None]
    return AttentionWeights(
        wq=eye.copy(),
        wk=eye.copy(),
        wv=eye.copy(),
        wo=np.eye(d)[None],
        w1=np.zeros((1, d, d)),
        b1=np.zeros((1, d)),
        w2=np.zeros((1, d, d)),
        b2=np.zeros((1, d)),
    )


def test_single_head_identity_reduces_to_attention():
    rng = np.random.default_rng(4)
    x = rng.standard_normal((3, 4))
    weights = _identity_weights(4)
    out = multi_head_attention(x, weights, layer=0)
    np.testing.assert_allclose(out, scaled_dot_product_attention(x, x, x), atol=1e-12)


def test_single_token_ignores_queries_and_keys():
    rng = np.random.default_rng(5)
    d, h, dk = 4, 2, 2
    x = rng.standard_normal((1, d))
    wv = rng.standard_normal((1, h, d, dk))
    wo = rng.standard_normal((1, d, d))
    outs = []
    for _ in range(2):
        weights = AttentionWeights(
            wq=rng.standard_normal((1, h, d, dk)),
            wk=rng.standard_normal((1, h, d, dk)),
            wv=wv,
            wo=wo,
            w1=np.zeros((1, d, d)),
            b1=np.zeros((1, d)),
            w2=np.zeros((1, d, d)),
            b2=np.zeros((1, d)),
        )
        outs.append(multi_head_attention(x, weights, layer=0))
    np.testing.assert_allclose(outs[0], outs[1], atol=1e-12)
    expected = np.hstack([x @ wv[0, i] for i in range(h)]) @ wo[0]
    np.testing.assert_allclose(outs[0], expected, atol=1e-12)


def test_two_token_two_head_case_matches_oracle():
    rng = np.random.default_rng(6)
    d, h, dk = 4, 2, 2
    x = rng.standard_normal((2, d))
    wq = rng.standard_normal((1, h, d, dk))
    wk = rng.standard_normal((1, h, d, dk))
    wv = rng.standard_normal((1, h, d, dk))
    wo = rng.standard_normal((1, d, d))
    weights = AttentionWeights(
        wq=wq, wk=wk, wv=wv, wo=wo,
        w1=np.zeros((1, d, d)), b1=np.zeros((1, d)),
        w2=np.zeros((1, d, d)), b2=np.zeros((1, d)),
    )
    out = multi_head_attention(x, weights, layer=0)
    np.testing.assert_allclose(out, oracle_mha(x, wq[0], wk[0], wv[0], wo[0]), atol=1e-12)


# --- position-wise FFN -------------------------------------------------------


def test_ffn_zero_weights_return_bias():
    d, dff = 4, 6
    weights = AttentionWeights(
        wq=np.zeros((1, 1, d, d)), wk=np.zeros((1, 1, d, d)), wv=np.zeros((1, 1, d, d)),
        wo=np.zeros((1, d, d)),
        w1=np.zeros((1, d, dff)), b1=np.zeros((1, dff)),
        w2=np.ones((1, dff, d)), b2=np.full((1, d), 2.5),
    )
    out = position_wise_ffn(np.array([9.0, -3.0, 1.0, 0.5]), weights, layer=0)
    np.testing.assert_allclose(out, np.full(d, 2.5), atol=1e-12)


def test_ffn_negative_preactivations_return_bias():
    d, dff = 3, 5
    rng = np.random.default_rng(7)
    w1 = rng.standard_normal((1, d, dff))
    weights = AttentionWeights(
        wq=np.zeros((1, 1, d, d)), wk=np.zeros((1, 1, d, d)), wv=np.zeros((1, 1, d, d)),
        wo=np.zeros((1, d, d)),
        w1=w1, b1=np.full((1, dff), -1e6),
        w2=rng.standard_normal((1, dff, d)), b2=np.array([[0.5, -1.5, 3.0]]),
    )
    out = position_wise_ffn(np.array([0.1, 0.2, 0.3]), weights, layer=0)
    np.testing.assert_allclose(out, [0.5, -1.5, 3.0], atol=1e-12)


def test_ffn_seeded_case_matches_oracle():
    rng = np.random.default_rng(8)
    d, dff = 4, 7
    w1 = rng.standard_normal((1, d, dff))
    b1 = rng.standard_normal((1, dff))
    w2 = rng.standard_normal((1, dff, d))
    b2 = rng.standard_normal((1, d))
    weights = AttentionWeights(
        wq=np.zeros((1, 1, d, d)), wk=np.zeros((1, 1, d, d)), wv=np.zeros((1, 1, d, d)),
        wo=np.zeros((1, d, d)), w1=w1, b1=b1, w2=w2, b2=b2,
    )
    x = rng.standard_normal(d)
    out = position_wise_ffn(x, weights, layer=0)
    np.testing.assert_allclose(out, oracle_ffn(x, w1[0], b1[0], w2[0], b2[0]), atol=1e-12)
    stacked = rng.standard_normal((3, d))
    out2 = position_wise_ffn(stacked, weights, layer=0)
    np.testing.assert_allclose(out2, oracle_ffn(stacked, w1[0], b1[0], w2[0], b2[0]), atol=1e-12)


# --- encode ------------------------------------------------------------------


def test_encode_is_deterministic():
    cfg = EncoderConfig()
    text = "margins expanded on strong demand across regions"
    a = encode(text, cfg)
    b = encode(text, cfg)
    assert np.array_equal(a.values, b.values)


def test_encode_distinct_texts_differ():
    cfg = EncoderConfig()
    a = encode("growth in services accelerated this quarter", cfg).values
    b = encode("we are reducing our capital expenditure guidance", cfg).values
    cos = a @ b / (np.linalg.norm(a) * np.linalg.norm(b))
    assert cos < 1 - 1e-6


def test_encode_single_token_matches_step_by_step_oracle():
    cfg = EncoderConfig(d_model=8, n_heads=2, n_layers=2, d_ff=16, vocab_size=128, seed=5)
    table, weights = seeded_weights(cfg)
    ids = tokenize("revenue", cfg.vocab_size)
    assert ids.shape == (1,)
    x = (table[ids] + POSITION_SCALE * sinusoidal_positions(1, cfg.d_model)).astype(float)
    for layer in range(cfg.n_layers):
        attn = oracle_mha(
            x, weights.wq[layer], weights.wk[layer], weights.wv[layer], weights.wo[layer]
        )
        x = oracle_layer_norm(x + attn, LAYER_NORM_EPS)
        ffn = oracle_ffn(
            x, weights.w1[layer], weights.b1[layer], weights.w2[layer], weights.b2[layer]
        )
        x = oracle_layer_norm(x + ffn, LAYER_NORM_EPS)
    expected = x.mean(axis=0)
    got = encode("revenue", cfg).values
    np.testing.assert_allclose(got, expected, atol=1e-12)


def test_encode_rejects_empty_and_tokenless_text():
    with pytest.raises(EmptyText):
        encode("", EncoderConfig())
    with pytest.raises(EmptyText):
        encode("   ", EncoderConfig())
    with pytest.raises(EmptyText):
        encode("?!... --- !!!", EncoderConfig())


def test_encode_never_produces_non_finite_values():
    cfg = EncoderConfig(d_model=16, n_heads=2, n_layers=2, d_ff=32, max_tokens=64)
    rng = np.random.default_rng(13)
    words = ["alpha", "Beta", "GAMMA", "revenue", "q3", "2021", "růst", "利益", "x" * 40]
    for _ in range(25):
        n = int(rng.integers(1, 64))
        text = " ".join(rng.choice(words, size=n))
        values = encode(text, cfg).values
        assert values.shape == (cfg.d_model,)
        assert np.all(np.isfinite(values))


def test_long_text_is_chunked_and_averaged():
    cfg = EncoderConfig(d_model=16, n_heads=2, n_layers=1, d_ff=32, max_tokens=8)
    words = [f"w{i}" for i in range(20)]
    text = " ".join(words)
    whole = encode(text, cfg).values
    chunks = [" ".join(words[0:8]), " ".join(words[8:16]), " ".join(words[16:20])]
    expected = np.mean([encode(c, cfg).values for c in chunks], axis=0)
    np.testing.assert_allclose(whole, expected, atol=1e-12)


def test_first_token_pooling_differs_from_mean():
    mean_cfg = EncoderConfig(pooling="mean")
    first_cfg = EncoderConfig(pooling="first")
    text = "the committee reviewed full year guidance"
    assert not np.array_equal(encode(text, mean_cfg).values, encode(text, first_cfg).values)


def test_tokenize_splits_on_non_alphanumerics():
    ids_a = tokenize("Margin, growth; margin!", 4096)
    ids_b = tokenize("margin growth margin", 4096)
    np.testing.assert_array_equal(ids_a, ids_b)
    assert ids_a[0] == ids_a[2]


def test_config_validation():
    with pytest.raises(ValueError):
        EncoderConfig(d_model=10, n_heads=4)
    with pytest.raises(ValueError):
        EncoderConfig(d_model=0)
    with pytest.raises(ValueError):
        EncoderConfig(pooling="max")


def test_backend_zero_fills_tokenless_texts():
    backend = BuiltinBackend(EncoderConfig(d_model=16, n_heads=2, n_layers=1, d_ff=32))
    out = backend.embed_texts(["real words here", "!!!"])
    assert np.any(out[0] != 0)
    assert np.all(out[1] == 0)


def test_numba_and_numpy_paths_agree():
    cfg = EncoderConfig(d_model=16, n_heads=2, n_layers=2, d_ff=32, seed=9)
    table, w = seeded_weights(cfg)
    ids = tokenize("both kernel paths should produce the same stack output", cfg.vocab_size)
    emb = np.ascontiguousarray(table[ids] + POSITION_SCALE * sinusoidal_positions(len(ids), cfg.d_model))
    via_numpy = kernels.encoder_forward_np(
        emb, w.wq, w.wk, w.wv, w.wo, w.w1, w.b1, w.w2, w.b2, LAYER_NORM_EPS
    )
    via_active = kernels.encoder_forward(
        emb, w.wq, w.wk, w.wv, w.wo, w.w1, w.b1, w.w2, w.b2, LAYER_NORM_EPS
    )
    np.testing.assert_allclose(via_active, via_numpy, atol=1e-10)
