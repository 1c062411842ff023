"""Benchmark the encoder forward pass: numba kernels vs pure numpy.

Both implementations live in ``topicswitch.kernels``, so they can be
timed in one process regardless of which one the library selected at
import.  Reports per-call latency over realistic chunk shapes and the
worst absolute disagreement between the two paths.

Usage: python benchmarks/bench_encoder.py [--repeats 50]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from topicswitch import kernels
from topicswitch.encoder import (
    EncoderConfig,
    LAYER_NORM_EPS,
    POSITION_SCALE,
    seeded_weights,
    sinusoidal_positions,
)


def _forward(fn, emb, w):
    return fn(emb, w.wq, w.wk, w.wv, w.wo, w.w1, w.b1, w.w2, w.b2, LAYER_NORM_EPS)


def bench(fn, emb, w, repeats: int) -> float:
    _forward(fn, emb, w)  # warm-up / JIT
    start = time.perf_counter()
    for _ in range(repeats):
        _forward(fn, emb, w)
    return (time.perf_counter() - start) / repeats


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=50)
    args = parser.parse_args()

    print(f"active library path: {kernels.active_path()}")
    if not kernels.NUMBA_ACTIVE:
        print("numba path unavailable (disabled or not importable); timing numpy only")

    config = EncoderConfig()
    table, weights = seeded_weights(config)
    positions = sinusoidal_positions(config.max_tokens, config.d_model)
    rng = np.random.default_rng(0)

    header = f"{'tokens':>7} {'numpy ms':>10} {'numba ms':>10} {'speedup':>8} {'max |diff|':>11}"
    print(header)
    print("-" * len(header))
    for n_tokens in (16, 64, 128, 256):
        ids = rng.integers(0, config.vocab_size, size=n_tokens)
        emb = np.ascontiguousarray(table[ids] + POSITION_SCALE * positions[:n_tokens])
        t_np = bench(kernels.encoder_forward_np, emb, weights, args.repeats)
        if kernels.NUMBA_ACTIVE:
            t_nb = bench(kernels.encoder_forward_nb, emb, weights, args.repeats)
            diff = float(
                np.max(
                    np.abs(
                        _forward(kernels.encoder_forward_np, emb, weights)
                        - _forward(kernels.encoder_forward_nb, emb, weights)
                    )
                )
            )
            print(
                f"{n_tokens:>7} {t_np * 1e3:>10.3f} {t_nb * 1e3:>10.3f} "
                f"{t_np / t_nb:>7.2f}x {diff:>11.2e}"
            )
        else:
            print(f"{n_tokens:>7} {t_np * 1e3:>10.3f} {'-':>10} {'-':>8} {'-':>11}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
