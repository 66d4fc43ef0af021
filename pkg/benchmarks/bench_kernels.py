#!/usr/bin/env python3
"""Benchmark the compiled cosine kernel against the pure-Python fallback.

Usage: python benchmarks/bench_kernels.py [--entries N] [--reviews M] [--trials K]
"""

from __future__ import annotations

import argparse
import random
import time

from evolog import _pykernels, match

try:
    from evolog import _ckernels
except ImportError:
    _ckernels = None


def build_corpus(rng, n_docs, vocab=2000, min_len=3, max_len=20):
    vecs = []
    for _ in range(n_docs):
        n = rng.randint(min_len, max_len)
        counts = {f"t{k}": rng.randint(1, 5) for k in rng.sample(range(vocab), n)}
        vecs.append(match.TFVector(counts))
    return vecs


def bench(backend, arrays, theta, trials):
    best = float("inf")
    result = None
    for _ in range(trials):
        t0 = time.perf_counter()
        result = backend.scan_pairs(*arrays, theta)
        best = min(best, time.perf_counter() - t0)
    return best, result


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--entries", type=int, default=200)
    parser.add_argument("--reviews", type=int, default=5000)
    parser.add_argument("--trials", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = random.Random(args.seed)
    entries = build_corpus(rng, args.entries)
    reviews = build_corpus(rng, args.reviews)
    arrays = match._corpus_arrays(entries, reviews)
    n_pairs = args.entries * args.reviews

    print(f"corpus: {args.entries} entries x {args.reviews} reviews = {n_pairs:,} pairs")
    print(f"{'backend':<10} {'theta':>6} {'best time':>12} {'pairs/s':>14} {'hits':>8}")

    for theta in (0.0, 0.3, 0.5):
        py_time, py_out = bench(_pykernels, arrays, theta, args.trials)
        print(f"{'python':<10} {theta:>6.2f} {py_time:>11.3f}s {n_pairs / py_time:>14,.0f} "
              f"{len(py_out[0]):>8}")
        if _ckernels is not None:
            cy_time, cy_out = bench(_ckernels, arrays, theta, args.trials)
            assert len(cy_out[0]) == len(py_out[0]), "backends disagree"
            print(f"{'cython':<10} {theta:>6.2f} {cy_time:>11.3f}s {n_pairs / cy_time:>14,.0f} "
                  f"{len(cy_out[0]):>8}  ({py_time / cy_time:.1f}x faster)")
    if _ckernels is None:
        print("compiled kernel not built; only the fallback was timed")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
