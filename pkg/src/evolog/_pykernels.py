"""Pure-Python pairwise TF-cosine kernel, the fallback when the compiled
extension is unavailable. Must stay numerically identical to _ckernels:
integer dot products, denominator sqrt(nsq_a * nsq_b)."""

from __future__ import annotations

import math

import numpy as np


def scan_pairs(e_indptr, e_tokens, e_counts, e_normsq,
               r_indptr, r_tokens, r_counts, r_normsq,
               theta: float):
    """All (entry, review) cosine scores >= theta over CSR token arrays.

    Token ids must be sorted within each document. Returns parallel arrays
    (entry index, review index, similarity).
    """
    out_i: list[int] = []
    out_j: list[int] = []
    out_s: list[float] = []

    e_indptr = list(e_indptr)
    r_indptr = list(r_indptr)
    e_tokens = list(e_tokens)
    e_counts = list(e_counts)
    r_tokens = list(r_tokens)
    r_counts = list(r_counts)
    e_normsq = list(e_normsq)
    r_normsq = list(r_normsq)

    n_entries = len(e_indptr) - 1
    n_reviews = len(r_indptr) - 1
    for i in range(n_entries):
        es, ee = e_indptr[i], e_indptr[i + 1]
        nsq_e = e_normsq[i]
        for j in range(n_reviews):
            rs, re = r_indptr[j], r_indptr[j + 1]
            dot = 0
            a, b = es, rs
            while a < ee and b < re:
                ta, tb = e_tokens[a], r_tokens[b]
                if ta == tb:
                    dot += e_counts[a] * r_counts[b]
                    a += 1
                    b += 1
                elif ta < tb:
                    a += 1
                else:
                    b += 1
            if dot > 0:
                sim = dot / math.sqrt(nsq_e * r_normsq[j])
            else:
                sim = 0.0
            if sim >= theta:
                out_i.append(i)
                out_j.append(j)
                out_s.append(sim)

    return (np.asarray(out_i, dtype=np.int64),
            np.asarray(out_j, dtype=np.int64),
            np.asarray(out_s, dtype=np.float64))
