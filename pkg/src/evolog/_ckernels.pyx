# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled pairwise TF-cosine kernel. Semantics and float behaviour must
match _pykernels.scan_pairs exactly: integer dot accumulation, denominator
sqrt(nsq_a * nsq_b)."""

from libc.math cimport sqrt

import numpy as np


def scan_pairs(long long[::1] e_indptr, long long[::1] e_tokens, long long[::1] e_counts,
               double[::1] e_normsq,
               long long[::1] r_indptr, long long[::1] r_tokens, long long[::1] r_counts,
               double[::1] r_normsq,
               double theta):
    """All (entry, review) cosine scores >= theta over CSR token arrays."""
    cdef Py_ssize_t n_entries = e_indptr.shape[0] - 1
    cdef Py_ssize_t n_reviews = r_indptr.shape[0] - 1

    cdef Py_ssize_t cap = 1024
    out_i = np.empty(cap, dtype=np.int64)
    out_j = np.empty(cap, dtype=np.int64)
    out_s = np.empty(cap, dtype=np.float64)
    cdef long long[::1] vi = out_i
    cdef long long[::1] vj = out_j
    cdef double[::1] vs = out_s

    cdef Py_ssize_t k = 0
    cdef Py_ssize_t i, j, a, b, es, ee, rs, re
    cdef long long ta, tb, dot
    cdef double sim, nsq_e

    for i in range(n_entries):
        es = e_indptr[i]
        ee = e_indptr[i + 1]
        nsq_e = e_normsq[i]
        for j in range(n_reviews):
            rs = r_indptr[j]
            re = r_indptr[j + 1]
            dot = 0
            a = es
            b = rs
            while a < ee and b < re:
                ta = e_tokens[a]
                tb = r_tokens[b]
                if ta == tb:
                    dot += e_counts[a] * r_counts[b]
                    a += 1
                    b += 1
                elif ta < tb:
                    a += 1
                else:
                    b += 1
            if dot > 0:
                sim = dot / sqrt(nsq_e * r_normsq[j])
            else:
                sim = 0.0
            if sim >= theta:
                if k == cap:
                    cap *= 2
                    out_i = np.concatenate([out_i, np.empty(cap - k, dtype=np.int64)])
                    out_j = np.concatenate([out_j, np.empty(cap - k, dtype=np.int64)])
                    out_s = np.concatenate([out_s, np.empty(cap - k, dtype=np.float64)])
                    vi = out_i
                    vj = out_j
                    vs = out_s
                vi[k] = i
                vj[k] = j
                vs[k] = sim
                k += 1

    return out_i[:k].copy(), out_j[:k].copy(), out_s[:k].copy()
