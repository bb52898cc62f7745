# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-trial slot-outcome kernel.

Same contract as kernels.pure.count_successes; one tight pass per trial
over the UE draws with reusable per-preamble buffers.
"""

import numpy as np

cimport numpy as cnp


def count_successes(const cnp.int32_t[:, ::1] preambles,
                    priorities,
                    int n_preambles,
                    int levels):
    cdef Py_ssize_t trials = preambles.shape[0]
    cdef Py_ssize_t n = preambles.shape[1]
    out = np.zeros(trials, dtype=np.int64)
    cdef cnp.int64_t[::1] out_v = out
    counts_arr = np.zeros(n_preambles, dtype=np.int32)
    best_arr = np.zeros(n_preambles, dtype=np.int32)
    best_count_arr = np.zeros(n_preambles, dtype=np.int32)
    cdef cnp.int32_t[::1] counts = counts_arr
    cdef cnp.int32_t[::1] best = best_arr
    cdef cnp.int32_t[::1] best_count = best_count_arr
    cdef const cnp.int32_t[:, ::1] pri
    cdef Py_ssize_t t, i
    cdef int m, p, s

    if priorities is None or levels <= 1:
        for t in range(trials):
            for m in range(n_preambles):
                counts[m] = 0
            for i in range(n):
                counts[preambles[t, i]] += 1
            s = 0
            for m in range(n_preambles):
                if counts[m] == 1:
                    s += 1
            out_v[t] = s
        return out

    pri = priorities
    for t in range(trials):
        for m in range(n_preambles):
            counts[m] = 0
            best[m] = levels
            best_count[m] = 0
        for i in range(n):
            m = preambles[t, i]
            p = pri[t, i]
            counts[m] += 1
            if p < best[m]:
                best[m] = p
                best_count[m] = 1
            elif p == best[m]:
                best_count[m] += 1
        s = 0
        for m in range(n_preambles):
            if counts[m] == 1 or (counts[m] >= 2 and best_count[m] == 1):
                s += 1
        out_v[t] = s
    return out
