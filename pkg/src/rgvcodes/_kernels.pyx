# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled Monte Carlo kernels.

Mirrors ``_kernels_py`` operation for operation, including the order in
which uniforms are drawn from the bit generator, so both produce identical
results for the same seed.
"""
import numpy as np
cimport numpy as cnp
from cpython.pycapsule cimport PyCapsule_GetPointer, PyCapsule_IsValid
from libc.stdint cimport int64_t
from libc.stdlib cimport malloc, free
from numpy.random cimport bitgen_t

cnp.import_array()

cdef const char *CAPSULE_NAME = "BitGenerator"


cdef inline double _uniform(bitgen_t *rng) noexcept nogil:
    return rng.next_double(rng.state)


cdef inline int64_t _below(bitgen_t *rng, int64_t k) noexcept nogil:
    cdef int64_t j = <int64_t>(_uniform(rng) * k)
    if j >= k:
        j = k - 1
    return j


cdef inline void _shuffle_from(const int64_t[::1] base, int64_t[::1] out, bitgen_t *rng) noexcept nogil:
    cdef Py_ssize_t n = base.shape[0]
    cdef Py_ssize_t j
    cdef int64_t k, tmp
    for j in range(n):
        out[j] = base[j]
    for j in range(n - 1, 0, -1):
        k = _below(rng, j + 1)
        tmp = out[j]
        out[j] = out[k]
        out[k] = tmp


cdef inline double _score(const int64_t[:, ::1] vidx, const double[::1] vals, int64_t nv,
                          const int64_t[::1] a, const int64_t[::1] b, int64_t *cnt) noexcept nogil:
    cdef Py_ssize_t j
    cdef Py_ssize_t n = a.shape[0]
    cdef double acc = 0.0
    for j in range(nv):
        cnt[j] = 0
    for j in range(n):
        cnt[vidx[a[j], b[j]]] += 1
    for j in range(nv):
        if cnt[j] > 0:
            acc += <double>cnt[j] * vals[j]
    return acc


cdef inline double _distance(const int64_t[:, :, ::1] d_vidx, const double[:, ::1] d_vals,
                             const int64_t[::1] d_nv, const int64_t[::1] a, const int64_t[::1] b,
                             int64_t *cnt) noexcept nogil:
    cdef Py_ssize_t t
    cdef double best = 0.0, v
    cdef int64_t n = a.shape[0]
    for t in range(d_vidx.shape[0]):
        v = _score(d_vidx[t], d_vals[t], d_nv[t], a, b, cnt) / n
        if t == 0 or v < best:
            best = v
    return best


cdef int _fill_codebook(const int64_t[::1] base, int64_t[:, ::1] words,
                        const int64_t[:, :, ::1] d_vidx, const double[:, ::1] d_vals,
                        const int64_t[::1] d_nv, double delta_cap, bitgen_t *rng,
                        int64_t max_stall, int64_t *cnt, int64_t *proposals) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef int64_t stall
    cdef bint ok
    for i in range(words.shape[0]):
        stall = 0
        while True:
            _shuffle_from(base, words[i], rng)
            proposals[0] += 1
            ok = True
            for j in range(i):
                if _distance(d_vidx, d_vals, d_nv, words[i], words[j], cnt) <= delta_cap:
                    ok = False
                    break
            if ok:
                break
            stall += 1
            if stall > max_stall:
                return -1
    return 0


cdef bitgen_t *_bitgen(object bit_generator) except NULL:
    capsule = bit_generator.capsule
    if not PyCapsule_IsValid(capsule, CAPSULE_NAME):
        raise ValueError("invalid bit generator capsule")
    return <bitgen_t *>PyCapsule_GetPointer(capsule, CAPSULE_NAME)


def _max_nv(d_nv, q_nv=0):
    return int(max(max(d_nv) if len(d_nv) else 0, q_nv, 1))


def generate_rejection(base, int64_t m, d_vidx, d_vals, d_nv, double delta_cap,
                       bit_generator, int64_t max_stall=1000000):
    """Rejection-sampled recursive codebook (shuffled type representative)."""
    cdef const int64_t[::1] base_v = np.ascontiguousarray(base, dtype=np.int64)
    cdef const int64_t[:, :, ::1] dv = np.ascontiguousarray(d_vidx, dtype=np.int64)
    cdef const double[:, ::1] dvals = np.ascontiguousarray(d_vals, dtype=np.float64)
    cdef const int64_t[::1] dnv = np.ascontiguousarray(d_nv, dtype=np.int64)
    words_np = np.zeros((m, base_v.shape[0]), dtype=np.int64)
    cdef int64_t[:, ::1] words = words_np
    cdef bitgen_t *rng = _bitgen(bit_generator)
    cdef int64_t proposals = 0
    cdef int status
    cdef int64_t *cnt = <int64_t *>malloc(_max_nv(d_nv) * sizeof(int64_t))
    try:
        with bit_generator.lock, nogil:
            status = _fill_codebook(base_v, words, dv, dvals, dnv, delta_cap, rng, max_stall, cnt, &proposals)
    finally:
        free(cnt)
    if status != 0:
        raise RuntimeError(f"candidate set appears empty: more than {max_stall} consecutive rejections")
    return words_np, proposals


def mc_trials(base, int64_t m, d_vidx, d_vals, d_nv, double delta_cap,
              q_vidx, q_vals, wcdf, int64_t trials, bit_generator,
              bint fixed_codebook=False, int64_t max_stall=1000000):
    """Run ``trials`` encode/transmit/decode rounds; returns (beaten, ties, proposals)."""
    cdef const int64_t[::1] base_v = np.ascontiguousarray(base, dtype=np.int64)
    cdef const int64_t[:, :, ::1] dv = np.ascontiguousarray(d_vidx, dtype=np.int64)
    cdef const double[:, ::1] dvals = np.ascontiguousarray(d_vals, dtype=np.float64)
    cdef const int64_t[::1] dnv = np.ascontiguousarray(d_nv, dtype=np.int64)
    cdef const int64_t[:, ::1] qv = np.ascontiguousarray(q_vidx, dtype=np.int64)
    cdef const double[::1] qvals = np.ascontiguousarray(q_vals, dtype=np.float64)
    cdef const double[:, ::1] cdf = np.ascontiguousarray(wcdf, dtype=np.float64)
    cdef Py_ssize_t n = base_v.shape[0]
    cdef Py_ssize_t ny = cdf.shape[1]
    cdef int64_t q_nv = qvals.shape[0]
    words_np = np.zeros((m, n), dtype=np.int64)
    y_np = np.zeros(n, dtype=np.int64)
    cdef int64_t[:, ::1] words = words_np
    cdef int64_t[::1] y = y_np
    cdef bitgen_t *rng = _bitgen(bit_generator)
    cdef int64_t beaten = 0, ties = 0, proposals = 0
    cdef int64_t t, msg, j, b, c
    cdef double u, sent, other
    cdef bint tie, beat
    cdef int status = 0
    cdef int64_t *cnt = <int64_t *>malloc(_max_nv(d_nv, q_nv) * sizeof(int64_t))
    try:
        with bit_generator.lock, nogil:
            for t in range(trials):
                if t == 0 or not fixed_codebook:
                    status = _fill_codebook(base_v, words, dv, dvals, dnv, delta_cap, rng,
                                            max_stall, cnt, &proposals)
                    if status != 0:
                        break
                msg = _below(rng, m)
                for j in range(n):
                    u = _uniform(rng)
                    b = 0
                    while b < ny - 1 and u >= cdf[words[msg, j], b]:
                        b += 1
                    y[j] = b
                sent = _score(qv, qvals, q_nv, words[msg], y, cnt)
                tie = False
                beat = False
                for c in range(m):
                    if c == msg:
                        continue
                    other = _score(qv, qvals, q_nv, words[c], y, cnt)
                    if other > sent:
                        beat = True
                        break
                    if other == sent:
                        tie = True
                if beat:
                    beaten += 1
                elif tie:
                    ties += 1
    finally:
        free(cnt)
    if status != 0:
        raise RuntimeError(f"candidate set appears empty: more than {max_stall} consecutive rejections")
    return beaten, ties, proposals
