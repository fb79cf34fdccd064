# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled shell-index chain; same algorithm and counters as ``_mc_py``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport floor, log, log1p, pow
from libc.stdint cimport int64_t, int32_t, uint64_t

cnp.import_array()

cdef enum:
    SLOTS = 6
cdef double G_CAP = 4611686018427387904.0  # 2^62
cdef int64_t STEP_CAP = (<int64_t>1) << 62


cdef inline uint64_t splitmix(uint64_t x) noexcept nogil:
    cdef uint64_t z = x + 0x9E3779B97F4A7C15ULL
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline double unif(uint64_t key, uint64_t ctr) noexcept nogil:
    cdef uint64_t z = splitmix(key + ctr)
    return (<double>(z >> 11) + 0.5) * (1.0 / 9007199254740992.0)


cdef inline double threshold(int64_t i, int fam, double q, double P0, double C) noexcept nogil:
    cdef int64_t j = i if i > 1 else 1
    cdef int64_t k
    if fam == 0:
        return (1.0 - P0) * pow(q, <double>(j - 1))
    k = (j - 1) // 2
    if j % 2 == 1:
        return pow(q, <double>k)
    return pow(q, <double>(k + 1)) * (1.0 + C)


cdef inline int64_t sample_ge(int64_t j, double u1, double u2, double u5, int fam, double q,
                              double C, double wodd, double weven) noexcept nogil:
    cdef double lq = log(q)
    cdef int64_t k0, K
    cdef double up
    if fam == 0:
        return j + <int64_t>floor(log(u1) / lq)
    k0 = (j - 1) // 2
    if j % 2 == 1:
        K = k0 + <int64_t>floor(log(u1) / lq)
        up = u2
    else:
        if u2 < C / (1.0 + C):
            return j
        K = k0 + 1 + <int64_t>floor(log(u1) / lq)
        up = u5
    if up * (wodd + weven) < wodd:
        return 2 * K + 1
    return 2 * K + 2


cdef void chain_path(int fam, double q, double P0, double N, double C, double wodd, double weven,
                     uint64_t key, const int64_t[:] rec, int64_t kcap, int32_t[:, :] out,
                     Py_ssize_t col) noexcept nogil:
    cdef Py_ssize_t nrec = rec.shape[0], r = 0
    cdef int64_t i = 0, c = 0, nxt, k, drop, g
    cdef uint64_t base = 0
    cdef double T, u0, gd, lN = log(N)
    cdef int64_t last = rec[nrec - 1] if nrec > 0 else -1
    while r < nrec:
        T = threshold(i, fam, q, P0, C)
        u0 = unif(key, base)
        gd = 1.0 + floor(log(u0) / log1p(-T))
        if gd > G_CAP:
            gd = G_CAP
        g = <int64_t>gd
        if g > STEP_CAP - c:
            g = STEP_CAP - c
        nxt = c + g
        while r < nrec and rec[r] < nxt:
            out[r, col] = <int32_t>i
            r += 1
        if r == nrec:
            break
        k = sample_ge(i if i > 1 else 1, unif(key, base + 1), unif(key, base + 2),
                      unif(key, base + 5), fam, q, C, wodd, weven)
        if k > i:
            i = k
        elif i >= 1 and unif(key, base + 3) < 1.0 / (N - 1.0):
            drop = <int64_t>floor(-log(unif(key, base + 4)) / lN)
            i = i - 1 - drop
            if i < 0:
                i = 0
        if i > kcap:
            while r < nrec:
                out[r, col] = -1
                r += 1
            break
        c = nxt
        base += SLOTS


def path_key(uint64_t seed, uint64_t path):
    return splitmix(path ^ splitmix(seed))


def run_chunk(int fam, double q, double P0, long N, double C, double wodd, double weven,
              uint64_t seed, Py_ssize_t path_lo, Py_ssize_t path_hi, rec, long kcap):
    cdef const int64_t[:] rec_v = np.ascontiguousarray(rec, dtype=np.int64)
    cdef Py_ssize_t n_paths = path_hi - path_lo, j
    out = np.empty((rec_v.shape[0], n_paths), dtype=np.int32)
    cdef int32_t[:, :] out_v = out
    cdef uint64_t s = splitmix(seed)
    cdef double Nd = <double>N
    with nogil:
        for j in range(n_paths):
            chain_path(fam, q, P0, Nd, C, wodd, weven, splitmix(<uint64_t>(path_lo + j) ^ s),
                       rec_v, kcap, out_v, j)
    return out


def run_steps_chunk(int fam, double q, double P0, long N, double C, double wodd, double weven,
                    uint64_t seed, Py_ssize_t path_lo, Py_ssize_t path_hi, int64_t n_steps, long kcap):
    cdef Py_ssize_t n_paths = path_hi - path_lo, j
    out = np.empty(n_paths, dtype=np.int32)
    cdef int32_t[:] out_v = out
    cdef uint64_t s = splitmix(seed), key, base
    cdef int64_t i, k, drop, step
    cdef bint over
    cdef double T1 = threshold(1, fam, q, P0, C), lN = log(<double>N), Nd = <double>N
    with nogil:
        for j in range(n_paths):
            key = splitmix(<uint64_t>(path_lo + j) ^ s)
            i = 0
            over = False
            base = 0
            for step in range(n_steps):
                if unif(key, base) < T1:
                    k = sample_ge(1, unif(key, base + 1), unif(key, base + 2), unif(key, base + 5),
                                  fam, q, C, wodd, weven)
                    if k > i:
                        i = k
                    elif k == i and unif(key, base + 3) < 1.0 / (Nd - 1.0):
                        drop = <int64_t>floor(-log(unif(key, base + 4)) / lN)
                        i = i - 1 - drop
                        if i < 0:
                            i = 0
                    if i > kcap:
                        over = True
                base += SLOTS
            out_v[j] = -1 if over else <int32_t>i
    return out
