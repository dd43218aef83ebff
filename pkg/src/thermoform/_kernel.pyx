# cython: boundscheck=False, wraparound=False, cdivision=True
# cython: language_level=3
"""Compiled enumeration kernels for the two-symbol alphabet.

Block-level mirror of _kernel_py: same signatures, same block contract,
same ascending shift order inside every per-configuration accumulation.
All heavy loops run without the GIL so the dispatcher's thread pool gets
real parallelism.
"""

import numpy as np

from libc.math cimport INFINITY, exp


def tilted_block(long long start, long long stop, int d, int L, int K, int n,
                 double[::1] g_table, double coef,
                 list psi_tables, list psi_depths, list psi_modes, f_args):
    """Partial tilted-ensemble sums over configurations [start, stop)."""
    if d != 2:
        raise ValueError("compiled kernel handles the two-symbol alphabet only")
    cdef Py_ssize_t m = stop - start
    cdef Py_ssize_t i
    cdef long long x
    cdef long long kmask = (1LL << K) - 1
    cdef int j
    cdef int gshift0 = L - K
    cdef double s
    scratch_np = np.empty(m, dtype=np.float64)
    cdef double[::1] ell = scratch_np
    with nogil:
        for i in range(m):
            x = start + i
            s = 0.0
            for j in range(n):
                s += g_table[<Py_ssize_t> ((x >> (gshift0 - j)) & kmask)]
            ell[i] = coef * s * s

    cdef double[::1] f_table
    cdef double[::1] lpsi_f
    cdef double[::1] lnu_f
    cdef int kf
    cdef int fshift0
    cdef long long fmask
    cdef long long tmask
    cdef double fconst
    if f_args is not None:
        f_table = f_args[0]
        kf = f_args[1]
        lpsi_f = f_args[2]
        lnu_f = f_args[3]
        fconst = f_args[4]
        fshift0 = L - kf
        fmask = (1LL << kf) - 1
        tmask = (1LL << (kf - 1)) - 1
        with nogil:
            for i in range(m):
                x = start + i
                s = fconst
                for j in range(fshift0 + 1):
                    s += f_table[<Py_ssize_t> ((x >> (fshift0 - j)) & fmask)]
                if kf > 1:
                    s += lpsi_f[<Py_ssize_t> (x >> (L - kf + 1))]
                    s += lnu_f[<Py_ssize_t> (x & tmask)]
                ell[i] += s

    cdef double bmax = -INFINITY
    cdef double den = 0.0
    with nogil:
        for i in range(m):
            if ell[i] > bmax:
                bmax = ell[i]
        for i in range(m):
            ell[i] = exp(ell[i] - bmax)  # scratch now holds the weights
            den += ell[i]

    nums_np = np.empty(len(psi_tables), dtype=np.float64)
    cdef double[::1] nums = nums_np
    cdef double[::1] ptable
    cdef int p
    cdef int pshift0
    cdef long long pmask
    cdef double acc
    cdef double val
    cdef Py_ssize_t q
    cdef bint head
    for q in range(len(psi_tables)):
        ptable = psi_tables[q]
        p = psi_depths[q]
        head = psi_modes[q] == "head"
        pshift0 = L - p
        pmask = (1LL << p) - 1
        acc = 0.0
        if head:
            with nogil:
                for i in range(m):
                    acc += ptable[<Py_ssize_t> ((start + i) >> pshift0)] * ell[i]
        else:  # "birkhoff": raw sum over the n shifted depth-p subwords
            with nogil:
                for i in range(m):
                    x = start + i
                    val = 0.0
                    for j in range(n):
                        val += ptable[<Py_ssize_t> ((x >> (pshift0 - j)) & pmask)]
                    acc += val * ell[i]
        nums[q] = acc
    return bmax, den, nums_np


def count_block(long long start, long long stop, int d, int L, int K, int n,
                double[::1] g_table, double lo, double hi):
    """Number of configurations in [start, stop) with lo <= S_n <= hi."""
    if d != 2:
        raise ValueError("compiled kernel handles the two-symbol alphabet only")
    cdef Py_ssize_t m = stop - start
    cdef Py_ssize_t i
    cdef long long x
    cdef long long cnt = 0
    cdef long long kmask = (1LL << K) - 1
    cdef int j
    cdef int gshift0 = L - K
    cdef double s
    with nogil:
        for i in range(m):
            x = start + i
            s = 0.0
            for j in range(n):
                s += g_table[<Py_ssize_t> ((x >> (gshift0 - j)) & kmask)]
            if lo <= s <= hi:
                cnt += 1
    return cnt
