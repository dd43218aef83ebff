"""Pure-NumPy enumeration kernels: the fallback backend.

Each function processes one contiguous block of configuration indices and
returns partial sums; the dispatcher in kernels.py combines blocks in a
fixed order, so results do not depend on how blocks were scheduled.
Configurations are length-L words encoded as base-d integers with the
first coordinate most significant; within a block every accumulation runs
in ascending shift order, mirroring the compiled backend.
"""

import numpy as np


def _subwords(arr: np.ndarray, d: int, L: int, depth: int, j: int) -> np.ndarray:
    """Index of the depth-`depth` subword starting at coordinate j+1."""
    return (arr // d ** (L - depth - j)) % d ** depth


def tilted_block(start, stop, d, L, K, n, g_table, coef,
                 psi_tables, psi_depths, psi_modes, f_args):
    """Partial tilted-ensemble sums over configurations [start, stop).

    Returns (bmax, den, nums): with w(x) = exp(ell(x) - bmax) and
    ell(x) = coef * S_n(x)^2 plus the optional log cylinder mass of f,
    den = sum w and nums[i] = sum psi_i * w.  Birkhoff-mode psi values are
    raw n-term sums; the caller divides by n once at the very end.
    """
    arr = np.arange(start, stop, dtype=np.int64)
    s = np.zeros(arr.size)
    for j in range(n):
        s += g_table[_subwords(arr, d, L, K, j)]
    ell = coef * s * s
    if f_args is not None:
        f_table, kf, log_psi_f, log_nu_f, const = f_args
        fs = np.full(arr.size, const)
        for j in range(L - kf + 1):
            fs += f_table[_subwords(arr, d, L, kf, j)]
        if kf > 1:
            fs += log_psi_f[arr // d ** (L - kf + 1)]
            fs += log_nu_f[arr % d ** (kf - 1)]
        ell += fs
    bmax = float(np.max(ell))
    w = np.exp(ell - bmax)
    den = float(np.sum(w))
    nums = np.empty(len(psi_tables))
    for i, (table, p, mode) in enumerate(zip(psi_tables, psi_depths, psi_modes)):
        if mode == "head":
            vals = table[arr // d ** (L - p)]
        else:  # "birkhoff": raw sum over the n shifted depth-p subwords
            vals = np.zeros(arr.size)
            for j in range(n):
                vals += table[_subwords(arr, d, L, p, j)]
        nums[i] = float(np.sum(vals * w))
    return bmax, den, nums


def count_block(start, stop, d, L, K, n, g_table, lo, hi):
    """Number of configurations in [start, stop) with lo <= S_n <= hi."""
    arr = np.arange(start, stop, dtype=np.int64)
    s = np.zeros(arr.size)
    for j in range(n):
        s += g_table[_subwords(arr, d, L, K, j)]
    return int(np.count_nonzero((s >= lo) & (s <= hi)))
