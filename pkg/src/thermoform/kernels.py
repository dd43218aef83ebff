"""Kernel dispatch for exhaustive configuration sums.

Two interchangeable backends implement the block kernels: a compiled
Cython extension (built for the two-symbol alphabet) and a pure-NumPy
module that works for any alphabet.  Selection happens per call:

* ``THERMOFORM_KERNEL=auto`` (default) — compiled when available and the
  alphabet has two symbols, NumPy otherwise;
* ``THERMOFORM_KERNEL=c`` (aliases ``compiled``, ``ext``) — require the
  extension, raising if it is missing or the alphabet does not fit;
* ``THERMOFORM_KERNEL=py`` (aliases ``python``, ``numpy``) — force the
  fallback.

Work is split into fixed blocks of 2**16 configuration indices and run on
a thread pool (``THERMOFORM_THREADS`` caps the pool, default
``min(8, cpu_count)``).  Block boundaries never depend on the pool size
and partial results are folded in block order with plain sequential
arithmetic, so for a fixed backend the output is byte-identical no matter
how many threads ran.
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import _kernel_py

try:
    from . import _kernel
except ImportError:  # extension not built; the NumPy backend covers everything
    _kernel = None

#: Largest number of configurations a single exhaustive pass may touch.
CAPACITY_LIMIT = 1 << 26

_BLOCK = 1 << 16


class CapacityError(ValueError):
    """An exhaustive enumeration would exceed CAPACITY_LIMIT configurations."""


def ensure_capacity(alphabet_size: int, length: int) -> int:
    """Check that alphabet_size ** length configurations are enumerable."""
    total = alphabet_size ** length
    if total > CAPACITY_LIMIT:
        raise CapacityError(
            "enumeration over %d**%d = %d configurations exceeds the limit %d"
            % (alphabet_size, length, total, CAPACITY_LIMIT))
    return total


def _resolve(alphabet_size: int):
    mode = os.environ.get("THERMOFORM_KERNEL", "auto").strip().lower() or "auto"
    if mode == "auto":
        if _kernel is not None and alphabet_size == 2:
            return _kernel
        return _kernel_py
    if mode in ("c", "compiled", "ext"):
        if _kernel is None:
            raise RuntimeError(
                "THERMOFORM_KERNEL=%s requires the compiled kernel, which is not built"
                % mode)
        if alphabet_size != 2:
            raise ValueError(
                "the compiled kernel handles the two-symbol alphabet only "
                "(got %d symbols)" % alphabet_size)
        return _kernel
    if mode in ("py", "python", "numpy"):
        return _kernel_py
    raise ValueError("unknown THERMOFORM_KERNEL setting %r" % mode)


def backend_name(alphabet_size: int = 2) -> str:
    """Name of the backend a call for this alphabet would use."""
    return "compiled" if _resolve(alphabet_size) is _kernel else "numpy"


def thread_count() -> int:
    """Worker threads per exhaustive pass (reads THERMOFORM_THREADS)."""
    raw = os.environ.get("THERMOFORM_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise ValueError("THERMOFORM_THREADS must be an integer, got %r" % raw)
    return min(8, os.cpu_count() or 1)


def _blocks(total: int) -> List[Tuple[int, int]]:
    return [(s, min(s + _BLOCK, total)) for s in range(0, total, _BLOCK)]


def _fold(results, width: int):
    """Combine per-block (bmax, den, nums) triples in block order."""
    scale = -math.inf
    den = 0.0
    nums = np.zeros(width)
    for bmax, bden, bnums in results:
        if bmax > scale:
            c = math.exp(scale - bmax)
            den = den * c + bden
            nums = nums * c + np.asarray(bnums)
            scale = bmax
        else:
            c = math.exp(bmax - scale)
            den += bden * c
            nums += np.asarray(bnums) * c
    return scale, den, nums


def tilted_stats(g_table: np.ndarray, alphabet_size: int, depth: int, n: int,
                 beta: float,
                 psis: Sequence[Tuple[np.ndarray, int, str]],
                 f_args: Optional[tuple] = None):
    """Tilted-ensemble sums over all alphabet_size**(n+depth-1) words.

    Every length-L word x (L = n + depth - 1) carries the exponent
    ell(x) = beta * S_n(x)**2 / (2n) with S_n the n-term shift sum of
    g_table, plus, when ``f_args`` is given, the log cylinder mass
    ``(table, depth_f, log_psi, log_nu, constant)`` of a reference
    equilibrium state.  Each entry of ``psis`` is ``(table, p, mode)``:
    mode "head" evaluates the depth-p table on the leading coordinates,
    mode "birkhoff" takes the raw n-term shift sum (divide by n at the
    end).  Returns ``(scale, den, nums)`` with

        sum_x e^{ell(x)}          = den * e^{scale}
        sum_x psi_i(x) e^{ell(x)} = nums[i] * e^{scale}.
    """
    length = n + depth - 1
    total = ensure_capacity(alphabet_size, length)
    backend = _resolve(alphabet_size)
    g = np.ascontiguousarray(g_table, dtype=np.float64)
    if g.shape != (alphabet_size ** depth,):
        raise ValueError("g_table must hold %d values" % alphabet_size ** depth)
    tables = []
    depths = []
    modes = []
    for table, p, mode in psis:
        if mode == "head":
            if p > length:
                raise ValueError("head observable depth %d exceeds word length %d"
                                 % (p, length))
        elif mode == "birkhoff":
            if p > depth:
                raise ValueError(
                    "birkhoff observable depth %d exceeds the interaction depth %d"
                    % (p, depth))
        else:
            raise ValueError("unknown observable mode %r" % mode)
        tables.append(np.ascontiguousarray(table, dtype=np.float64))
        depths.append(int(p))
        modes.append(mode)
    if f_args is not None:
        f_table, kf, log_psi_f, log_nu_f, const = f_args
        if kf > length:
            raise ValueError("reference depth %d exceeds word length %d"
                             % (kf, length))
        f_args = (np.ascontiguousarray(f_table, dtype=np.float64), int(kf),
                  np.ascontiguousarray(log_psi_f, dtype=np.float64),
                  np.ascontiguousarray(log_nu_f, dtype=np.float64), float(const))
    coef = beta / (2.0 * n)

    def run(block):
        return backend.tilted_block(block[0], block[1], alphabet_size, length,
                                    depth, n, g, coef, tables, depths, modes,
                                    f_args)

    with ThreadPoolExecutor(max_workers=thread_count()) as pool:
        results = list(pool.map(run, _blocks(total)))
    return _fold(results, len(tables))


def count_in_range(g_table: np.ndarray, alphabet_size: int, depth: int, n: int,
                   lo_sum: float, hi_sum: float) -> Tuple[int, int]:
    """Exact count of words whose n-term shift sum lies in [lo_sum, hi_sum].

    Returns ``(count, total)`` with total = alphabet_size**(n+depth-1).
    """
    length = n + depth - 1
    total = ensure_capacity(alphabet_size, length)
    backend = _resolve(alphabet_size)
    g = np.ascontiguousarray(g_table, dtype=np.float64)
    if g.shape != (alphabet_size ** depth,):
        raise ValueError("g_table must hold %d values" % alphabet_size ** depth)

    def run(block):
        return backend.count_block(block[0], block[1], alphabet_size, length,
                                   depth, n, g, float(lo_sum), float(hi_sum))

    with ThreadPoolExecutor(max_workers=thread_count()) as pool:
        counts = list(pool.map(run, _blocks(total)))
    return int(sum(counts)), total
