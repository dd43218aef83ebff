"""Finite-alphabet shift spaces, words and cylinder potentials.

The configuration space is the one-sided full shift over d symbols.  A
depth-k potential is a function of the first k coordinates, stored as a
dense table indexed by the word's base-d integer (most significant digit
= first coordinate), so that prefix/suffix moves are integer divisions.
Symbols carry user-facing labels; for d == 2 the default labels are the
spins -1, +1 so that ferromagnetic formulas read naturally.
"""

import math
from dataclasses import dataclass
from typing import Dict, Optional, Tuple, Union

import numpy as np


@dataclass(frozen=True)
class ShiftConfig:
    """Alphabet of the full shift {1..d}^N."""

    alphabet_size: int                     # d >= 2
    symbol_labels: Tuple[float, ...] = ()  # label of symbol index i; spins when d == 2

    def __post_init__(self):
        if self.alphabet_size < 2:
            raise ValueError("alphabet_size must be >= 2, got %r" % (self.alphabet_size,))
        labels = self.symbol_labels
        if not labels:
            if self.alphabet_size == 2:
                labels = (-1.0, 1.0)
            else:
                labels = tuple(float(i) for i in range(self.alphabet_size))
            object.__setattr__(self, "symbol_labels", labels)
        if len(self.symbol_labels) != self.alphabet_size:
            raise ValueError(
                "expected %d symbol labels, got %d"
                % (self.alphabet_size, len(self.symbol_labels))
            )
        if len(set(self.symbol_labels)) != self.alphabet_size:
            raise ValueError("symbol labels must be pairwise distinct")

    def label_index(self, label) -> int:
        """Symbol index of a label (0 <= index < d)."""
        for i, lab in enumerate(self.symbol_labels):
            if lab == label:
                return i
        raise ValueError("unknown symbol label %r (labels: %r)" % (label, self.symbol_labels))


#: the workhorse configuration: two symbols labelled as spins -1, +1
SPINS = ShiftConfig(2)


@dataclass(frozen=True)
class Word:
    """A finite word of symbol labels; doubles as the cylinder it defines."""

    symbols: Tuple[float, ...]

    def __len__(self):
        return len(self.symbols)


def _symbols_of(word) -> Tuple:
    return tuple(word.symbols) if isinstance(word, Word) else tuple(word)


def word_index(config: ShiftConfig, word) -> int:
    """Base-d integer of a word of labels, first coordinate most significant."""
    d = config.alphabet_size
    idx = 0
    for s in _symbols_of(word):
        idx = idx * d + config.label_index(s)
    return idx


def index_symbols(config: ShiftConfig, depth: int, index: int) -> Tuple[float, ...]:
    """Inverse of word_index for a fixed depth."""
    d = config.alphabet_size
    if not 0 <= index < d ** depth:
        raise ValueError("index %d out of range for depth %d" % (index, depth))
    out = []
    for pos in range(depth):
        out.append(config.symbol_labels[(index // d ** (depth - 1 - pos)) % d])
    return tuple(out)


@dataclass(frozen=True)
class BirkhoffContext:
    """Word length bookkeeping for an n-term sum of a depth-k potential."""

    n: int
    required_word_length: int  # n + k - 1


# ---------------------------------------------------------------------------
# potential specifications
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Tabulated:
    """Depth-k potential given by its table of cylinder values."""

    config: ShiftConfig
    depth: int
    values: np.ndarray  # d**depth entries in word-index order

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        if self.depth < 1:
            raise ValueError("depth must be >= 1, got %d" % self.depth)
        want = self.config.alphabet_size ** self.depth
        if vals.shape != (want,):
            raise ValueError(
                "table must have %d entries for depth %d, got shape %r"
                % (want, self.depth, vals.shape)
            )
        if not np.all(np.isfinite(vals)):
            raise ValueError("table entries must be finite")


def tabulated_from_dict(config: ShiftConfig, depth: int, table: Dict) -> Tabulated:
    """Build a Tabulated potential from a {word-of-labels: value} mapping."""
    d = config.alphabet_size
    values = np.empty(d ** depth)
    values.fill(np.nan)
    for word, val in table.items():
        symbols = _symbols_of(word)
        if len(symbols) != depth:
            raise ValueError("word %r does not have depth %d" % (word, depth))
        values[word_index(config, symbols)] = float(val)
    if np.isnan(values).any():
        missing = int(np.flatnonzero(np.isnan(values))[0])
        raise ValueError(
            "table is missing word %r" % (index_symbols(config, depth, missing),)
        )
    return Tabulated(config, depth, values)


@dataclass(frozen=True)
class Product:
    """Linear spin potential (J/2) sum_n a_n x_n + h x_1 with finitely many a_n.

    Only defined on the two-symbol spin alphabet.  ``u_full`` optionally
    declares the untruncated interaction sum (J/2) sum_n a_n over the full
    coefficient sequence; it must agree with the truncated sum up to
    (J/2) * tail_bound, where tail_bound bounds the dropped tail of a_n.
    """

    config: ShiftConfig
    J: float
    h: float
    coefficients: Tuple[float, ...]
    u_full: Optional[float] = None   # declared full interaction sum, if known
    tail_bound: float = 0.0          # bound on sum of |a_n| beyond the stored ones

    def __post_init__(self):
        object.__setattr__(self, "coefficients", tuple(float(a) for a in self.coefficients))
        if self.config.alphabet_size != 2:
            raise ValueError("Product potentials require the two-symbol spin alphabet")
        if not self.coefficients:
            raise ValueError("Product potential needs at least one coefficient")
        if self.tail_bound < 0:
            raise ValueError("tail_bound must be nonnegative, got %g" % self.tail_bound)
        if self.u_full is not None:
            truncated = 0.5 * self.J * math.fsum(self.coefficients)
            slack = 0.5 * abs(self.J) * self.tail_bound + 1e-12
            if abs(self.u_full - truncated) > slack:
                raise ValueError(
                    "declared full sum %g is %g away from the truncated sum %g, "
                    "more than the tail bound allows (%g)"
                    % (self.u_full, abs(self.u_full - truncated), truncated, slack)
                )

    @property
    def u(self) -> float:
        """Interaction sum (J/2) sum_n a_n of the stored coefficients."""
        return 0.5 * self.J * math.fsum(self.coefficients)


@dataclass(frozen=True)
class Affine:
    """scale * base + offset, optionally plus a second scaled potential."""

    base: "PotentialSpec"
    scale: float = 1.0
    offset: float = 0.0
    plus: Optional[Tuple["PotentialSpec", float]] = None


PotentialSpec = Union[Tabulated, Product, Affine]


def config_of(potential: PotentialSpec) -> ShiftConfig:
    if isinstance(potential, Affine):
        return config_of(potential.base)
    return potential.config


def effective_depth(potential: PotentialSpec) -> int:
    """Number of leading coordinates the potential depends on."""
    if isinstance(potential, Tabulated):
        return potential.depth
    if isinstance(potential, Product):
        return len(potential.coefficients)
    if isinstance(potential, Affine):
        k = effective_depth(potential.base)
        if potential.plus is not None:
            k = max(k, effective_depth(potential.plus[0]))
        return k
    raise TypeError("not a potential spec: %r" % (potential,))


def spin_coefficients(potential: Product) -> np.ndarray:
    """Per-coordinate couplings c_n: c_1 = (J/2) a_1 + h, c_n = (J/2) a_n else."""
    c = 0.5 * potential.J * np.asarray(potential.coefficients, dtype=float)
    c[0] += potential.h
    return c


def evaluate(potential: PotentialSpec, word) -> float:
    """Value of the potential on a word covering its effective depth."""
    symbols = _symbols_of(word)
    k = effective_depth(potential)
    if len(symbols) < k:
        raise ValueError(
            "word of length %d is too short; potential depends on the first %d coordinates"
            % (len(symbols), k)
        )
    if isinstance(potential, Tabulated):
        return float(potential.values[word_index(potential.config, symbols[: potential.depth])])
    if isinstance(potential, Product):
        c = spin_coefficients(potential)
        x = [float(s) for s in symbols[: len(c)]]
        return float(np.dot(c, x))
    if isinstance(potential, Affine):
        val = potential.scale * evaluate(potential.base, symbols) + potential.offset
        if potential.plus is not None:
            other, sc = potential.plus
            val += sc * evaluate(other, symbols)
        return val
    raise TypeError("not a potential spec: %r" % (potential,))


def birkhoff_sum(potential: PotentialSpec, word, n: int) -> float:
    """Sum of the potential along the first n shifts of a finite word.

    The word must expose at least n + k - 1 symbols, where k is the
    potential's effective depth, so that every shifted evaluation is
    determined.  Dividing the result by n gives the Birkhoff average.
    """
    symbols = _symbols_of(word)
    k = effective_depth(potential)
    if n < 1:
        raise ValueError("n must be >= 1, got %d" % n)
    ctx = BirkhoffContext(n=n, required_word_length=n + k - 1)
    if len(symbols) < ctx.required_word_length:
        raise ValueError(
            "word of length %d is too short for a %d-term sum of a depth-%d "
            "potential; %d symbols are required"
            % (len(symbols), n, k, ctx.required_word_length)
        )
    return math.fsum(evaluate(potential, symbols[j: j + k]) for j in range(n))


def sup_norm(potential: PotentialSpec) -> float:
    """Exact sup norm of the potential over the shift space."""
    if isinstance(potential, Tabulated):
        return float(np.max(np.abs(potential.values)))
    if isinstance(potential, Product):
        c = spin_coefficients(potential)
        return float(np.sum(np.abs(c)))
    if isinstance(potential, Affine):
        tab = to_tabulated(potential, effective_depth(potential))
        return float(np.max(np.abs(tab.values)))
    raise TypeError("not a potential spec: %r" % (potential,))


def to_tabulated(potential: PotentialSpec, depth: int) -> Tabulated:
    """Tabulate a potential at the requested depth.

    Deepening pads with dependence-free coordinates and is exact.
    Shallower tabulation of a Product truncates its coefficient list and
    adds the dropped couplings to ``tail_bound``; shallower tabulation of
    anything else is an error.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1, got %d" % depth)
    cfg = config_of(potential)
    d = cfg.alphabet_size

    if isinstance(potential, Tabulated):
        if depth == potential.depth:
            return potential
        if depth < potential.depth:
            raise ValueError(
                "cannot shrink a depth-%d table to depth %d" % (potential.depth, depth)
            )
        reps = d ** (depth - potential.depth)
        return Tabulated(cfg, depth, np.repeat(potential.values, reps))

    if isinstance(potential, Product):
        if depth < len(potential.coefficients):
            dropped = potential.coefficients[depth:]
            kept = Product(
                cfg,
                potential.J,
                potential.h,
                potential.coefficients[:depth],
                u_full=potential.u_full,
                tail_bound=potential.tail_bound + float(np.sum(np.abs(dropped))),
            )
            return to_tabulated(kept, depth)
        c = np.zeros(depth)
        c[: len(potential.coefficients)] = spin_coefficients(potential)
        # spin of coordinate `pos` across all depth-words, one bit at a time
        idx = np.arange(d ** depth, dtype=np.int64)
        values = np.zeros(d ** depth)
        for pos in range(depth):
            digit = (idx >> (depth - 1 - pos)) & 1
            values += c[pos] * (2.0 * digit - 1.0)
        return Tabulated(cfg, depth, values)

    if isinstance(potential, Affine):
        base = to_tabulated(potential.base, depth)
        values = potential.scale * base.values + potential.offset
        if potential.plus is not None:
            other, sc = potential.plus
            values = values + sc * to_tabulated(other, depth).values
        return Tabulated(cfg, depth, values)

    raise TypeError("not a potential spec: %r" % (potential,))


def negate(potential: PotentialSpec) -> Affine:
    """-A as a potential spec."""
    return Affine(potential, scale=-1.0)


def ergodic_max(potential: PotentialSpec) -> float:
    """Largest average of the potential over shift-invariant measures.

    Equals the maximum mean cycle of the de Bruijn graph on (k-1)-words
    whose edge w -> suffix(w.b) carries weight A(w.b); computed exactly
    with Karp's minimax recurrence from node 0 (the graph is strongly
    connected, so any source works).
    """
    tab = potential if isinstance(potential, Tabulated) else \
        to_tabulated(potential, effective_depth(potential))
    d = tab.config.alphabet_size
    k = tab.depth
    D = d ** (k - 1)
    # edge a.v (leading symbol a, suffix v) runs from node (a.v)//d to node v
    source = (np.arange(d ** k, dtype=np.int64) // d).reshape(d, D)
    weight = tab.values.reshape(d, D)
    # best[m][v] = max weight of an exactly-m-step walk 0 -> v
    levels = np.full((D + 1, D), -np.inf)
    levels[0, 0] = 0.0
    for m in range(1, D + 1):
        levels[m] = np.max(levels[m - 1][source] + weight, axis=0)
    best = -np.inf
    steps_left = (D - np.arange(D)).astype(float)
    for v in range(D):
        top = levels[D, v]
        if not np.isfinite(top):
            continue
        col = levels[:D, v]
        finite = np.isfinite(col)
        best = max(best, float(np.min((top - col[finite]) / steps_left[finite])))
    return best
