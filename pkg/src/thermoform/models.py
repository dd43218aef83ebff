"""Closed forms for the two reference models.

The linear spin ("product") potential sum_n c_n x_n has an explicit
pressure log(2 cosh(tu)), explicit derivatives, rate function,
eigenfunction and eigenmeasure; the fixed four-cylinder table on two
symbols has a 2x2 eigenvalue in radicals.  Everything here is an
independent oracle for the spectral engine: the formulas never call the
transfer-operator code, so any disagreement points at a real defect.
"""

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .shift import SPINS, Product, Tabulated, _symbols_of, spin_coefficients, tabulated_from_dict

INF = float("inf")

#: atanh arguments are clipped to this, keeping the boundary blowup monotone
BOUNDARY_GUARD = 1.0 - 1e-14


def _logcosh(z: float) -> float:
    az = abs(z)
    return az + math.log1p(math.exp(-2.0 * az)) - math.log(2.0)


def _atanh(y: float) -> float:
    return 0.5 * (math.log1p(y) - math.log1p(-y))


def product_pressure(t: float, u: float) -> float:
    """Pressure log(2 cosh(tu)) of the spin potential with interaction sum u."""
    z = abs(t * u)
    return z + math.log1p(math.exp(-2.0 * z))


def product_dpressure(t: float, u: float) -> float:
    """First derivative u tanh(tu); odd in t."""
    return u * math.tanh(t * u)


def product_d2pressure(t: float, u: float) -> float:
    """Second derivative u^2 sech^2(tu); even in t, positive."""
    z = abs(t * u)
    sech = 2.0 * math.exp(-z) / (1.0 + math.exp(-2.0 * z))
    return u * u * sech * sech


def product_rate(x: float, u: float) -> float:
    """Rate function z atanh(z) + (1/2) log(1 - z^2) at z = x/u.

    Finite, convex and even on (-u, u); +inf at |x| >= u.  Near the
    boundary the atanh argument is clipped at BOUNDARY_GUARD in both
    terms, which keeps the divergence monotone instead of producing NaN.
    """
    if u <= 0:
        raise ValueError("interaction sum u must be positive, got %g" % u)
    z = abs(x) / u
    if z >= 1.0:
        return INF
    zeff = min(z, BOUNDARY_GUARD)
    return zeff * _atanh(zeff) + 0.5 * math.log1p(-zeff * zeff)


@dataclass(frozen=True)
class ProductModel:
    """Closed-form data of the spin potential sum_n c_n x_n.

    ``u`` is the full interaction sum; ``coefficients`` holds the
    per-coordinate couplings c_n, needed for the eigen-objects.  The tail
    sums alphas[n-1] = u - (c_1 + ... + c_n) drive the eigenfunction.
    """

    u: float
    coefficients: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        if self.coefficients is not None:
            object.__setattr__(
                self, "coefficients", tuple(float(c) for c in self.coefficients)
            )

    @classmethod
    def from_potential(cls, potential: Product) -> "ProductModel":
        c = spin_coefficients(potential)
        return cls(u=math.fsum(c), coefficients=tuple(c))

    @property
    def depth(self) -> int:
        self._require_coefficients()
        return len(self.coefficients)

    @property
    def alphas(self) -> np.ndarray:
        self._require_coefficients()
        return self.u - np.cumsum(self.coefficients)

    def _require_coefficients(self):
        if self.coefficients is None:
            raise ValueError("this operation needs the model's coefficients")


def product_eigenfunction_log(t: float, model: ProductModel, word) -> float:
    """log of the eigenfunction: t * sum_n alphas[n] x_n over the word.

    The word must cover at least the leading depth-1 coordinates (length
    >= K - 1); longer words only add zero-weight terms past depth K.
    """
    symbols = _symbols_of(word)
    k = model.depth
    if len(symbols) < k - 1:
        raise ValueError(
            "word of length %d is too short; the eigenfunction needs %d coordinates"
            % (len(symbols), k - 1)
        )
    alphas = model.alphas
    m = min(len(symbols), k)
    return t * math.fsum(alphas[n] * symbols[n] for n in range(m))


def _split_logistic(z: float) -> Tuple[float, float]:
    """(sigma(2z), 1 - sigma(2z)) with the pair summing to 1 exactly."""
    e = math.exp(-2.0 * abs(z))
    big = 1.0 / (1.0 + e)
    if z >= 0:
        return big, 1.0 - big
    return 1.0 - big, big


def product_eigenmeasure_marginal(t: float, model: ProductModel, n: int) -> Tuple[float, float]:
    """n-th factor of the eigenmeasure: probabilities of (+1, -1).

    The eigenmeasure is a product of independent, non-identical spin
    distributions; the n-th has weight exp(t s_n)/(2 cosh(t s_n)) on +1
    with s_n = c_1 + ... + c_n.
    """
    model._require_coefficients()
    if not 1 <= n <= model.depth:
        raise ValueError("coordinate n=%d outside 1..%d" % (n, model.depth))
    s_n = math.fsum(model.coefficients[:n])
    return _split_logistic(t * s_n)


def product_iid_weights(t: float, u: float) -> Tuple[float, float]:
    """Equilibrium single-spin weights (p_plus, p_minus), p_plus = sigma(2tu)."""
    return _split_logistic(t * u)


def mu_of_product_eigenfunction(t: float, model: ProductModel) -> float:
    """Mean of the eigenfunction under the maximal entropy measure.

    Coordinates are independent fair signs there, so the mean factorizes:
    mu(psi) = prod_n cosh(t alphas[n]), accumulated in the log domain.
    Even in t.
    """
    return math.exp(math.fsum(_logcosh(t * a) for a in model.alphas))


GO_TABLE = {
    (-1.0, -1.0): 3.0,
    (-1.0, 1.0): -5.0,
    (1.0, 1.0): 1.0,
    (1.0, -1.0): 2.0,
}


@dataclass(frozen=True)
class GoModel:
    """The fixed four-cylinder two-state table with an inverse temperature."""

    beta: float = 0.6

    def potential(self) -> Tabulated:
        return go_potential()


def go_potential() -> Tabulated:
    """The depth-2 table 3, -5, 1, 2 on the four spin cylinders."""
    return tabulated_from_dict(SPINS, 2, GO_TABLE)


def go_pressure(t: float, beta: float) -> float:
    """Pressure P(t beta A) of the table model: larger 2x2 eigenvalue.

    The characteristic polynomial of the weighted transfer matrix is
    solved in radicals; the common scale is pulled out first so the
    exponentials never overflow.
    """
    s = beta * t
    c = max(3.0 * s, s, -1.5 * s)
    e11 = math.exp(3.0 * s - c)
    e22 = math.exp(s - c)
    disc = (e11 - e22) ** 2 + 4.0 * math.exp(-3.0 * s - 2.0 * c)
    return c + math.log(0.5 * (e11 + e22 + math.sqrt(disc)))


def go_pressure_printed(t: float) -> float:
    """P(0.6 t A) through the verbatim radical expression for beta = 0.6.

    Kept as an independently coded route so a transcription slip in
    either formula fails loudly against the eigenvalue version: the
    expression is log((1/2) e^{-3t} (e^{3.6t} + e^{4.8t} + e^{2.1t}
    sqrt(4 + e^{3t} - 2 e^{4.2t} + e^{5.4t}))), rearranged only as far as
    overflow safety requires.
    """
    if t >= 0:
        logx = 5.4 * t + math.log((1.0 - math.exp(-1.2 * t)) ** 2 + 4.0 * math.exp(-5.4 * t))
    else:
        logx = math.log(4.0 + math.exp(3.0 * t) - 2.0 * math.exp(4.2 * t) + math.exp(5.4 * t))
    terms = (3.6 * t, 4.8 * t, 2.1 * t + 0.5 * logx)
    m = max(terms)
    lse = m + math.log(math.fsum(math.exp(v - m) for v in terms))
    return -3.0 * t + lse - math.log(2.0)
