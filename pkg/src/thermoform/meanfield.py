"""Mean-field Gibbs mixtures and exact finite-volume enumeration.

The quadratic tilt exp(beta*n*g_n(x)^2/2) concentrates, as n grows, on the
global maximizers t_j of the approximating pressure v(t); the limit object
is a convex combination of the eigenmeasures nu_{f+beta*t_j*g} weighted by
Laplace factors mu_f(h_j)/sqrt|v''(t_j)|.  This module builds that mixture
from a variational solve, evaluates the finite-n tilted averages m_n and
M^(n) by exact enumeration (never sampling), and carries the i.i.d.
free-energy functionals and the Gaussian-identity check used to
cross-validate the variational value.
"""

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .bogoliubov import CURVATURE_EPS, QuadraticConvex, nonlinear_pressure_convex
from .kernels import tilted_stats
from .models import ProductModel, product_eigenmeasure_marginal
from .shift import (
    PotentialSpec,
    Product,
    ShiftConfig,
    Tabulated,
    config_of,
    effective_depth,
    spin_coefficients,
    to_tabulated,
    word_index,
)
from .transfer import combine, cylinder_marginals, equilibrium


# ---------------------------------------------------------------------------
# mixture of eigenmeasures
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EigenmeasureInfo:
    """Concrete description of one mixture component's eigenmeasure.

    kind "product_marginals" carries the probabilities of the +1 spin for
    every coordinate up to the tabulation depth; the measure is a product
    of independent, non-identical spin factors whose marginal freezes from
    that depth on.  kind "cylinder_weights" carries the left-Perron weights
    on (depth-1)-words together with the tilted potential table and its
    log-eigenvalue, which extend the weights to cylinders of any length.
    """

    kind: str
    config: ShiftConfig
    depth: int
    site_plus: Optional[Tuple[float, ...]] = None
    log_nu: Optional[np.ndarray] = None
    log_table: Optional[np.ndarray] = None
    log_lambda: float = 0.0


def cylinder_mass(info: EigenmeasureInfo, symbols) -> float:
    """Eigenmeasure mass of the cylinder fixing the leading symbols."""
    symbols = tuple(symbols)
    if not symbols:
        return 1.0
    m = len(symbols)
    if info.kind == "product_marginals":
        mass = 1.0
        for i, s in enumerate(symbols):
            p = info.site_plus[min(i, info.depth - 1)]
            mass *= p if word_index(info.config, (s,)) == 1 else 1.0 - p
        return mass
    if info.kind != "cylinder_weights":
        raise ValueError("unknown eigenmeasure kind %r" % (info.kind,))
    d = info.config.alphabet_size
    depth = info.depth
    idx = [word_index(info.config, (s,)) for s in symbols]
    if m <= depth - 1:
        # marginalize the stored (depth-1)-word weights over the free tail
        base = 0
        for i in idx:
            base = base * d + i
        block = d ** (depth - 1 - m)
        lo = base * block
        return float(np.sum(np.exp(info.log_nu[lo:lo + block])))
    # extend by the eigen-equation: every full-depth subword contributes its
    # potential value against one factor of the eigenvalue, and the last
    # (depth-1)-word closes with a stored weight
    log_mass = 0.0
    for j in range(m - depth + 1):
        w = 0
        for i in idx[j:j + depth]:
            w = w * d + i
        log_mass += float(info.log_table[w])
    log_mass -= (m - depth + 1) * info.log_lambda
    tail = 0
    for i in idx[m - depth + 1:]:
        tail = tail * d + i
    return math.exp(log_mass + float(info.log_nu[tail]))


@dataclass(frozen=True)
class MixtureComponent:
    t: float          # global maximizer of the approximating pressure
    weight: float     # normalized Laplace weight
    v_value: float    # v(t); ties with the mixture's v_at_max
    v_second: float   # curvature v''(t) entering the weight
    log_lambda: float
    eigenmeasure: EigenmeasureInfo


@dataclass(frozen=True)
class MixtureResult:
    """Limit mixture of eigenmeasures under the quadratic tilt."""

    components: Tuple[MixtureComponent, ...]
    v_at_max: float
    gibbs_phase_transition: bool  # more than one component survives


def laplace_mixture(
    f: Optional[PotentialSpec],
    g: PotentialSpec,
    beta: float,
    tol: float = 1e-12,
) -> MixtureResult:
    """Mixture of eigenmeasures selected by the Laplace asymptotics.

    Solves the variational problem for v(t) = -beta*t^2/2 + P(f+beta*t*g)
    and turns each global maximizer t_j into a component with unnormalized
    weight mu_f(h_j)/sqrt|v''(t_j)|, where h_j is the eigenfunction of the
    tilted transfer operator (normalized against its own eigenmeasure) and
    mu_f the reference equilibrium state.  Equal curvatures cancel after
    normalization, leaving the plain mu_f(h_j) proportions.  A vanishing
    curvature at any maximizer defeats the quadratic expansion, so that
    case is refused rather than mis-weighted.
    """
    report = nonlinear_pressure_convex(QuadraticConvex(beta), g, f, tol)
    cfg = config_of(g)
    d = cfg.alphabet_size
    eq_f = equilibrium(f, tol) if f is not None else None
    raw = []
    infos = []
    for point, eq in zip(report.global_optimizers, report.equilibria):
        if abs(point.v_second) < CURVATURE_EPS:
            raise RuntimeError(
                "Laplace method inapplicable: optimizer t=%.12g has vanishing"
                " curvature v''=%.3e" % (point.t, point.v_second))
        depth = eq.depth
        psi = np.exp(eq.log_psi)
        if eq_f is None:
            mu_psi = float(np.sum(psi)) / d ** (depth - 1)
        else:
            marg = cylinder_marginals(eq_f, depth - 1) if depth > 1 else np.ones(1)
            mu_psi = float(np.sum(marg * psi))
        raw.append(mu_psi / math.sqrt(abs(point.v_second)))
        if f is None and isinstance(g, Product):
            model = ProductModel.from_potential(g)
            site = tuple(
                product_eigenmeasure_marginal(beta * point.t, model, i)[0]
                for i in range(1, model.depth + 1))
            infos.append(EigenmeasureInfo(
                kind="product_marginals", config=cfg, depth=depth,
                site_plus=site, log_lambda=eq.log_lambda))
        else:
            table = to_tabulated(combine(f, g, beta * point.t), depth)
            infos.append(EigenmeasureInfo(
                kind="cylinder_weights", config=cfg, depth=depth,
                log_nu=eq.log_nu, log_table=table.values,
                log_lambda=eq.log_lambda))
    total = math.fsum(raw)
    comps = tuple(
        MixtureComponent(t=point.t, weight=r / total, v_value=point.v_value,
                         v_second=point.v_second, log_lambda=eq.log_lambda,
                         eigenmeasure=info)
        for point, eq, r, info in zip(report.global_optimizers,
                                      report.equilibria, raw, infos))
    return MixtureResult(components=comps, v_at_max=report.nonlinear_pressure,
                         gibbs_phase_transition=len(comps) >= 2)


def mixture_cylinder_mass(mix: MixtureResult, symbols) -> float:
    """Mass the mixture assigns to the cylinder fixing the leading symbols."""
    return math.fsum(c.weight * cylinder_mass(c.eigenmeasure, symbols)
                     for c in mix.components)


# ---------------------------------------------------------------------------
# exact finite-volume enumeration
# ---------------------------------------------------------------------------

def cylinder_indicator(config: ShiftConfig, symbols) -> Tabulated:
    """Indicator observable of the cylinder fixing the leading symbols."""
    symbols = tuple(symbols)
    if not symbols:
        raise ValueError("a cylinder needs at least one fixed symbol")
    values = np.zeros(config.alphabet_size ** len(symbols))
    values[word_index(config, symbols)] = 1.0
    return Tabulated(config, len(symbols), values)


def shifted_observable(psi: Tabulated) -> Tabulated:
    """The observable composed with one shift step, as a one-deeper table."""
    return Tabulated(psi.config, psi.depth + 1,
                     np.tile(psi.values, psi.config.alphabet_size))


@dataclass(frozen=True)
class EnumerationEstimate:
    n: int          # number of tilted coordinates
    depth: int      # interaction depth K
    value: float    # the tilted average
    z: float        # partition value Z_n (inf when its exponent overflows)
    log_z: float
    capacity: int   # enumerated word length n + K - 1


def _validated(psi: Tabulated, n: int, beta: float, g: PotentialSpec):
    cfg = config_of(g)
    if psi.config != cfg:
        raise ValueError("observable and interaction live on different shift spaces")
    if n < 1:
        raise ValueError("n must be at least 1, got %d" % n)
    if beta < 0:
        raise ValueError("beta must be nonnegative, got %r" % (beta,))
    return cfg, effective_depth(g)


def enumerate_m_n(
    psi: Tabulated,
    n: int,
    beta: float,
    f: Optional[PotentialSpec],
    g: PotentialSpec,
    tol: float = 1e-12,
) -> EnumerationEstimate:
    """Exact tilted head average m_n(psi) over all words of length n+K-1.

    m_n(psi) = sum_x psi(x) w(x) / sum_x w(x) with the quadratic tilt
    w(x) = exp(beta*n*g_n(x)^2/2) * mu_f[x]; the reference cylinder masses
    are uniform for f=None and come from the transfer triple of f
    otherwise.  All d**(n+K-1) configurations are enumerated in
    log-sum-exp arithmetic, so the ratio is exact to floating point.
    """
    cfg, depth = _validated(psi, n, beta, g)
    length = n + depth - 1
    f_args = None
    if f is not None:
        if config_of(f) != cfg:
            raise ValueError("f and g live on different shift spaces")
        eq = equilibrium(f, tol)
        f_args = (to_tabulated(f, eq.depth).values, eq.depth, eq.log_psi,
                  eq.log_nu, -(length - eq.depth + 1) * eq.log_lambda)
    scale, den, nums = tilted_stats(to_tabulated(g, depth).values,
                                    cfg.alphabet_size, depth, n, beta,
                                    [(psi.values, psi.depth, "head")], f_args)
    log_z = scale + math.log(den)
    if f is None:
        log_z -= length * math.log(cfg.alphabet_size)
    z = math.exp(log_z) if log_z < 709.0 else math.inf
    return EnumerationEstimate(n=n, depth=depth, value=float(nums[0] / den),
                               z=z, log_z=log_z, capacity=length)


def enumerate_M_n(
    psi: Tabulated,
    n: int,
    beta: float,
    g: PotentialSpec,
) -> EnumerationEstimate:
    """Exact tilted bulk average M^(n)(psi), with psi Birkhoff-averaged.

    Same tilt and maximal-entropy reference as enumerate_m_n, but the
    numerator carries (1/n) * sum_{j<n} psi(T^j x); the shifted copies must
    stay inside the enumerated word, so psi cannot look deeper than the
    interaction.
    """
    cfg, depth = _validated(psi, n, beta, g)
    length = n + depth - 1
    scale, den, nums = tilted_stats(to_tabulated(g, depth).values,
                                    cfg.alphabet_size, depth, n, beta,
                                    [(psi.values, psi.depth, "birkhoff")], None)
    log_z = scale + math.log(den) - length * math.log(cfg.alphabet_size)
    z = math.exp(log_z) if log_z < 709.0 else math.inf
    return EnumerationEstimate(n=n, depth=depth, value=float(nums[0] / den) / n,
                               z=z, log_z=log_z, capacity=length)


# ---------------------------------------------------------------------------
# i.i.d. free-energy functionals
# ---------------------------------------------------------------------------

def delta_functional(m: float, A: Product, n: int) -> float:
    """(1/2) E[A_n^2] under i.i.d. +-1 spins with mean m, in closed form.

    Writing the n-term Birkhoff average as A_n = (1/n) sum_i w_i x_i with
    window sums w_i of the spin coefficients, the second moment splits into
    the squared mean (m*u)^2 and the independent-spin variance
    (1-m^2) sum_i w_i^2 / n^2.  No sampling is involved.
    """
    if not isinstance(A, Product):
        raise TypeError("delta_functional needs a product (linear-in-spins) potential")
    if not -1.0 <= m <= 1.0:
        raise ValueError("the i.i.d. bias must lie in [-1, 1], got %r" % (m,))
    if n < 1:
        raise ValueError("n must be at least 1, got %d" % n)
    c = spin_coefficients(A)
    w = np.convolve(c, np.ones(n))
    u = math.fsum(c)
    return 0.5 * (m * u) ** 2 + (1.0 - m * m) * float(np.sum(w * w)) / (2.0 * n * n)


@dataclass(frozen=True)
class FunctionalReport:
    m: float        # i.i.d. bias of the reporting measure
    delta: float    # ergodic limit value of the Delta functional
    f_plus: float
    f_minus: float
    g_plus: float
    g_minus: float


def free_energy_functionals(m: float, A: Product, beta: float) -> FunctionalReport:
    """Mean-field free energies of the i.i.d. +-1 measure with mean m.

    h = -(p log p + q log q) with p = (1+m)/2; the i.i.d. measure is
    ergodic, so Delta collapses to (m*u)^2/2 and the Delta-based pair
    coincides with the squared-mean pair.  All four values are reported.
    """
    if not isinstance(A, Product):
        raise TypeError("free_energy_functionals needs a product potential")
    if not -1.0 < m < 1.0:
        raise ValueError("the entropy formula needs |m| < 1, got %r" % (m,))
    if not beta > 0:
        raise ValueError("beta must be positive, got %r" % (beta,))
    u = math.fsum(spin_coefficients(A))
    p = 0.5 * (1.0 + m)
    q = 0.5 * (1.0 - m)
    ent = -(p * math.log(p) + q * math.log(q))
    log_d = math.log(config_of(A).alphabet_size)
    delta = 0.5 * (m * u) ** 2
    return FunctionalReport(
        m=m,
        delta=delta,
        f_plus=-(beta * delta + ent - log_d),
        f_minus=-(-beta * delta + ent - log_d),
        g_plus=-(0.5 * beta * (m * u) ** 2 + ent - log_d),
        g_minus=-(-0.5 * beta * (m * u) ** 2 + ent - log_d),
    )


def hubbard_stratonovich_check(a: float) -> float:
    """Relative quadrature discrepancy in the Gaussian linearization identity.

    Checks e^{a^2} = (2 pi)^{-1/2} * integral of e^{-y^2/2 + sqrt(2)*a*y} dy
    by the trapezoid rule on [-(sqrt(2)|a|+12), sqrt(2)|a|+12]; the rule is
    spectrally accurate for this integrand, so a step near 0.5 already puts
    the error far below 1e-10.  Comparison happens in the log domain, which
    keeps the check finite up to a = 20.
    """
    if not abs(a) <= 20.0:
        raise ValueError("|a| must not exceed 20, got %r" % (a,))
    half = math.sqrt(2.0) * abs(a) + 12.0
    count = int(round(4.0 * half)) + 1
    ys = np.linspace(-half, half, count)
    h = 2.0 * half / (count - 1)
    exponents = -0.5 * ys * ys + math.sqrt(2.0) * a * ys
    weights = np.full(count, h)
    weights[0] = weights[-1] = 0.5 * h
    shift = float(np.max(exponents))
    total = float(np.sum(np.exp(exponents - shift) * weights))
    log_quad = shift + math.log(total) - 0.5 * math.log(2.0 * math.pi)
    return abs(math.expm1(log_quad - a * a))
