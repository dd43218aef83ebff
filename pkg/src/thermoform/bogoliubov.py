"""Bogoliubov's variational problem for nonlinear pressures.

The approximating pressure v(t) = -beta*t^2/2 + P(f + beta*t*A) trades the
nonlinear functional for a family of linear ones; its critical points are
the self-consistent parameters t = mu_{f+beta*t*A}(A), its global maxima
carry the nonlinear (quadratic) pressure, and several global maxima mean a
nonlinear phase transition.  Convex and concave nonlinearities given on a
grid are handled through the numerical conjugate instead.
"""

import math
import warnings
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple, Union

import numpy as np

from .legendre import (
    GridFunction,
    finite_part,
    is_concave,
    is_convex,
    legendre_transform,
    rate_function,
    refine_peak,
    varadhan_value,
)
from .shift import (
    PotentialSpec,
    config_of,
    effective_depth,
    ergodic_max,
    negate,
    sup_norm,
    to_tabulated,
)
from .transfer import (
    DegeneratePotentialError,
    EquilibriumDescriptor,
    combine,
    cylinder_marginals,
    degenerate_direction,
    equilibrium,
    expectation,
    pressure,
    pressure_curve,
    pressure_scan,
    pressure_second_derivative,
)

SCAN_POINTS = 2001          # sign-change scan resolution over [-W, W]
BISECT_WIDTH = 1e-13        # bracket width at which bisection stops
TIE_RELATIVE = 1e-9         # relative v-gap treated as an exact tie
SUSPECT_RELATIVE = 1e-6     # relative v-gap reported as a suspected tie
CURVATURE_EPS = 1e-9        # |v''| below this is classified degenerate


# ---------------------------------------------------------------------------
# nonlinearity specifications
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadraticConvex:
    """F(x) = beta*x^2/2 with beta > 0."""

    beta: float

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError("beta must be positive, got %r" % (self.beta,))


@dataclass(frozen=True)
class QuadraticConcave:
    """F(x) = -beta*x^2/2 with beta > 0."""

    beta: float

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError("beta must be positive, got %r" % (self.beta,))


@dataclass(frozen=True)
class ConvexGrid:
    """A convex nonlinearity sampled on a grid."""

    curve: GridFunction

    def __post_init__(self):
        if not is_convex(self.curve):
            raise ValueError("ConvexGrid needs a convex sampled curve")


@dataclass(frozen=True)
class ConcaveGrid:
    """A concave nonlinearity sampled on a grid (finite values only)."""

    curve: GridFunction

    def __post_init__(self):
        if not np.all(np.isfinite(self.curve.values)):
            raise ValueError("ConcaveGrid needs finite values everywhere")
        if not is_concave(self.curve):
            raise ValueError("ConcaveGrid needs a concave sampled curve")


NonlinearitySpec = Union[QuadraticConvex, QuadraticConcave, ConvexGrid, ConcaveGrid]


@dataclass(frozen=True)
class CriticalPoint:
    t: float          # self-consistent parameter
    v_value: float    # approximating pressure at t
    residual: float   # |v'(t)| after refinement
    v_second: float   # curvature of the scanned objective at t
    kind: str         # local_max | local_min | degenerate


@dataclass(frozen=True)
class SolveReport:
    """Outcome of one variational solve.

    critical_points lists every refined stationary point sorted by t;
    global_optimizers is the subset tying with the best value, and
    equilibria holds one equilibrium descriptor per global optimizer.
    Near-ties beyond solver precision land in suspected_ties instead of
    being silently merged into the global set.
    """

    critical_points: Tuple[CriticalPoint, ...]
    global_optimizers: Tuple[CriticalPoint, ...]
    nonlinear_pressure: float
    phase_transition: bool
    suspected_ties: Tuple[CriticalPoint, ...]
    equilibria: Tuple[EquilibriumDescriptor, ...]


# ---------------------------------------------------------------------------
# approximating pressure and self-consistency
# ---------------------------------------------------------------------------

def approximating_pressure(
    f: Optional[PotentialSpec],
    A: PotentialSpec,
    beta: float,
    t: float,
    tol: float = 1e-12,
) -> float:
    """v(t) = -beta*t^2/2 + P(f + beta*t*A), minus log d when f is None.

    The f=None convention stands for the maximal-entropy base, whose
    customary -log d normalization is applied here; a general f carries
    no constant subtraction, so comparisons across different f should
    subtract P(f) explicitly.
    """
    if not beta > 0:
        raise ValueError("beta must be positive, got %r" % (beta,))
    value = -0.5 * beta * t * t + pressure(combine(f, A, beta * t), tol)
    if f is None:
        value -= math.log(config_of(A).alphabet_size)
    return value


def _scan_grid(width: float) -> np.ndarray:
    half = np.linspace(0.0, width, (SCAN_POINTS + 1) // 2)
    return np.concatenate([-half[:0:-1], half])


def _mean_maker(f, A, beta, tol):
    """Warm-started evaluator of t -> mu_{f+beta*t*A}(A)."""
    depth = effective_depth(A)
    values = to_tabulated(A, depth).values

    def mean(t, warm):
        eq = equilibrium(combine(f, A, beta * t), tol, warm=warm)
        mu = float(np.sum(cylinder_marginals(eq, depth) * values))
        return mu, (eq.log_psi, eq.log_nu)

    return mean


def _bisect(g: Callable, a: float, b: float, ga: float, gb: float) -> float:
    warm = None
    while b - a > BISECT_WIDTH:
        mid = 0.5 * (a + b)
        gm, warm = g(mid, warm)
        if gm == 0.0:
            return mid
        if ga * gm < 0.0:
            b, gb = mid, gm
        else:
            a, ga = mid, gm
    return 0.5 * (a + b)


def solve_self_consistency(
    f: Optional[PotentialSpec],
    A: PotentialSpec,
    beta: float,
    tol: float = 1e-12,
) -> List[CriticalPoint]:
    """All self-consistent parameters t = mu_{f+beta*t*A}(A), classified.

    Every solution satisfies |t| <= sup|A|, so the sign-change scan over
    [-W, W] with W = sup|A|+1 sees every root; each bracket is closed by
    bisection.  Classification comes from v''(t) = -beta + beta^2 *
    d^2/ds^2 P(f+sA) at s = beta*t.
    """
    if not beta > 0:
        raise ValueError("beta must be positive, got %r" % (beta,))
    if degenerate_direction(A):
        raise DegeneratePotentialError(
            "direction potential is a coboundary plus a constant, so the "
            "pressure curve is affine and self-consistency carries no "
            "nonlinear content"
        )
    width = sup_norm(A) + 1.0
    ts = _scan_grid(width)
    mean = _mean_maker(f, A, beta, tol)

    gs = np.empty(ts.size)
    warm = None
    for i, t in enumerate(ts):
        mu, warm = mean(float(t), warm)
        gs[i] = mu - t

    roots = [float(ts[i]) for i in np.flatnonzero(gs == 0.0)]
    for i in range(ts.size - 1):
        if gs[i] * gs[i + 1] < 0.0:
            roots.append(_bisect(lambda t, w: _shifted(mean, t, w),
                                 float(ts[i]), float(ts[i + 1]),
                                 float(gs[i]), float(gs[i + 1])))
    roots.sort()
    merged: List[float] = []
    for r in roots:
        if not merged or r - merged[-1] > 1e-9:
            merged.append(r)

    points = []
    for r in merged:
        mu, _ = mean(r, None)
        residual = beta * abs(mu - r)
        v2 = -beta + beta * beta * pressure_second_derivative(f, A, beta * r, tol=tol)
        if abs(v2) < CURVATURE_EPS:
            kind = "degenerate"
        else:
            kind = "local_max" if v2 < 0.0 else "local_min"
        value = approximating_pressure(f, A, beta, r, tol)
        points.append(CriticalPoint(t=r, v_value=value, residual=residual,
                                    v_second=v2, kind=kind))
    return points


def _shifted(mean, t, warm):
    mu, warm = mean(t, warm)
    return mu - t, warm


# ---------------------------------------------------------------------------
# convex problem
# ---------------------------------------------------------------------------

def _tie_split(candidates: List[CriticalPoint]):
    vmax = max(p.v_value for p in candidates)
    scale = max(1.0, abs(vmax))
    best = [p for p in candidates if vmax - p.v_value <= TIE_RELATIVE * scale]
    near = [p for p in candidates
            if TIE_RELATIVE * scale < vmax - p.v_value <= SUSPECT_RELATIVE * scale]
    return vmax, best, near


def nonlinear_pressure_convex(
    F: NonlinearitySpec,
    A: PotentialSpec,
    f: Optional[PotentialSpec] = None,
    tol: float = 1e-12,
) -> SolveReport:
    """Bogoliubov's principle for convex F: sup_s(-F*(s) + P(sA) - log d).

    The quadratic case reduces to maximizing the approximating pressure
    over the self-consistent parameters; a sampled F is conjugated
    numerically and the objective is scanned over the conjugate's nodes.
    """
    if isinstance(F, QuadraticConvex):
        points = solve_self_consistency(f, A, F.beta, tol)
        candidates = [p for p in points if p.kind != "local_min"] or points
        vmax, best, near = _tie_split(candidates)
        eqs = tuple(equilibrium(combine(f, A, F.beta * p.t), tol) for p in best)
        return SolveReport(
            critical_points=tuple(points),
            global_optimizers=tuple(best),
            nonlinear_pressure=vmax,
            phase_transition=len(best) >= 2,
            suspected_ties=tuple(near),
            equilibria=eqs,
        )
    if isinstance(F, ConvexGrid):
        if f is not None:
            raise ValueError("grid nonlinearities support only the "
                             "maximal-entropy base (f=None)")
        return _grid_report(F.curve, A, concave=False, tol=tol)
    raise TypeError("expected a convex nonlinearity spec, got %r" % (F,))


def nonlinear_pressure_concave(
    F: NonlinearitySpec,
    A: PotentialSpec,
    f: Optional[PotentialSpec] = None,
    tol: float = 1e-12,
) -> SolveReport:
    """Bogoliubov's principle for concave F: inf_s(G*(-s) + P(sA) - log d).

    With G = -F strictly convex the objective w(t) = beta*t^2/2 + P(f +
    beta*t*A) has a strictly increasing derivative, hence exactly one
    optimizer and never a phase transition.
    """
    if isinstance(F, QuadraticConcave):
        beta = F.beta
        width = sup_norm(A) + 1.0
        mean = _mean_maker(f, A, beta, tol)

        def h(t, warm):
            mu, warm = mean(t, warm)
            return mu + t, warm

        ha, _ = h(-width, None)
        hb, _ = h(width, None)
        if ha > 0.0 or hb < 0.0:
            raise RuntimeError("increasing derivative failed to bracket a root")
        root = _bisect(h, -width, width, ha, hb)
        mu, _ = mean(root, None)
        residual = beta * abs(mu + root)
        v2 = beta + beta * beta * pressure_second_derivative(f, A, beta * root, tol=tol)
        value = 0.5 * beta * root * root + pressure(combine(f, A, beta * root), tol)
        if f is None:
            value -= math.log(config_of(A).alphabet_size)
        point = CriticalPoint(t=root, v_value=value, residual=residual,
                              v_second=v2, kind="local_min")
        eq = equilibrium(combine(f, A, beta * root), tol)
        return SolveReport(
            critical_points=(point,),
            global_optimizers=(point,),
            nonlinear_pressure=value,
            phase_transition=False,
            suspected_ties=(),
            equilibria=(eq,),
        )
    if isinstance(F, ConcaveGrid):
        if f is not None:
            raise ValueError("grid nonlinearities support only the "
                             "maximal-entropy base (f=None)")
        return _grid_report(F.curve, A, concave=True, tol=tol)
    raise TypeError("expected a concave nonlinearity spec, got %r" % (F,))


def _parabola_curvature(xs, ys) -> float:
    (xa, xb, xc), (ya, yb, yc) = xs, ys
    return 2.0 * (ya / ((xa - xb) * (xa - xc))
                  + yb / ((xb - xa) * (xb - xc))
                  + yc / ((xc - xa) * (xc - xb)))


def _grid_report(curve: GridFunction, A: PotentialSpec, concave: bool,
                 tol: float) -> SolveReport:
    """Scan the conjugated objective over its slope nodes.

    Convex: maximize -F*(s) + P(sA) - log d.  Concave: minimize
    G*(-s) + P(sA) - log d with G = -F.  The reported parameter is the
    equilibrium mean at the optimal s (the conjugate's derivative equals
    that mean at stationarity), so its residual vanishes by construction;
    v_second records the curvature of the scanned objective in s.
    """
    log_d = math.log(config_of(A).alphabet_size)
    if concave:
        conj = legendre_transform(GridFunction(curve.grid, -curve.values, "convex"))
        nodes, conj_vals = finite_part(conj)
        s_nodes = -nodes[::-1]
        conj_at_s = conj_vals[::-1]          # G*(-s) on ascending s
        sign = -1.0                          # minimize = maximize the negative
    else:
        conj = legendre_transform(curve)
        s_nodes, conj_at_s = finite_part(conj)
        sign = 1.0
    spread = s_nodes[-1] - s_nodes[0]
    if spread <= 1e-8 * max(1.0, abs(s_nodes[0]), abs(s_nodes[-1])):
        warnings.warn(
            "nonlinearity is essentially linear: its conjugate is not "
            "superlinear and the optimizer may sit at the window edge",
            RuntimeWarning)
    raw_p = pressure_scan(None, A, s_nodes, tol)
    objs = sign * (-sign * conj_at_s + raw_p - log_d)
    # with sign folded in, objs is always maximized

    n = s_nodes.size
    cands: List[Tuple[float, float, float, bool]] = []  # (s, value, curvature, interior)
    for i in range(n):
        left = objs[i - 1] if i > 0 else -math.inf
        right = objs[i + 1] if i + 1 < n else -math.inf
        if objs[i] >= left and objs[i] >= right:
            if 0 < i < n - 1:
                s_bar, val = refine_peak(s_nodes[i - 1:i + 2], objs[i - 1:i + 2])
                curv = _parabola_curvature(s_nodes[i - 1:i + 2], objs[i - 1:i + 2])
                cands.append((s_bar, val, sign * curv, True))
            else:
                warnings.warn(
                    "objective peaks at the scan edge; the nonlinearity may "
                    "lack superlinear conjugate growth", RuntimeWarning)
                cands.append((float(s_nodes[i]), float(objs[i]), 0.0, False))

    cands.sort()
    spacing = np.median(np.diff(s_nodes)) if n > 1 else 1.0
    merged: List[Tuple[float, float, float, bool]] = []
    for c in cands:
        if merged and c[0] - merged[-1][0] <= 0.5 * spacing:
            if c[1] > merged[-1][1]:
                merged[-1] = c
        else:
            merged.append(c)

    points = []
    eq_by_point = []
    warm = None
    for s_bar, val, curv, interior in merged:
        eq = equilibrium(combine(None, A, s_bar), tol, warm=warm)
        warm = (eq.log_psi, eq.log_nu)
        mu = expectation(eq, A)
        t_bar = -mu if concave else mu
        if not interior or abs(curv) < CURVATURE_EPS:
            kind = "degenerate"
        else:
            kind = "local_min" if concave else "local_max"
        points.append(CriticalPoint(t=t_bar, v_value=sign * val, residual=0.0,
                                    v_second=curv, kind=kind))
        eq_by_point.append(eq)

    order = sorted(range(len(points)), key=lambda i: points[i].t)
    points = [points[i] for i in order]
    eq_by_point = [eq_by_point[i] for i in order]
    scored = [(sign * p.v_value, i) for i, p in enumerate(points)]
    vbest = max(v for v, _ in scored)
    scale = max(1.0, abs(vbest))
    best_ids = [i for v, i in scored if vbest - v <= TIE_RELATIVE * scale]
    near_ids = [i for v, i in scored
                if TIE_RELATIVE * scale < vbest - v <= SUSPECT_RELATIVE * scale]
    best = tuple(points[i] for i in best_ids)
    return SolveReport(
        critical_points=tuple(points),
        global_optimizers=best,
        nonlinear_pressure=sign * vbest,
        phase_transition=len(best) >= 2,
        suspected_ties=tuple(points[i] for i in near_ids),
        equilibria=tuple(eq_by_point[i] for i in best_ids),
    )


# ---------------------------------------------------------------------------
# cross-checks and accessors
# ---------------------------------------------------------------------------

def cross_check_varadhan(
    report: SolveReport,
    F: NonlinearitySpec,
    A: PotentialSpec,
    f: Optional[PotentialSpec] = None,
    t_grid=None,
    tol: float = 1e-12,
) -> float:
    """|report value - sup_x(F(x) - I(x))|, the dual route discrepancy.

    The rate function I comes from conjugating the pressure curve of A
    (relative to f); with a general f the report value contains P(f),
    which is added back to the Varadhan side before comparing.
    """
    if isinstance(F, QuadraticConvex):
        beta, tilt = F.beta, (lambda x, b=F.beta: 0.5 * b * x * x)
    elif isinstance(F, QuadraticConcave):
        beta, tilt = F.beta, (lambda x, b=F.beta: -0.5 * b * x * x)
    else:
        beta, tilt = None, F.curve
    if t_grid is None:
        if beta is not None:
            width = beta * (sup_norm(A) + 1.0) + 1.0
        else:
            width = sup_norm(A) + 6.0
        step = max(0.01, 2.0 * width / 4000.0)
        half = np.arange(0.0, width + step, step)
        t_grid = np.concatenate([-half[:0:-1], half])
    chat = pressure_curve(f, A, t_grid, tol)
    rate = rate_function(chat, ergodic_max(A), ergodic_max(negate(A)))
    target = varadhan_value(tilt, rate)
    if f is not None:
        target += pressure(f, tol)
    return abs(report.nonlinear_pressure - target)


def equilibrium_for_optimizer(report: SolveReport, index: int) -> EquilibriumDescriptor:
    """Equilibrium descriptor attached to the index-th global optimizer."""
    if not 0 <= index < len(report.global_optimizers):
        raise IndexError("optimizer index %d out of range (%d optimizers)"
                         % (index, len(report.global_optimizers)))
    return report.equilibria[index]
