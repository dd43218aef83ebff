"""Transfer matrices, Perron data and equilibrium measures.

A depth-k tabulated potential induces a weighted de Bruijn graph on the
D = d^(k-1) leading (k-1)-words; the transfer operator sums e^A over
one-symbol extensions.  Everything runs in the log domain: the Perron
eigenvalue is the pressure, the right eigenfunction and the eigenmeasure
come from power iteration on the operator and its adjoint, and the
equilibrium measure is the Markov chain obtained by the usual Doob
transform.  Pressure curves along a parameter grid warm-start each solve
from the previous one, which is what makes dense scans cheap.
"""

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .legendre import GridFunction
from .shift import (
    Affine,
    PotentialSpec,
    ShiftConfig,
    Tabulated,
    config_of,
    effective_depth,
    ergodic_max,
    negate,
    to_tabulated,
)


class NonConvergenceError(RuntimeError):
    """Power iteration missed the tolerance within the iteration cap."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


class DegeneratePotentialError(RuntimeError):
    """Raised when a direction potential acts like a constant.

    Such a potential (constant, or a coboundary plus a constant) has an
    affine pressure curve, so self-consistency and phase-transition
    questions are meaningless for it.
    """


@dataclass(frozen=True)
class TransferMatrix:
    """Log-domain transfer weights of a depth-k potential."""

    config: ShiftConfig
    depth: int
    log_weights: np.ndarray  # table of A over k-words; entry e weighs prefix(e) -> suffix(e)

    def __post_init__(self):
        w = np.asarray(self.log_weights, dtype=float)
        object.__setattr__(self, "log_weights", w)
        want = self.config.alphabet_size ** self.depth
        if w.shape != (want,):
            raise ValueError("expected %d log-weights, got shape %r" % (want, w.shape))
        if not np.all(np.isfinite(w)):
            raise ValueError("transfer weights must be finite in the log domain")

    @property
    def dimension(self) -> int:
        return self.config.alphabet_size ** (self.depth - 1)


def build_transfer(potential: PotentialSpec, depth: Optional[int] = None) -> TransferMatrix:
    """Transfer matrix of a potential, tabulated at its effective depth."""
    tab = to_tabulated(potential, depth if depth is not None else effective_depth(potential))
    return TransferMatrix(tab.config, tab.depth, tab.values)


@dataclass(frozen=True)
class PerronTriple:
    """Leading eigendata: log eigenvalue, eigenfunction, eigenmeasure.

    log_psi and log_nu live on (k-1)-words and satisfy the normalization
    sum(nu) = 1, sum(nu * psi) = 1.  The residuals certify the invariants
    ||L psi - lambda psi||_inf / ||psi||_inf and ||nu L - lambda nu||_1
    for exactly the returned vectors.
    """

    log_lambda: float
    log_psi: np.ndarray
    log_nu: np.ndarray
    residual_psi: float
    residual_nu: float
    iterations: int

    @property
    def psi(self) -> np.ndarray:
        return np.exp(self.log_psi)

    @property
    def nu(self) -> np.ndarray:
        return np.exp(self.log_nu)


def _lse(a: np.ndarray) -> float:
    m = float(np.max(a))
    return m + math.log(float(np.sum(np.exp(a - m))))


def _lse_axis(mat: np.ndarray, axis: int) -> np.ndarray:
    m = np.max(mat, axis=axis)
    return m + np.log(np.sum(np.exp(mat - np.expand_dims(m, axis)), axis=axis))


MAX_POWER_ITERATIONS = 100000


def perron(
    matrix: TransferMatrix,
    tol: float = 1e-12,
    warm: Optional[Tuple[np.ndarray, np.ndarray]] = None,
) -> PerronTriple:
    """Shifted power iteration for the Perron triple, in the log domain.

    Both the operator and its adjoint are iterated with max/mass
    renormalization each step; convergence requires the eigenvalue
    estimate to settle to 1e-13 relative and both residuals to reach tol.
    The update applies L + lambda_hat*I rather than L itself: the shift
    keeps the Perron pair and its residuals unchanged but pushes any
    near-opposite subdominant eigenvalue toward 0, without which strongly
    off-diagonal weights (e.g. a steep antiferromagnetic tilt) stall the
    plain iteration arbitrarily close to its fixed point.  `warm` seeds
    the iteration with (log_psi, log_nu) from a nearby potential,
    typically cutting a scan's iteration count several-fold.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    d = matrix.config.alphabet_size
    k = matrix.depth
    D = matrix.dimension
    w_fwd = matrix.log_weights.reshape(d, D)    # [leading symbol a, suffix v]
    w_dual = matrix.log_weights.reshape(D, d)   # [prefix u, appended symbol b]
    idx = np.arange(d ** k, dtype=np.int64)
    pref = (idx // d).reshape(d, D)
    suff = (idx % D).reshape(D, d)

    if warm is not None:
        log_psi = np.array(warm[0], dtype=float)
        log_nu = np.array(warm[1], dtype=float)
        if log_psi.shape != (D,) or log_nu.shape != (D,):
            raise ValueError("warm-start vectors have the wrong dimension")
    else:
        log_psi = np.zeros(D)
        log_nu = np.zeros(D)
    log_psi = log_psi - np.max(log_psi)
    log_nu = log_nu - _lse(log_nu)

    prev_est = math.inf
    est = res_psi = res_nu = math.inf
    for iteration in range(1, MAX_POWER_ITERATIONS + 1):
        l_psi = _lse_axis(w_fwd + log_psi[pref], axis=0)  # operator on psi, per suffix
        nu_l = _lse_axis(w_dual + log_nu[suff], axis=1)   # adjoint on nu, per prefix
        est = _lse(nu_l)  # log_nu carries total mass 1
        res_psi = float(np.max(np.abs(np.exp(l_psi - est) - np.exp(log_psi))))
        res_nu = float(np.sum(np.abs(np.exp(nu_l - est) - np.exp(log_nu))))
        if abs(est - prev_est) <= 1e-13 * max(1.0, abs(est)) and res_psi <= tol and res_nu <= tol:
            break
        prev_est = est
        log_psi = np.logaddexp(l_psi, est + log_psi)
        log_psi -= np.max(log_psi)
        log_nu = np.logaddexp(nu_l, est + log_nu)
        log_nu -= _lse(log_nu)
    else:
        raise NonConvergenceError(
            "power iteration did not reach tol=%g in %d iterations "
            "(eigenfunction residual %.3e, eigenmeasure residual %.3e)"
            % (tol, MAX_POWER_ITERATIONS, res_psi, res_nu),
            residual=max(res_psi, res_nu),
        )

    # normalization: nu a probability, mean of psi against nu equal to 1
    log_nu = log_nu - _lse(log_nu)
    log_psi = log_psi - _lse(log_psi + log_nu)
    return PerronTriple(
        log_lambda=est,
        log_psi=log_psi,
        log_nu=log_nu,
        residual_psi=res_psi,
        residual_nu=res_nu,
        iterations=iteration,
    )


def pressure(potential: PotentialSpec, tol: float = 1e-12) -> float:
    """Topological pressure P(A) = log of the Perron eigenvalue."""
    return perron(build_transfer(potential), tol).log_lambda


def combine(f: Optional[PotentialSpec], A: PotentialSpec, t: float) -> PotentialSpec:
    """The potential f + t*A; f=None stands for the maximal-entropy base.

    With f=None the returned potential is just t*A: the conventional
    -log d base shifts every pressure by the same constant and is applied
    analytically where a formula wants it.
    """
    if f is None:
        return Affine(A, scale=t)
    return Affine(f, plus=(A, t))


def pressure_scan(
    f: Optional[PotentialSpec],
    A: PotentialSpec,
    t_grid: Sequence[float],
    tol: float = 1e-12,
) -> np.ndarray:
    """Raw pressures P(f + t A) along a grid, warm-starting each solve."""
    grid = np.asarray(t_grid, dtype=float)
    k = effective_depth(A)
    if f is not None:
        k = max(k, effective_depth(f))
    cfg = config_of(A)
    a_vals = to_tabulated(A, k).values
    f_vals = to_tabulated(f, k).values if f is not None else np.zeros_like(a_vals)
    out = np.empty(grid.size)
    warm = None
    for i, t in enumerate(grid):
        triple = perron(TransferMatrix(cfg, k, f_vals + t * a_vals), tol, warm=warm)
        warm = (triple.log_psi, triple.log_nu)
        out[i] = triple.log_lambda
    return out


def pressure_curve(
    f: Optional[PotentialSpec],
    A: PotentialSpec,
    t_grid: Sequence[float],
    tol: float = 1e-12,
) -> GridFunction:
    """The normalized pressure curve t -> P(f + t A) - P(f).

    When 0 sits on the grid the subtraction uses that very grid value, so
    the curve vanishes at 0 exactly, not just to solver tolerance.  With
    f=None this is the usual curve P(tA) - log d.
    """
    grid = np.asarray(t_grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2:
        raise ValueError("t_grid must hold at least 2 points")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("t_grid must be strictly increasing")
    raw = pressure_scan(f, A, grid, tol)
    at_zero = np.flatnonzero(grid == 0.0)
    if at_zero.size:
        base = raw[at_zero[0]]
    else:
        base = pressure(combine(f, A, 0.0), tol)
    return GridFunction(grid, raw - base, "convex")


# ---------------------------------------------------------------------------
# equilibrium measures
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EquilibriumDescriptor:
    """The equilibrium measure as a stationary chain on (k-1)-words.

    log_pi holds the stationary weights pi = psi*nu; log_Q the transition
    kernel of the symbol-prepending chain, log_Q[v, a] = log of the
    conditional probability that the cylinder continues with symbol a in
    front when its leading (k-1)-word is v.  Rows of exp(log_Q) sum to 1.
    """

    config: ShiftConfig
    depth: int
    log_lambda: float
    log_psi: np.ndarray
    log_nu: np.ndarray
    log_pi: np.ndarray
    log_Q: np.ndarray  # shape (D, d)

    @property
    def pi(self) -> np.ndarray:
        return np.exp(self.log_pi)

    @property
    def nu(self) -> np.ndarray:
        return np.exp(self.log_nu)


def equilibrium_from_triple(matrix: TransferMatrix, triple: PerronTriple) -> EquilibriumDescriptor:
    d = matrix.config.alphabet_size
    D = matrix.dimension
    idx = np.arange(d ** matrix.depth, dtype=np.int64)
    pref = (idx // d).reshape(d, D)
    w_fwd = matrix.log_weights.reshape(d, D)
    # prepend chain: from suffix v, put symbol a in front, land on prefix(a.v)
    log_q = w_fwd + triple.log_psi[pref] - triple.log_lambda - triple.log_psi[None, :]
    # remove the eigen-residual so every row is exactly stochastic
    log_q = log_q - _lse_axis(log_q, axis=0)[None, :]
    return EquilibriumDescriptor(
        config=matrix.config,
        depth=matrix.depth,
        log_lambda=triple.log_lambda,
        log_psi=triple.log_psi,
        log_nu=triple.log_nu,
        log_pi=triple.log_psi + triple.log_nu,
        log_Q=log_q.T.copy(),
    )


def equilibrium(
    potential: PotentialSpec,
    tol: float = 1e-12,
    warm: Optional[Tuple[np.ndarray, np.ndarray]] = None,
) -> EquilibriumDescriptor:
    """Equilibrium measure of a potential via its Perron triple."""
    matrix = build_transfer(potential)
    return equilibrium_from_triple(matrix, perron(matrix, tol, warm=warm))


def cylinder_marginals(eq: EquilibriumDescriptor, depth: int) -> np.ndarray:
    """Probabilities of all depth-m cylinders, in word-index order.

    Depths at most k-1 marginalize the stationary weights; deeper ones
    extend them with the prepending chain one symbol at a time.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1, got %d" % depth)
    d = eq.config.alphabet_size
    base = eq.depth - 1
    from .kernels import CAPACITY_LIMIT, CapacityError

    if d ** depth > CAPACITY_LIMIT:
        raise CapacityError(
            "depth-%d marginals need %d cells, above the %d-cell cap"
            % (depth, d ** depth, CAPACITY_LIMIT)
        )
    if depth <= base:
        probs = np.exp(eq.log_pi)
        return probs.reshape(d ** depth, d ** (base - depth)).sum(axis=1)
    log_p = eq.log_pi
    for j in range(base, depth):
        lead = np.arange(d ** j, dtype=np.int64) // d ** (j - base)
        log_p = np.concatenate([log_p + eq.log_Q[lead, a] for a in range(d)])
    return np.exp(log_p)


def expectation(eq: EquilibriumDescriptor, B: PotentialSpec) -> float:
    """Mean of a potential under the equilibrium measure."""
    if config_of(B).alphabet_size != eq.config.alphabet_size:
        raise ValueError("alphabet mismatch between measure and potential")
    tab = to_tabulated(B, effective_depth(B))
    return float(np.sum(cylinder_marginals(eq, tab.depth) * tab.values))


def entropy(potential: PotentialSpec, tol: float = 1e-12) -> float:
    """Kolmogorov-Sinai entropy of the equilibrium: P(A) - mu_A(A)."""
    eq = equilibrium(potential, tol)
    return eq.log_lambda - expectation(eq, potential)


def _expectation_at(f, A, a_spec, s, tol, warm):
    matrix = build_transfer(combine(f, A, s))
    triple = perron(matrix, tol, warm=warm)
    eq = equilibrium_from_triple(matrix, triple)
    return expectation(eq, a_spec), (triple.log_psi, triple.log_nu)


def pressure_second_derivative(
    f: Optional[PotentialSpec],
    A: PotentialSpec,
    t: float,
    step: float = 1e-4,
    tol: float = 1e-12,
) -> float:
    """d^2/dt^2 P(f + tA): Richardson-extrapolated difference of t -> mu(A).

    The first derivative of the pressure in t is the equilibrium mean of
    A, so one central difference of that mean gives the second derivative;
    Richardson extrapolation over steps h and h/2 removes the h^2 term.
    Values in (-1e-10, 0) are rounded up to 0, honoring convexity.
    """
    h = step
    warm = None
    vals = []
    for s in (t - h, t - h / 2, t + h / 2, t + h):
        v, warm = _expectation_at(f, A, A, s, tol, warm)
        vals.append(v)
    d_h = (vals[3] - vals[0]) / (2 * h)
    d_h2 = (vals[2] - vals[1]) / h
    out = (4.0 * d_h2 - d_h) / 3.0
    if -1e-10 < out < 0.0:
        return 0.0
    return out


def degenerate_direction(A: PotentialSpec, tol: float = 1e-12) -> bool:
    """Whether A behaves as a constant for every invariant measure.

    Checks that the maximal and minimal mean-cycle values coincide, which
    on a full shift happens exactly when A is a coboundary plus a
    constant; then P(f + tA) is affine in t and phase-transition questions
    are void.  This exact graph test replaces a curvature probe, whose
    finite-difference noise floor sits above a meaningful threshold.
    """
    hi = ergodic_max(A)
    lo = -ergodic_max(negate(A))
    return hi - lo <= tol * max(1.0, abs(hi), abs(lo))
