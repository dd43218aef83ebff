"""Grid-based Legendre-Fenchel machinery for large deviations.

Convex conjugates of sampled functions, rate functions built from pressure
curves, Varadhan suprema, tilted rate functions, and exact finite-n
large-deviation masses by enumeration.  Sampled functions may carry +inf
markers; -inf never occurs.

Accuracy notes.  Conjugates are evaluated on the grid of achieved slopes
(central differences), where the defining supremum is attained at interior
points; every grid supremum is sharpened by a 3-point parabolic fit, which
is exact for quadratics and O(h^4) for smooth inputs.  Rate-function nodes
use the parametric form I(x_i) = t_i x_i - c(t_i) with x_i = c'(t_i), whose
error is O(h^4) even though the slopes themselves are only O(h^2).
"""

import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple, Union

import numpy as np

from .shift import PotentialSpec, effective_depth, to_tabulated

INF = float("inf")


@dataclass(frozen=True)
class GridFunction:
    """A function sampled on a strictly increasing grid, +inf allowed."""

    grid: np.ndarray
    values: np.ndarray
    convexity_flag: str = "unknown"  # "convex" | "concave" | "unknown"

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)
        if grid.ndim != 1 or values.shape != grid.shape:
            raise ValueError("grid and values must be 1-d arrays of equal length")
        if grid.size == 0:
            raise ValueError("empty grid")
        if not np.all(np.isfinite(grid)):
            raise ValueError("grid points must be finite")
        if np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        if np.any(np.isnan(values)) or np.any(values == -INF):
            raise ValueError("values must be real or +inf")
        if not np.any(np.isfinite(values)):
            raise ValueError("at least one finite value is required")
        if self.convexity_flag not in ("convex", "concave", "unknown"):
            raise ValueError("unknown convexity flag %r" % (self.convexity_flag,))


def finite_part(f: GridFunction) -> Tuple[np.ndarray, np.ndarray]:
    """The (x, value) pairs where f is finite."""
    mask = np.isfinite(f.values)
    return f.grid[mask], f.values[mask]


def convexity_defect(f: GridFunction) -> float:
    """Smallest increment of consecutive chord slopes; >= 0 means convex.

    A +inf marker strictly between finite samples breaks the interval
    domain a convex function must have and yields -inf.
    """
    mask = np.isfinite(f.values)
    idx = np.flatnonzero(mask)
    if idx.size != idx[-1] - idx[0] + 1:
        return -INF
    xs, vs = f.grid[mask], f.values[mask]
    if xs.size < 3:
        return 0.0
    slopes = np.diff(vs) / np.diff(xs)
    return float(np.min(np.diff(slopes)))


def is_convex(f: GridFunction, tol: float = 1e-9) -> bool:
    return convexity_defect(f) >= -tol


def is_concave(f: GridFunction, tol: float = 1e-9) -> bool:
    flipped = GridFunction(f.grid, np.where(np.isfinite(f.values), -f.values, INF))
    return convexity_defect(flipped) >= -tol


def refine_peak(xs, ys) -> Tuple[float, float]:
    """Vertex of the parabola through three bracketing points of a maximum.

    Falls back to the middle point when the fit is degenerate or would
    leave the bracket; never returns less than the middle value.
    """
    xa, xb, xc = float(xs[0]), float(xs[1]), float(xs[2])
    ga, gb, gc = float(ys[0]), float(ys[1]), float(ys[2])
    denom = (xb - xa) * (gb - gc) - (xb - xc) * (gb - ga)
    if not (math.isfinite(ga) and math.isfinite(gc)) or denom <= 0.0:
        return xb, gb
    xstar = xb - 0.5 * ((xb - xa) ** 2 * (gb - gc) - (xb - xc) ** 2 * (gb - ga)) / denom
    if not xa < xstar < xc:
        return xb, gb
    # value of the same parabola at its vertex (Lagrange form)
    la = (xstar - xb) * (xstar - xc) / ((xa - xb) * (xa - xc))
    lb = (xstar - xa) * (xstar - xc) / ((xb - xa) * (xb - xc))
    lc = (xstar - xa) * (xstar - xb) / ((xc - xa) * (xc - xb))
    gstar = la * ga + lb * gb + lc * gc
    if gstar < gb:
        return xb, gb
    return xstar, gstar


def _central_slopes(xs: np.ndarray, vs: np.ndarray) -> np.ndarray:
    slopes = np.empty_like(vs)
    slopes[1:-1] = (vs[2:] - vs[:-2]) / (xs[2:] - xs[:-2])
    slopes[0] = (vs[1] - vs[0]) / (xs[1] - xs[0])
    slopes[-1] = (vs[-1] - vs[-2]) / (xs[-1] - xs[-2])
    return slopes


def _dedup_increasing(nodes: np.ndarray, tol: float = 1e-13):
    """Indices of a strictly increasing subsequence, duplicates dropped."""
    keep = [0]
    for i in range(1, nodes.size):
        if nodes[i] - nodes[keep[-1]] > tol * max(1.0, abs(nodes[i])):
            keep.append(i)
    return np.asarray(keep, dtype=np.int64)


def _sup_with_refinement(s: float, xs: np.ndarray, vs: np.ndarray) -> float:
    g = s * xs - vs
    j = int(np.argmax(g))
    if 0 < j < g.size - 1:
        return refine_peak(xs[j - 1: j + 2], g[j - 1: j + 2])[1]
    return float(g[j])


def legendre_transform(f: GridFunction) -> GridFunction:
    """Convex conjugate F*(s) = sup_x (s x - F(x)) of a sampled function.

    The conjugate is reported on the grid of achieved slopes of f (where
    the supremum is attained at interior sample points), with one +inf
    marker appended beyond each end: outside the closed slope range the
    supremum over the underlying unbounded domain is +inf.  Nonconvex
    input is accepted and yields the conjugate of its convex hull, as the
    supremum formula is insensitive to non-convexity.
    """
    xs, vs = finite_part(f)
    if xs.size < 3:
        raise ValueError("legendre_transform needs at least 3 finite values, got %d" % xs.size)
    raw = np.sort(_central_slopes(xs, vs))
    nodes = raw[_dedup_increasing(raw)]
    if nodes.size < 3:
        # essentially linear input: conjugate concentrated near one slope
        center = 0.5 * (raw[0] + raw[-1])
        delta = max(raw[-1] - raw[0], 1e-9 * max(1.0, abs(center)), 1e-12)
        nodes = np.array([center - delta, center, center + delta])
    conj = np.array([_sup_with_refinement(s, xs, vs) for s in nodes])
    pad = max(
        (nodes[-1] - nodes[0]) / (nodes.size - 1),
        1e-9 * max(1.0, abs(nodes[0]), abs(nodes[-1])),
        1e-12,
    )
    out_grid = np.concatenate(([nodes[0] - pad], nodes, [nodes[-1] + pad]))
    out_vals = np.concatenate(([INF], conj, [INF]))
    return GridFunction(out_grid, out_vals, "convex")


def grid_interpolate(f: GridFunction, x: float) -> float:
    """Local quadratic interpolation (exact for quadratics); +inf outside."""
    grid, values = f.grid, f.values
    if x < grid[0] or x > grid[-1]:
        return INF
    j = int(np.searchsorted(grid, x))
    if j < grid.size and grid[j] == x:
        return float(values[j])
    lo, hi = j - 1, j  # bracketing pair
    if not (np.isfinite(values[lo]) and np.isfinite(values[hi])):
        return INF
    # third point: prefer the finite neighbor closer to x
    candidates = []
    if lo - 1 >= 0 and np.isfinite(values[lo - 1]):
        candidates.append(lo - 1)
    if hi + 1 < grid.size and np.isfinite(values[hi + 1]):
        candidates.append(hi + 1)
    if not candidates:
        # linear fallback on the bracketing pair
        w = (x - grid[lo]) / (grid[hi] - grid[lo])
        return float((1 - w) * values[lo] + w * values[hi])
    third = min(candidates, key=lambda i: abs(grid[i] - x))
    ids = sorted([lo, hi, third])
    xa, xb, xc = grid[ids[0]], grid[ids[1]], grid[ids[2]]
    ya, yb, yc = values[ids[0]], values[ids[1]], values[ids[2]]
    la = (x - xb) * (x - xc) / ((xa - xb) * (xa - xc))
    lb = (x - xa) * (x - xc) / ((xb - xa) * (xb - xc))
    lc = (x - xa) * (x - xb) / ((xc - xa) * (xc - xb))
    return float(la * ya + lb * yb + lc * yc)


def _tilt_eval(F, x: float) -> float:
    """Evaluate a tilt given as a callable or a GridFunction."""
    if isinstance(F, GridFunction):
        return grid_interpolate(F, x)
    return float(F(x))


def _golden_max(fn: Callable[[float], float], a: float, b: float,
                iters: int = 60) -> Tuple[float, float]:
    """Golden-section maximization on [a, b] for a unimodal objective."""
    gr = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = b - gr * (b - a)
    x2 = a + gr * (b - a)
    f1, f2 = fn(x1), fn(x2)
    for _ in range(iters):
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + gr * (b - a)
            f2 = fn(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - gr * (b - a)
            f1 = fn(x1)
    return (x1, f1) if f1 >= f2 else (x2, f2)


@dataclass(frozen=True)
class RateFunction:
    """A large-deviation rate function sampled at slope nodes.

    grid/values hold the nodes; domain is the open interval where the
    rate is finite (+inf outside).  dual_params stores the parameter t
    behind each node x = c'(t) when the function came from a pressure
    curve; source_grid/source_values keep that curve so evaluate() can
    run the defining supremum off-grid.  degenerate_point marks the
    collapsed case where the domain is a single point.
    """

    grid: np.ndarray
    values: np.ndarray
    domain: Tuple[float, float]
    dual_params: Optional[np.ndarray] = None
    source_grid: Optional[np.ndarray] = None
    source_values: Optional[np.ndarray] = None
    degenerate_point: Optional[float] = None
    zeros: Optional[Tuple[float, ...]] = None
    shift_constant: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "grid", np.asarray(self.grid, dtype=float))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))

    def as_grid_function(self) -> GridFunction:
        return GridFunction(self.grid, self.values, "convex")

    def evaluate(self, x: float) -> float:
        """Rate at x: +inf outside the open domain, 0 clamped from below."""
        x = float(x)
        if self.degenerate_point is not None:
            x0 = self.degenerate_point
            return 0.0 if abs(x - x0) <= 1e-12 * max(1.0, abs(x0)) else INF
        lo, hi = self.domain
        if not lo < x < hi:
            return INF
        if self.source_grid is not None:
            ts, cs = self.source_grid, self.source_values
            g = x * ts - cs
            j = int(np.argmax(g))
            if 0 < j < g.size - 1:
                val = refine_peak(ts[j - 1: j + 2], g[j - 1: j + 2])[1]
            else:
                val = float(g[j])
        else:
            val = grid_interpolate(self.as_grid_function(), x)
        if -1e-12 <= val < 0.0:
            return 0.0
        return val


def rate_function(chat: GridFunction, em_plus: float, em_minus: float) -> RateFunction:
    """Rate function I(x) = sup_t (t x - chat(t)) from a pressure curve.

    chat must be convex with chat(0) = 0; em_plus and em_minus are the
    ergodic maxima of A and -A, so the open domain is (-em_minus, em_plus)
    -- the range of achievable Birkhoff averages, which a finite t-grid
    always under-covers.
    """
    defect = convexity_defect(chat)
    if defect < -1e-9:
        raise ValueError(
            "pressure curve is not convex (slope increment %g); rate function undefined"
            % defect
        )
    lo, hi = -float(em_minus), float(em_plus)
    if hi - lo <= 1e-12 * max(1.0, abs(hi), abs(lo)):
        x0 = 0.5 * (lo + hi)
        return RateFunction(
            grid=np.array([x0]),
            values=np.array([0.0]),
            domain=(x0, x0),
            degenerate_point=x0,
        )
    ts, cs = finite_part(chat)
    if ts.size < 3:
        raise ValueError("pressure curve needs at least 3 finite values")
    slopes = _central_slopes(ts, cs)
    keep = _dedup_increasing(slopes)
    xs = slopes[keep]
    duals = ts[keep]
    vals = duals * xs - cs[keep]
    vals = np.where((vals < 0.0) & (vals >= -1e-12), 0.0, vals)
    return RateFunction(
        grid=xs,
        values=vals,
        domain=(lo, hi),
        dual_params=duals,
        source_grid=ts,
        source_values=cs,
    )


def varadhan_value(F, I: RateFunction) -> float:
    """sup_x (F(x) - I(x)), scanned over the rate function's nodes and refined.

    F may be a callable or a GridFunction (quadratic interpolation).  The
    grid argmax is polished by a golden-section search between the two
    neighboring nodes; the rate function is evaluated through its defining
    supremum there, so the refinement is not limited by node spacing.
    """
    if I.degenerate_point is not None:
        val = _tilt_eval(F, I.degenerate_point)
        if not math.isfinite(val):
            raise ValueError("tilt is not finite at the degenerate domain point")
        return val
    tilts = np.array([_tilt_eval(F, x) for x in I.grid])
    finite = np.isfinite(tilts) & np.isfinite(I.values)
    if not np.any(finite):
        raise ValueError("tilt and rate function have no overlapping finite nodes")
    masked = np.where(finite, tilts - I.values, -INF)
    j = int(np.argmax(masked))
    best = float(masked[j])
    if 0 < j < masked.size - 1:

        def objective(x: float) -> float:
            rate = I.evaluate(x)
            if not math.isfinite(rate):
                return -INF
            tilt = _tilt_eval(F, x)
            if not math.isfinite(tilt):
                return -INF
            return tilt - rate

        best = max(best, _golden_max(objective, float(I.grid[j - 1]), float(I.grid[j + 1]))[1])
    return best


def zero_set(grid: np.ndarray, values: np.ndarray, tol: float = 1e-9) -> Tuple[float, ...]:
    """Locations where a nonnegative sampled function vanishes.

    Consecutive sub-tol values form one cluster, reported at the cluster's
    minimizing grid point.
    """
    zeros = []
    in_cluster = False
    best_i = -1
    for i, v in enumerate(values):
        if v <= tol:
            if not in_cluster or v < values[best_i]:
                best_i = i
            in_cluster = True
        elif in_cluster:
            zeros.append(float(grid[best_i]))
            in_cluster = False
    if in_cluster:
        zeros.append(float(grid[best_i]))
    return tuple(zeros)


def tilted_rate(F, I: RateFunction, x_grid=None) -> RateFunction:
    """Tilted rate I(x) - F(x) - inf(I - F), sampled with minimum exactly 0."""
    if I.degenerate_point is not None:
        x0 = I.degenerate_point
        return RateFunction(
            grid=np.array([x0]),
            values=np.array([0.0]),
            domain=I.domain,
            degenerate_point=x0,
            zeros=(x0,),
            shift_constant=-_tilt_eval(F, x0),
        )
    xs = np.asarray(I.grid if x_grid is None else x_grid, dtype=float)
    raw = np.empty(xs.size)
    for i, x in enumerate(xs):
        rate = I.evaluate(x) if x_grid is not None else float(I.values[i])
        if math.isfinite(rate):
            tilt = _tilt_eval(F, x)
            if not math.isfinite(tilt):
                raise ValueError("tilt must be finite on the rate function's domain (x=%g)" % x)
            raw[i] = rate - tilt
        else:
            raw[i] = INF
    finite = np.isfinite(raw)
    if not np.any(finite):
        raise ValueError("tilted rate has no finite samples on the given grid")
    shift = float(np.min(raw[finite]))
    values = np.where(finite, raw - shift, INF)
    return RateFunction(
        grid=xs,
        values=values,
        domain=I.domain,
        zeros=zero_set(xs, values),
        shift_constant=shift,
    )


@dataclass(frozen=True)
class EmpiricalLD:
    """Exact finite-n Birkhoff-average deviation mass under fair coin flips."""

    n: int
    interval: Tuple[float, float]
    mass: float
    log_rate: float          # (1/n) log mass; -inf when the mass vanishes
    count: int               # matching configurations
    configurations: int      # d^(n+K-1) total


def empirical_ld(potential: PotentialSpec, n: int, interval) -> EmpiricalLD:
    """Mass of {A_n in [lo, hi]} under the maximal entropy measure, exactly.

    Enumerates all d^(n+K-1) length-(n+K-1) words with uniform weights and
    counts those whose n-term Birkhoff average lies in the closed interval.
    """
    lo, hi = float(interval[0]), float(interval[1])
    if not lo <= hi:
        raise ValueError("interval must satisfy lo <= hi, got (%g, %g)" % (lo, hi))
    if n < 1:
        raise ValueError("n must be >= 1, got %d" % n)
    tab = to_tabulated(potential, effective_depth(potential))
    from .kernels import count_in_range

    count, total = count_in_range(
        tab.values, tab.config.alphabet_size, tab.depth, n, n * lo, n * hi
    )
    mass = count / total
    log_rate = (math.log(mass) / n) if count else -INF
    return EmpiricalLD(
        n=n,
        interval=(lo, hi),
        mass=mass,
        log_rate=log_rate,
        count=count,
        configurations=total,
    )
