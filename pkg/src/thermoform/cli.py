"""Command-line front end emitting CSV curves, figure data and self-checks.

Every subcommand reads an optional TOML experiment description
(``--config``) and writes exactly one CSV table to ``--out`` (standard
output by default).  Solver summaries go to standard error so the CSV
stream stays machine-readable.  Exit codes: 0 on success, 1 for
configuration or validation problems, 2 when an iterative solve fails
to converge.

Cells are written with ``repr`` so equal floats produce equal bytes;
+inf is emitted as the literal ``inf`` and NaN is refused outright.
"""

import argparse
import itertools
import math
import sys
from typing import Dict, List, Optional, Sequence, TextIO, Tuple

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .bogoliubov import QuadraticConvex, SolveReport, nonlinear_pressure_convex
from .legendre import rate_function, tilted_rate
from .meanfield import (
    cylinder_indicator,
    cylinder_mass,
    enumerate_M_n,
    enumerate_m_n,
    laplace_mixture,
    mixture_cylinder_mass,
)
from .models import go_potential
from .shift import (
    SPINS,
    Product,
    ShiftConfig,
    Tabulated,
    config_of,
    effective_depth,
    ergodic_max,
    negate,
    sup_norm,
    word_index,
)
from .transfer import (
    NonConvergenceError,
    build_transfer,
    combine,
    cylinder_marginals,
    equilibrium,
    equilibrium_from_triple,
    expectation,
    perron,
    pressure,
    pressure_curve,
    pressure_scan,
    pressure_second_derivative,
)

LOG2 = math.log(2.0)
FIGURE_IDS = (1, 2, 3, 4, 21)
FIGURE_U = {1: 1.0, 2: 1.2, 3: 0.8}       # interaction sums behind figures 1-3
FIGURE4_BETA = 0.6                         # quadratic weight of the figure-4 curve
FIGURE21_BETA = (4.0 ** (1.0 / 3.0) + 0.2) / 2.0
FIGURE21_DEPTH = 8
MARGINAL_CELL_CAP = 4096                   # largest d**depth a marginal column set may need


class ConfigError(ValueError):
    """A config file, option or derived grid that fails validation."""


# ---------------------------------------------------------------------------
# config loading
# ---------------------------------------------------------------------------


def _load_toml(path: Optional[str]) -> Dict:
    if path is None:
        return {}
    try:
        with open(path, "rb") as handle:
            return tomllib.load(handle)
    except OSError as exc:
        raise ConfigError("cannot read config %s: %s" % (path, exc))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("malformed TOML in %s: %s" % (path, exc))


def _build_potential(section: Dict, where: str):
    """Potential from a [potential]/[f] table; None for the maxent base."""
    if not isinstance(section, dict):
        raise ConfigError("[%s] must be a table" % where)
    kind = section.get("kind", "product")
    if kind == "maxent":
        return None
    if kind == "go":
        return go_potential()
    if kind == "product":
        coupling = float(section.get("J", 2.0))
        field = float(section.get("h", 0.0))
        if "coefficients" in section:
            raw = section["coefficients"]
            if not isinstance(raw, list) or not raw:
                raise ConfigError("%s.coefficients must be a non-empty list" % where)
            coeffs = tuple(float(a) for a in raw)
        elif "geometric_sum" in section:
            depth = section.get("depth")
            if depth is None:
                raise ConfigError("%s: geometric_sum needs a depth" % where)
            depth = int(depth)
            if depth < 1:
                raise ConfigError("%s.depth must be >= 1, got %d" % (where, depth))
            total = float(section["geometric_sum"])
            weights = np.array([2.0 ** -(j + 1) for j in range(depth)])
            # scale so the interaction sum (J/2) * sum(coeffs) equals the request
            coeffs = tuple(total * weights / (0.5 * coupling * weights.sum()))
        else:
            raise ConfigError(
                "%s: product potential needs coefficients or geometric_sum" % where
            )
        return Product(SPINS, coupling, field, coeffs)
    if kind == "table":
        block = section.get("table")
        if not isinstance(block, dict):
            raise ConfigError("%s: table potential needs a [%s.table] block" % (where, where))
        depth = int(block.get("depth", 0))
        alphabet = int(block.get("alphabet", 2))
        values = block.get("values")
        if depth < 1 or alphabet < 2 or not isinstance(values, list):
            raise ConfigError("%s.table needs depth >= 1, alphabet >= 2 and values" % where)
        arr = np.array([float(v) for v in values])
        if arr.size != alphabet ** depth:
            raise ConfigError(
                "%s.table: expected %d values for alphabet %d depth %d, got %d"
                % (where, alphabet ** depth, alphabet, depth, arr.size)
            )
        config = SPINS if alphabet == 2 else ShiftConfig(alphabet)
        return Tabulated(config, depth, arr)
    raise ConfigError("%s.kind must be product, table, go or maxent, got %r" % (where, kind))


def _direction(cfg: Dict):
    potential = _build_potential(cfg.get("potential", {}), "potential")
    if potential is None:
        raise ConfigError("potential: kind maxent is only meaningful for [f]")
    return potential


def _reference(cfg: Dict):
    if "f" not in cfg:
        return None
    return _build_potential(cfg["f"], "f")


def _beta(cfg: Dict) -> float:
    beta = float(cfg.get("model", {}).get("beta", 1.0))
    if not beta > 0:
        raise ConfigError("model.beta must be positive, got %g" % beta)
    return beta


def _tol(cfg: Dict) -> float:
    tol = float(cfg.get("model", {}).get("tol", 1e-12))
    if not 0 < tol < 1:
        raise ConfigError("model.tol must lie in (0, 1), got %g" % tol)
    return tol


def _grid(lo, hi, step, where: str) -> np.ndarray:
    lo, hi, step = float(lo), float(hi), float(step)
    if not (math.isfinite(lo) and math.isfinite(hi) and math.isfinite(step)):
        raise ConfigError("%s: bounds and step must be finite" % where)
    if step <= 0 or hi <= lo:
        raise ConfigError("%s: need max > min and step > 0" % where)
    count = int(math.floor((hi - lo) / step + 1e-9))
    grid = np.linspace(lo, lo + count * step, count + 1)
    # pin an almost-zero node to 0 exactly so curves normalize there
    grid[np.abs(grid) < 1e-12] = 0.0
    return grid


def _t_grid(cfg: Dict, lo: float, hi: float, step: float) -> np.ndarray:
    grids = cfg.get("grids", {})
    return _grid(
        grids.get("t_min", lo), grids.get("t_max", hi), grids.get("t_step", step), "grids.t"
    )


# ---------------------------------------------------------------------------
# CSV emission
# ---------------------------------------------------------------------------


def _cell(value) -> str:
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    number = float(value)
    if math.isnan(number):
        raise ValueError("refusing to emit NaN")
    if math.isinf(number):
        return "inf" if number > 0 else "-inf"
    return repr(number)


def write_csv(stream: TextIO, header: Sequence[str], rows) -> None:
    stream.write(",".join(header) + "\n")
    for row in rows:
        stream.write(",".join(_cell(cell) for cell in row) + "\n")


def _report_summary(stream: TextIO, report: SolveReport) -> None:
    stream.write("# critical points:\n")
    for point in report.critical_points:
        stream.write(
            "#   t=%r v=%r v''=%r residual=%r kind=%s\n"
            % (point.t, point.v_value, point.v_second, point.residual, point.kind)
        )
    stream.write(
        "# global optimizers: %s\n" % ", ".join(repr(p.t) for p in report.global_optimizers)
    )
    stream.write("# nonlinear pressure: %r\n" % report.nonlinear_pressure)
    stream.write("# phase transition: %s\n" % report.phase_transition)
    if report.suspected_ties:
        stream.write(
            "# suspected ties near: %s\n" % ", ".join(repr(p.t) for p in report.suspected_ties)
        )


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_pressure(cfg: Dict, out: TextIO) -> int:
    """Columns t, P(f + t*beta*A), the normalized curve and its log-d lift."""
    direction = _direction(cfg)
    reference = _reference(cfg)
    beta, tol = _beta(cfg), _tol(cfg)
    grid = _t_grid(cfg, -2.0, 2.0, 0.01)
    raw = pressure_scan(reference, direction, beta * grid, tol)
    at_zero = np.flatnonzero(grid == 0.0)
    base = raw[at_zero[0]] if at_zero.size else pressure(combine(reference, direction, 0.0), tol)
    chat = raw - base
    if at_zero.size:
        chat[at_zero[0]] = 0.0
    lifted = chat + math.log(config_of(direction).alphabet_size)
    write_csv(out, ("t", "pressure", "c_hat", "c"), zip(grid, raw, chat, lifted))
    return 0


def cmd_selfconsistency(cfg: Dict, out: TextIO) -> int:
    """Columns t, R(t) = mu_{f+beta*t*A}(A) and the identity; summary on stderr."""
    direction = _direction(cfg)
    reference = _reference(cfg)
    beta, tol = _beta(cfg), _tol(cfg)
    width = sup_norm(direction) + 1.0
    grid = _t_grid(cfg, -width, width, 2.0 * width / 400.0)
    rows = []
    warm = None
    for t in grid:
        t = float(t)
        matrix = build_transfer(combine(reference, direction, beta * t))
        triple = perron(matrix, tol, warm=warm)
        warm = (triple.log_psi, triple.log_nu)
        mean = expectation(equilibrium_from_triple(matrix, triple), direction)
        rows.append((t, mean, t))
    write_csv(out, ("t", "R", "identity"), rows)
    report = nonlinear_pressure_convex(QuadraticConvex(beta), direction, reference, tol)
    _report_summary(sys.stderr, report)
    return 0


def _tilt_of(cfg: Dict):
    """Optional nonlinearity F as a plain callable, or None when absent."""
    model = cfg.get("model", {})
    name = model.get("nonlinearity")
    if name is None:
        return None
    beta = _beta(cfg)
    if name == "quadratic_convex":
        return lambda x: 0.5 * beta * x * x
    if name == "quadratic_concave":
        return lambda x: -0.5 * beta * x * x
    raise ConfigError(
        "model.nonlinearity must be quadratic_convex or quadratic_concave, got %r" % (name,)
    )


def cmd_rate(cfg: Dict, out: TextIO) -> int:
    """Columns x, rate I(x) and, with a nonlinearity configured, the tilted rate."""
    direction = _direction(cfg)
    reference = _reference(cfg)
    tol = _tol(cfg)
    grid = _t_grid(cfg, -8.0, 8.0, 0.01)
    chat = pressure_curve(reference, direction, grid, tol)
    em_plus = ergodic_max(direction)
    em_minus = ergodic_max(negate(direction))
    rate = rate_function(chat, em_plus, em_minus)
    grids = cfg.get("grids", {})
    x_max = float(grids.get("x_max", 0.9 * em_plus))
    x_min = float(grids.get("x_min", -0.9 * em_minus))
    xs = _grid(x_min, x_max, grids.get("x_step", (x_max - x_min) / 200.0), "grids.x")
    values = [rate.evaluate(float(x)) for x in xs]
    tilt = _tilt_of(cfg)
    if tilt is None:
        write_csv(out, ("x", "rate"), zip(xs, values))
    else:
        tilted = tilted_rate(tilt, rate, x_grid=xs)
        write_csv(out, ("x", "rate", "tilted_rate"), zip(xs, values, tilted.values))
    return 0


def cmd_bogoliubov(cfg: Dict, out: TextIO) -> int:
    """Columns t, v(t) = -beta t^2/2 + P(f + beta t A) [- log d]; summary on stderr."""
    direction = _direction(cfg)
    reference = _reference(cfg)
    beta, tol = _beta(cfg), _tol(cfg)
    width = sup_norm(direction) + 1.0
    grid = _t_grid(cfg, -width, width, 2.0 * width / 400.0)
    offset = math.log(config_of(direction).alphabet_size) if reference is None else 0.0
    raw = pressure_scan(reference, direction, beta * grid, tol)
    rows = [
        (float(t), -0.5 * beta * float(t) ** 2 + float(p) - offset)
        for t, p in zip(grid, raw)
    ]
    write_csv(out, ("t", "v"), rows)
    report = nonlinear_pressure_convex(QuadraticConvex(beta), direction, reference, tol)
    _report_summary(sys.stderr, report)
    return 0


def _site_distribution(info, site: int) -> np.ndarray:
    """Probabilities of each label at coordinate ``site`` under an eigenmeasure."""
    config = info.config
    labels = config.symbol_labels
    masses = np.array(
        [cylinder_mass(info, word) for word in itertools.product(labels, repeat=site)]
    )
    return masses.reshape(-1, config.alphabet_size).sum(axis=0)


def cmd_mixture(cfg: Dict, out: TextIO) -> int:
    """One row per mixture component with weights, curvatures and site marginals."""
    direction = _direction(cfg)
    reference = _reference(cfg)
    beta, tol = _beta(cfg), _tol(cfg)
    config = config_of(direction)
    depth = int(cfg.get("output", {}).get("marginal_depth", effective_depth(direction)))
    if depth < 1:
        raise ConfigError("output.marginal_depth must be >= 1, got %d" % depth)
    if config.alphabet_size ** depth > MARGINAL_CELL_CAP:
        raise ConfigError(
            "output.marginal_depth %d needs %d cylinder masses, above the %d cap"
            % (depth, config.alphabet_size ** depth, MARGINAL_CELL_CAP)
        )
    mix = laplace_mixture(reference, direction, beta, tol)
    header = ["t", "weight", "log_lambda", "v_second"]
    for site in range(1, depth + 1):
        header.extend("p%d_%d" % (site, j) for j in range(config.alphabet_size))
    rows = []
    for comp in mix.components:
        row = [comp.t, comp.weight, comp.log_lambda, comp.v_second]
        for site in range(1, depth + 1):
            row.extend(_site_distribution(comp.eigenmeasure, site))
        rows.append(row)
    write_csv(out, header, rows)
    sys.stderr.write("# components: %d\n" % len(mix.components))
    sys.stderr.write("# v at max: %r\n" % mix.v_at_max)
    sys.stderr.write("# gibbs phase transition: %s\n" % mix.gibbs_phase_transition)
    return 0


def cmd_enumerate(cfg: Dict, out: TextIO) -> int:
    """Exact finite-n tilted averages next to their mixture predictions."""
    direction = _direction(cfg)
    reference = _reference(cfg)
    beta, tol = _beta(cfg), _tol(cfg)
    section = cfg.get("enumeration")
    if not isinstance(section, dict):
        raise ConfigError("an [enumeration] block is required")
    mode = section.get("mode", "m_n")
    if mode not in ("m_n", "M_n"):
        raise ConfigError("enumeration.mode must be m_n or M_n, got %r" % (mode,))
    if mode == "M_n" and reference is not None:
        raise ConfigError("enumeration mode M_n uses the maximal-entropy reference only")
    n_list = section.get("n_list")
    if not isinstance(n_list, list) or not n_list:
        raise ConfigError("enumeration.n_list must be a non-empty list")
    ns = sorted(int(n) for n in n_list)
    raw_psi = section.get("psi")
    if not isinstance(raw_psi, list) or not raw_psi:
        raise ConfigError("enumeration.psi must list the cylinder's symbols")
    config = config_of(direction)
    symbols = tuple(float(s) for s in raw_psi)
    psi = cylinder_indicator(config, symbols)
    mix = laplace_mixture(reference, direction, beta, tol)
    if mode == "m_n":
        prediction = mixture_cylinder_mass(mix, symbols)
    else:
        # the bulk limit mixes shift-invariant equilibrium masses instead
        prediction = 0.0
        index = word_index(config, symbols)
        for comp in mix.components:
            eq = equilibrium(combine(reference, direction, beta * comp.t), tol)
            prediction += comp.weight * float(cylinder_marginals(eq, len(symbols))[index])
    rows = []
    for n in ns:
        if mode == "m_n":
            est = enumerate_m_n(psi, n, beta, reference, direction, tol)
        else:
            est = enumerate_M_n(psi, n, beta, direction)
        rows.append((n, est.value, est.z, prediction, abs(est.value - prediction)))
    write_csv(out, ("n", mode, "z", "prediction", "gap"), rows)
    return 0


# ---------------------------------------------------------------------------
# figures
# ---------------------------------------------------------------------------


def figure_rows(fig_id: int, grids: Optional[Dict] = None, tol: float = 1e-12):
    """Header and rows behind ``figure --id N``; ``grids`` may override ranges."""
    g = dict(grids or {})
    if fig_id in FIGURE_U:
        u = FIGURE_U[fig_id]
        ts = _grid(g.get("t_min", -2.0), g.get("t_max", 2.0), g.get("t_step", 0.01), "grids.t")
        rows = [(float(t), u * math.tanh(u * float(t)), float(t)) for t in ts]
        return ("t", "R", "identity"), rows
    if fig_id == 4:
        beta = FIGURE4_BETA
        direction = go_potential()
        ts = _grid(g.get("t_min", -2.0), g.get("t_max", 4.0), g.get("t_step", 0.01), "grids.t")
        rows = []
        warm = None
        for t in ts:
            t = float(t)
            matrix = build_transfer(combine(None, direction, beta * t))
            triple = perron(matrix, tol, warm=warm)
            warm = (triple.log_psi, triple.log_nu)
            slope = beta * expectation(equilibrium_from_triple(matrix, triple), direction)
            phi = -0.5 * beta * t * t + triple.log_lambda - LOG2
            curvature = -beta + beta * beta * pressure_second_derivative(
                None, direction, beta * t, tol=tol
            )
            rows.append((t, beta * t, slope, phi, curvature))
        return ("t", "beta_t", "dP", "phi", "phi_second"), rows
    if fig_id == 21:
        direction = Product(
            SPINS, 2.0, 0.0, tuple(2.0 ** -(n + 1) for n in range(FIGURE21_DEPTH))
        )
        ts = _grid(g.get("t_min", -6.0), g.get("t_max", 6.0), g.get("t_step", 0.01), "grids.t")
        x_max = float(g.get("x_max", 0.98))
        x_min = float(g.get("x_min", -x_max))
        if x_min != -x_max or not x_max > 0:
            raise ConfigError("grids: figure 21 needs a symmetric x-range (x_min = -x_max < 0)")
        chat = pressure_curve(None, direction, ts, tol)
        rate = rate_function(chat, ergodic_max(direction), ergodic_max(negate(direction)))
        half = _grid(0.0, x_max, g.get("x_step", 0.005), "grids.x")
        tilted = tilted_rate(lambda y: FIGURE21_BETA * y * y, rate, x_grid=half)
        # mirror the computed half so the emitted curve is even bit for bit
        ys = np.concatenate([-half[:0:-1], half])
        values = np.concatenate([tilted.values[:0:-1], tilted.values])
        return ("y", "tilted_rate"), list(zip(ys, values))
    raise ConfigError("unknown figure id %r (valid: 1, 2, 3, 4, 21)" % (fig_id,))


def cmd_figure(cfg: Dict, out: TextIO, fig_id: int) -> int:
    header, rows = figure_rows(fig_id, cfg.get("grids"), _tol(cfg))
    write_csv(out, header, rows)
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    """argparse variant whose usage errors exit with the config-error status."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, "%s: error: %s\n" % (self.prog, message))


_HANDLERS = {
    "pressure": cmd_pressure,
    "selfconsistency": cmd_selfconsistency,
    "rate": cmd_rate,
    "bogoliubov": cmd_bogoliubov,
    "mixture": cmd_mixture,
    "enumerate": cmd_enumerate,
}

_HELP = {
    "pressure": "pressure along t with its normalized curve",
    "selfconsistency": "mean R(t) against the identity, with the variational summary",
    "rate": "large-deviation rate function, optionally tilted by a nonlinearity",
    "bogoliubov": "approximating pressure v(t) with the variational summary",
    "mixture": "mean-field mixture components and their site marginals",
    "enumerate": "exact finite-n tilted averages against mixture predictions",
    "figure": "data behind one of the reference figures (1, 2, 3, 4 or 21)",
    "check": "run the built-in acceptance checks and print one verdict per line",
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="thermoform", description=__doc__.splitlines()[0])
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name in ("pressure", "selfconsistency", "rate", "bogoliubov",
                 "mixture", "enumerate", "figure", "check"):
        sub = subparsers.add_parser(name, help=_HELP[name])
        if name == "check":
            continue
        sub.add_argument("--config", help="TOML experiment description")
        sub.add_argument("--out", help="output CSV path (default: standard output)")
        if name == "figure":
            sub.add_argument(
                "--id", type=int, required=True, choices=FIGURE_IDS, dest="fig_id",
                help="figure number",
            )
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "check":
        from .acceptance import run_all

        results = run_all(sys.stdout)
        return 0 if all(res.passed is not False for res in results) else 1
    try:
        cfg = _load_toml(args.config)
        if not isinstance(cfg, dict):
            raise ConfigError("config must be a TOML table")
        out = open(args.out, "w") if args.out else sys.stdout
        try:
            if args.command == "figure":
                return cmd_figure(cfg, out, args.fig_id)
            return _HANDLERS[args.command](cfg, out)
        finally:
            if args.out:
                out.close()
    except NonConvergenceError as exc:
        print("thermoform: solver did not converge: %s" % exc, file=sys.stderr)
        return 2
    except (ConfigError, ValueError, TypeError, KeyError, RuntimeError) as exc:
        print("thermoform: error: %s" % exc, file=sys.stderr)
        return 1
