"""Tests for the variational solver and its dual cross-checks."""

import math

import numpy as np
import pytest

from thermoform.bogoliubov import (
    ConcaveGrid,
    ConvexGrid,
    QuadraticConcave,
    QuadraticConvex,
    approximating_pressure,
    cross_check_varadhan,
    equilibrium_for_optimizer,
    nonlinear_pressure_concave,
    nonlinear_pressure_convex,
    solve_self_consistency,
)
from thermoform.legendre import GridFunction
from thermoform.models import go_potential, go_pressure
from thermoform.shift import SPINS, Product, Tabulated
from thermoform.transfer import (
    DegeneratePotentialError,
    combine,
    cylinder_marginals,
    pressure,
)

# root of 1.2*tanh(1.2*t) = t on (0, 1.2], bisected at 50-digit precision
T0 = 1.0006871269888094
# -T0^2/2 + log(cosh(1.2*T0)), same precision
V_AT_T0 = 0.09368910407123937
# tanh(1.2*T0): first-coordinate mean of the optimizing measure
M_STAR = 0.8339059391573411

# critical points of -0.3*t^2 + P(0.6*t*A) - log 2 for the four-cylinder
# model below, located by 50-digit golden-section/Newton refinement
GO_T1 = -1.247428390710102
GO_TMIN = -0.230996841475920
GO_T2 = 2.999999142156353
GO_V_AT_T1 = 0.0543688468
GO_V2 = (-0.34344342, 0.47375818, -0.59999720)


def product_potential(u: float, depth: int = 1) -> Product:
    if depth == 1:
        coeffs = (u,)
    else:
        # halving split whose partial sums stay exact in binary
        coeffs = tuple(u / 2 ** min(n + 1, depth - 1) for n in range(depth))
        assert math.fsum(coeffs) == u
    return Product(SPINS, 2.0, 0.0, coeffs)


class TestApproximatingPressure:
    def test_zero_t_vanishes(self):
        a = product_potential(1.2)
        assert abs(approximating_pressure(None, a, 1.0, 0.0)) <= 1e-12

    def test_product_closed_form(self):
        a = product_potential(1.2)
        for t in (-1.5, -0.3, 0.4, 1.0, 2.2):
            want = -0.5 * t * t + math.log(math.cosh(1.2 * t))
            got = approximating_pressure(None, a, 1.0, t)
            assert abs(got - want) <= 1e-10

    def test_go_closed_form(self):
        a = go_potential()
        for t in (-2.0, -1.0, 0.5, 3.0):
            want = -0.3 * t * t + go_pressure(t, 0.6) - math.log(2.0)
            got = approximating_pressure(None, a, 0.6, t)
            assert abs(got - want) <= 1e-10

    def test_explicit_base_measure_matches_maxent(self):
        a = product_potential(1.2)
        f = Tabulated(SPINS, 1, np.full(2, -math.log(2.0)))
        for t in (-0.7, 0.0, 1.3):
            assert abs(approximating_pressure(f, a, 1.0, t)
                       - approximating_pressure(None, a, 1.0, t)) <= 1e-12

    def test_beta_validation(self):
        a = product_potential(1.0)
        with pytest.raises(ValueError):
            approximating_pressure(None, a, 0.0, 1.0)
        with pytest.raises(ValueError):
            QuadraticConvex(-1.0)
        with pytest.raises(ValueError):
            QuadraticConcave(0.0)


class TestSolveSelfConsistency:
    def test_single_root_u_one(self):
        points = solve_self_consistency(None, product_potential(1.0), 1.0)
        assert len(points) == 1
        assert abs(points[0].t) <= 1e-9
        # borderline coupling: v''(0) = -1 + 1 = 0
        assert abs(points[0].v_second) <= 1e-8

    def test_single_root_u_small(self):
        points = solve_self_consistency(None, product_potential(0.8), 1.0)
        assert len(points) == 1
        assert abs(points[0].t) <= 1e-9
        assert points[0].kind == "local_max"
        assert abs(points[0].v_second - (-1.0 + 0.64)) <= 1e-6

    def test_three_roots_u_large(self):
        points = solve_self_consistency(None, product_potential(1.2), 1.0)
        assert len(points) == 3
        ts = [p.t for p in points]
        assert abs(ts[1]) <= 1e-10
        assert abs(ts[2] - T0) <= 1e-10
        assert abs(ts[0] + ts[2]) <= 1e-12   # S0 = -S0
        assert [p.kind for p in points] == ["local_max", "local_min", "local_max"]
        assert all(p.residual <= 1e-10 for p in points)
        assert abs(points[2].v_value - V_AT_T0) <= 1e-10
        assert abs(points[0].v_value - points[2].v_value) <= 1e-11

    def test_truncation_depth_leaves_roots_alone(self):
        # the depth-4 halving split keeps the interaction sum at 1.2, and
        # the equilibrium mean depends on the coefficients only through it
        points = solve_self_consistency(None, product_potential(1.2, depth=4), 1.0)
        assert len(points) == 3
        for got, want in zip((p.t for p in points), (-T0, 0.0, T0)):
            assert abs(got - want) <= 1e-9

    def test_go_critical_points(self):
        points = solve_self_consistency(None, go_potential(), 0.6)
        assert len(points) == 3
        for p, want in zip(points, (GO_T1, GO_TMIN, GO_T2)):
            assert abs(p.t - want) <= 1e-9
        assert [p.kind for p in points] == ["local_max", "local_min", "local_max"]
        assert abs(points[0].v_value - GO_V_AT_T1) <= 1e-8
        assert points[0].v_value < points[2].v_value
        for p, want in zip(points, GO_V2):
            assert abs(p.v_second - want) <= 1e-5
        assert all(p.residual <= 1e-10 for p in points)

    def test_degenerate_direction_refused(self):
        constant = Tabulated(SPINS, 1, np.array([0.7, 0.7]))
        with pytest.raises(DegeneratePotentialError):
            solve_self_consistency(None, constant, 1.0)
        b = np.array([0.4, -1.1])
        coboundary = Tabulated(
            SPINS, 2, np.array([b[e % 2] - b[e // 2] + 0.31 for e in range(4)]))
        with pytest.raises(DegeneratePotentialError):
            solve_self_consistency(None, coboundary, 0.5)

    def test_beta_validation(self):
        with pytest.raises(ValueError):
            solve_self_consistency(None, product_potential(1.0), -2.0)


class TestConvexQuadratic:
    def test_transition_above_threshold(self):
        report = nonlinear_pressure_convex(QuadraticConvex(1.0), product_potential(1.2))
        assert report.phase_transition
        assert len(report.global_optimizers) == 2
        assert len(report.critical_points) == 3
        assert not report.suspected_ties
        ts = sorted(p.t for p in report.global_optimizers)
        assert abs(ts[0] + T0) <= 1e-10 and abs(ts[1] - T0) <= 1e-10
        assert abs(report.nonlinear_pressure - V_AT_T0) <= 1e-10
        for i, sign in enumerate(np.sign(p.t) for p in report.global_optimizers):
            eq = equilibrium_for_optimizer(report, i)
            marg = cylinder_marginals(eq, 1)
            assert abs((marg[1] - marg[0]) - sign * M_STAR) <= 1e-9

    def test_unique_below_threshold(self):
        report = nonlinear_pressure_convex(QuadraticConvex(1.0), product_potential(0.8))
        assert not report.phase_transition
        assert len(report.global_optimizers) == 1
        assert abs(report.global_optimizers[0].t) <= 1e-9
        assert abs(report.nonlinear_pressure) <= 1e-12
        marg = cylinder_marginals(report.equilibria[0], 1)
        assert abs(marg[0] - 0.5) <= 1e-10

    def test_transition_flag_monotone_in_beta(self):
        a = product_potential(1.2)  # threshold at beta = 1/1.44
        flags = [nonlinear_pressure_convex(QuadraticConvex(b), a).phase_transition
                 for b in (0.5, 0.69, 0.72, 1.0, 1.5)]
        assert flags == [False, False, True, True, True]

    def test_value_dominates_dense_curve(self):
        a = product_potential(1.2)
        report = nonlinear_pressure_convex(QuadraticConvex(1.0), a)
        dense = max(approximating_pressure(None, a, 1.0, t)
                    for t in np.linspace(-2.2, 2.2, 221))
        assert report.nonlinear_pressure >= dense - 1e-9
        assert report.nonlinear_pressure <= dense + 1e-4

    def test_optimizer_index_validation(self):
        report = nonlinear_pressure_convex(QuadraticConvex(1.0), product_potential(0.8))
        with pytest.raises(IndexError):
            equilibrium_for_optimizer(report, 1)
        with pytest.raises(IndexError):
            equilibrium_for_optimizer(report, -1)

    def test_wrong_spec_kind_rejected(self):
        with pytest.raises(TypeError):
            nonlinear_pressure_convex(QuadraticConcave(1.0), product_potential(1.0))
        with pytest.raises(TypeError):
            nonlinear_pressure_concave(QuadraticConvex(1.0), product_potential(1.0))


class TestConvexGridRoute:
    def test_quadratic_sample_matches_exact_route(self):
        xs = np.linspace(-3.0, 3.0, 601)
        spec = ConvexGrid(GridFunction(xs, 0.5 * xs * xs, "convex"))
        a = product_potential(1.2)
        report = nonlinear_pressure_convex(spec, a)
        exact = nonlinear_pressure_convex(QuadraticConvex(1.0), a)
        assert abs(report.nonlinear_pressure - exact.nonlinear_pressure) <= 1e-6
        assert report.phase_transition
        ts = sorted(p.t for p in report.global_optimizers)
        assert abs(ts[0] + T0) <= 1e-3 and abs(ts[1] - T0) <= 1e-3

    def test_linear_growth_warns_and_recovers_linear_pressure(self):
        xs = np.linspace(-2.0, 2.0, 41)
        spec = ConvexGrid(GridFunction(xs, xs.copy(), "convex"))
        a = product_potential(1.2)
        with pytest.warns(RuntimeWarning):
            report = nonlinear_pressure_convex(spec, a)
        assert len(report.global_optimizers) == 1
        assert abs(report.nonlinear_pressure - math.log(math.cosh(1.2))) <= 1e-7

    def test_zero_nonlinearity_both_routes(self):
        xs = np.linspace(-1.0, 1.0, 21)
        a = product_potential(1.2)
        with pytest.warns(RuntimeWarning):
            up = nonlinear_pressure_convex(ConvexGrid(GridFunction(xs, np.zeros(21), "convex")), a)
        with pytest.warns(RuntimeWarning):
            down = nonlinear_pressure_concave(
                ConcaveGrid(GridFunction(xs, np.zeros(21), "concave")), a)
        assert abs(up.nonlinear_pressure) <= 1e-7
        assert abs(down.nonlinear_pressure) <= 1e-7

    def test_grid_validation(self):
        xs = np.linspace(-1.0, 1.0, 21)
        with pytest.raises(ValueError):
            ConvexGrid(GridFunction(xs, -xs * xs, "concave"))
        with pytest.raises(ValueError):
            nonlinear_pressure_convex(
                ConvexGrid(GridFunction(xs, xs * xs, "convex")),
                product_potential(1.0),
                f=Tabulated(SPINS, 1, np.zeros(2)),
            )


class TestConcave:
    def test_quadratic_unique_optimizer(self):
        report = nonlinear_pressure_concave(QuadraticConcave(1.0), product_potential(1.2))
        assert not report.phase_transition
        assert len(report.global_optimizers) == 1
        point = report.global_optimizers[0]
        assert abs(point.t) <= 1e-9
        assert abs(report.nonlinear_pressure) <= 1e-12
        assert point.kind == "local_min"
        assert abs(point.v_second - 2.44) <= 1e-5

    def test_go_unique_across_betas(self):
        a = go_potential()
        for beta in (0.5, 1.0, 2.0):
            report = nonlinear_pressure_concave(QuadraticConcave(beta), a)
            assert len(report.global_optimizers) == 1
            assert not report.phase_transition
            point = report.global_optimizers[0]
            assert point.residual <= 1e-10
            dense = min(
                0.5 * beta * t * t + pressure(combine(None, a, beta * t)) - math.log(2.0)
                for t in np.linspace(-6.0, 6.0, 241))
            assert report.nonlinear_pressure <= dense + 1e-9
            fine = min(
                0.5 * beta * t * t + pressure(combine(None, a, beta * t)) - math.log(2.0)
                for t in np.linspace(point.t - 0.05, point.t + 0.05, 201))
            assert abs(report.nonlinear_pressure - fine) <= 1e-6

    def test_concave_sample_matches_exact_route(self):
        xs = np.linspace(-3.0, 3.0, 601)
        spec = ConcaveGrid(GridFunction(xs, -0.5 * xs * xs, "concave"))
        a = product_potential(1.2)
        report = nonlinear_pressure_concave(spec, a)
        exact = nonlinear_pressure_concave(QuadraticConcave(1.0), a)
        assert abs(report.nonlinear_pressure - exact.nonlinear_pressure) <= 1e-6
        assert len(report.global_optimizers) == 1
        assert abs(report.global_optimizers[0].t - exact.global_optimizers[0].t) <= 1e-3

    def test_concave_validation(self):
        xs = np.linspace(-1.0, 1.0, 21)
        with pytest.raises(ValueError):
            ConcaveGrid(GridFunction(xs, xs * xs, "convex"))
        bad = np.zeros(21)
        bad[0] = math.inf
        with pytest.raises(ValueError):
            ConcaveGrid(GridFunction(xs, bad, "concave"))


class TestVaradhanCross:
    def test_product_with_transition(self):
        a = product_potential(1.2)
        spec = QuadraticConvex(1.0)
        report = nonlinear_pressure_convex(spec, a)
        assert cross_check_varadhan(report, spec, a) < 1e-6

    def test_product_without_transition(self):
        a = product_potential(0.8)
        spec = QuadraticConvex(1.0)
        report = nonlinear_pressure_convex(spec, a)
        assert cross_check_varadhan(report, spec, a) < 1e-9

    def test_go_example(self):
        a = go_potential()
        spec = QuadraticConvex(0.6)
        report = nonlinear_pressure_convex(spec, a)
        assert cross_check_varadhan(report, spec, a) < 1e-5

    def test_explicit_base_measure(self):
        a = product_potential(1.2)
        spec = QuadraticConvex(1.0)
        f = Tabulated(SPINS, 1, np.full(2, -math.log(2.0)))
        report = nonlinear_pressure_convex(spec, a, f=f)
        assert cross_check_varadhan(report, spec, a, f=f) < 1e-6
