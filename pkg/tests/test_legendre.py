"""Legendre-transform, rate-function and exact-enumeration tests."""

import itertools
import math

import numpy as np
import pytest

from thermoform.kernels import CapacityError
from thermoform.legendre import (
    INF,
    GridFunction,
    convexity_defect,
    empirical_ld,
    finite_part,
    grid_interpolate,
    is_concave,
    is_convex,
    legendre_transform,
    rate_function,
    refine_peak,
    tilted_rate,
    varadhan_value,
    zero_set,
)
from thermoform.shift import SPINS, Tabulated, birkhoff_sum, sup_norm, tabulated_from_dict

GO_TABLE = {(-1.0, -1.0): 3.0, (-1.0, 1.0): -5.0, (1.0, -1.0): 2.0, (1.0, 1.0): 1.0}


def coin_rate(x: float) -> float:
    """Rate function of +-1 coin flips: the conjugate of log cosh."""
    if abs(x) >= 1.0:
        return INF
    return 0.5 * ((1.0 + x) * math.log1p(x) + (1.0 - x) * math.log1p(-x))


def coin_curve(half_width: float = 8.0, points: int = 801) -> GridFunction:
    ts = np.linspace(-half_width, half_width, points)
    return GridFunction(ts, np.logaddexp(ts, -ts) - math.log(2.0), "convex")


class TestGridFunction:
    def test_validation(self):
        with pytest.raises(ValueError):
            GridFunction(np.array([0.0, 0.0]), np.array([1.0, 2.0]))
        with pytest.raises(ValueError):
            GridFunction(np.array([0.0, 1.0]), np.array([1.0, -INF]))
        with pytest.raises(ValueError):
            GridFunction(np.array([0.0, 1.0]), np.array([np.nan, 0.0]))
        with pytest.raises(ValueError):
            GridFunction(np.array([0.0, 1.0]), np.array([INF, INF]))
        with pytest.raises(ValueError):
            GridFunction(np.array([0.0, 1.0]), np.array([0.0, 1.0]), "wiggly")
        with pytest.raises(ValueError):
            GridFunction(np.array([]), np.array([]))

    def test_finite_part(self):
        f = GridFunction(np.array([0.0, 1.0, 2.0]), np.array([INF, 3.0, 4.0]))
        xs, vs = finite_part(f)
        assert list(xs) == [1.0, 2.0] and list(vs) == [3.0, 4.0]

    def test_convexity_queries(self):
        xs = np.linspace(-2.0, 2.0, 41)
        bowl = GridFunction(xs, xs ** 2)
        assert is_convex(bowl) and not is_concave(bowl)
        assert convexity_defect(bowl) >= 0.0
        cap = GridFunction(xs, -(xs ** 2))
        assert is_concave(cap) and not is_convex(cap)
        line = GridFunction(xs, 1.3 * xs + 0.2)
        assert is_convex(line) and is_concave(line)

    def test_inf_marker_inside_breaks_convexity(self):
        vals = np.array([1.0, INF, 1.0, 2.0])
        f = GridFunction(np.arange(4.0), vals)
        assert convexity_defect(f) == -INF
        assert not is_convex(f)


class TestRefinePeak:
    def test_exact_on_quadratic(self):
        g = lambda x: 3.0 - (x - 0.37) ** 2
        xs = np.array([0.0, 0.5, 1.0])
        x, v = refine_peak(xs, np.array([g(p) for p in xs]))
        assert abs(x - 0.37) <= 1e-12
        assert abs(v - 3.0) <= 1e-12

    def test_fallbacks_keep_the_middle(self):
        xs = np.array([0.0, 1.0, 2.0])
        x, v = refine_peak(xs, np.array([1.0, 1.0, 1.0]))  # flat: degenerate fit
        assert (x, v) == (1.0, 1.0)
        x, v = refine_peak(xs, np.array([-INF, 5.0, 4.0]))
        assert (x, v) == (1.0, 5.0)


class TestGridInterpolate:
    def test_quadratic_exact_and_node_hits(self):
        xs = np.linspace(-1.0, 3.0, 17)
        f = GridFunction(xs, 2.0 * xs ** 2 - xs + 0.5)
        for x in (-0.63, 0.1, 2.9, 1.77):
            want = 2.0 * x ** 2 - x + 0.5
            assert abs(grid_interpolate(f, x) - want) <= 1e-12
        assert grid_interpolate(f, xs[3]) == f.values[3]

    def test_outside_and_inf_neighbors(self):
        f = GridFunction(np.arange(4.0), np.array([INF, 1.0, 2.0, INF]))
        assert grid_interpolate(f, -0.5) == INF
        assert grid_interpolate(f, 3.5) == INF
        assert grid_interpolate(f, 0.5) == INF  # bracketing pair not finite
        assert math.isfinite(grid_interpolate(f, 1.5))  # linear fallback
        assert abs(grid_interpolate(f, 1.5) - 1.5) <= 1e-12


class TestLegendreTransform:
    def test_quadratic_conjugate(self):
        xs = np.linspace(-4.0, 4.0, 81)
        conj = legendre_transform(GridFunction(xs, 0.5 * xs ** 2))
        for s in np.linspace(-3.0, 3.0, 25):
            assert abs(grid_interpolate(conj, float(s)) - 0.5 * s * s) <= 1e-6
        assert conj.convexity_flag == "convex"
        assert conj.values[0] == INF and conj.values[-1] == INF

    def test_scaled_quadratic_conjugate(self):
        beta = 0.7
        xs = np.linspace(-4.0, 4.0, 81)
        conj = legendre_transform(GridFunction(xs, 0.5 * beta * xs ** 2))
        for s in np.linspace(-2.0, 2.0, 17):
            assert abs(grid_interpolate(conj, float(s)) - s * s / (2.0 * beta)) <= 1e-6

    def test_linear_conjugate_concentrates_at_the_slope(self):
        c = 1.3
        xs = np.linspace(-4.0, 4.0, 81)
        conj = legendre_transform(GridFunction(xs, c * xs))
        finite_xs, finite_vs = finite_part(conj)
        assert np.all(np.abs(finite_xs - c) <= 1e-6)
        j = int(np.argmin(np.abs(conj.grid - c)))
        assert abs(conj.values[j]) <= 1e-9
        # +inf markers sit within one grid cell of the slope
        assert conj.values[0] == INF and conj.grid[0] >= c - 1e-6
        assert conj.values[-1] == INF and conj.grid[-1] <= c + 1e-6

    def test_biconjugation_recovers_convex_input(self):
        xs = np.linspace(-4.0, 4.0, 161)
        back = legendre_transform(legendre_transform(GridFunction(xs, 0.5 * xs ** 2)))
        for x in np.linspace(-2.5, 2.5, 21):
            assert abs(grid_interpolate(back, float(x)) - 0.5 * x * x) <= 1e-6

    def test_needs_three_finite_values(self):
        with pytest.raises(ValueError):
            legendre_transform(
                GridFunction(np.arange(3.0), np.array([0.0, 1.0, INF]))
            )


class TestRateFunction:
    def test_coin_flip_rate_from_pressure_curve(self):
        rate = rate_function(coin_curve(), 1.0, 1.0)
        assert rate.domain == (-1.0, 1.0)
        for x in (0.0, 0.3, -0.3, 0.8, -0.8):
            assert abs(rate.evaluate(x) - coin_rate(x)) <= 1e-6
        assert 0.0 <= rate.evaluate(0.0) <= 1e-9

    def test_rate_outside_domain_is_inf(self):
        rate = rate_function(coin_curve(), 1.0, 1.0)
        assert rate.evaluate(1.0) == INF
        assert rate.evaluate(-1.0) == INF
        assert rate.evaluate(2.3) == INF
        assert math.isfinite(rate.evaluate(0.999999))

    def test_node_values_nonnegative(self):
        rate = rate_function(coin_curve(), 1.0, 1.0)
        finite = rate.values[np.isfinite(rate.values)]
        assert np.min(finite) >= 0.0
        assert np.min(finite) == 0.0  # chat(0) = 0 pins the minimum

    def test_nonconvex_curve_rejected(self):
        ts = np.linspace(-1.0, 1.0, 21)
        with pytest.raises(ValueError):
            rate_function(GridFunction(ts, -(ts ** 2)), 1.0, 1.0)

    def test_degenerate_direction_collapses_to_a_point(self):
        ts = np.linspace(-1.0, 1.0, 11)
        rate = rate_function(GridFunction(ts, np.zeros(11), "convex"), 0.0, 0.0)
        assert rate.degenerate_point == 0.0
        assert rate.evaluate(0.0) == 0.0
        assert rate.evaluate(1e-6) == INF


class TestVaradhan:
    def test_zero_tilt_gives_zero(self):
        rate = rate_function(coin_curve(), 1.0, 1.0)
        assert abs(varadhan_value(lambda x: 0.0, rate)) <= 1e-9

    def test_quadratic_tilt_matches_dense_oracle(self):
        rate = rate_function(coin_curve(), 1.0, 1.0)
        F = lambda x: 0.2 - (x - 0.4) ** 2
        xs = np.arange(-0.9999, 0.9999, 2e-5)
        oracle = max(F(x) - coin_rate(x) for x in xs)
        assert abs(varadhan_value(F, rate) - oracle) <= 1e-6

    def test_grid_function_tilt(self):
        rate = rate_function(coin_curve(), 1.0, 1.0)
        xs = np.linspace(-0.9, 0.9, 37)
        F = GridFunction(xs, 0.2 - (xs - 0.4) ** 2)
        dense = np.arange(-0.9, 0.9, 2e-5)
        oracle = max(0.2 - (x - 0.4) ** 2 - coin_rate(x) for x in dense)
        assert abs(varadhan_value(F, rate) - oracle) <= 1e-6

    def test_degenerate_rate_evaluates_the_tilt(self):
        ts = np.linspace(-1.0, 1.0, 11)
        rate = rate_function(GridFunction(ts, np.zeros(11), "convex"), 0.0, 0.0)
        assert varadhan_value(lambda x: 5.0 - x, rate) == 5.0


class TestTiltedRate:
    def test_zero_set_clusters(self):
        grid = np.arange(6.0)
        values = np.array([5.0, 1e-12, 3e-13, 2.0, 0.0, 7.0])
        assert zero_set(grid, values) == (2.0, 4.0)
        assert zero_set(grid, np.full(6, 4.0)) == ()

    def test_zero_tilt_keeps_values_and_pins_minimum(self):
        rate = rate_function(coin_curve(), 1.0, 1.0)
        tilted = tilted_rate(lambda x: 0.0, rate)
        assert tilted.shift_constant == 0.0
        finite = np.isfinite(tilted.values)
        assert np.min(tilted.values[finite]) == 0.0
        assert np.max(np.abs(tilted.values[finite] - rate.values[finite])) == 0.0
        assert tilted.zeros == (0.0,)

    def test_shift_constant_is_minus_varadhan(self):
        rate = rate_function(coin_curve(), 1.0, 1.0)
        F = lambda x: 0.2 - (x - 0.4) ** 2
        tilted = tilted_rate(F, rate)
        assert abs(tilted.shift_constant + varadhan_value(F, rate)) <= 1e-3
        assert np.min(tilted.values[np.isfinite(tilted.values)]) == 0.0

    def test_explicit_grid_and_zero_location(self):
        rate = rate_function(coin_curve(), 1.0, 1.0)
        F = lambda x: 0.2 - (x - 0.4) ** 2
        xs = np.linspace(-0.6, 0.9, 151)
        tilted = tilted_rate(F, rate, x_grid=xs)
        assert len(tilted.zeros) == 1
        dense = np.arange(-0.6, 0.9, 1e-5)
        x_star = max(dense, key=lambda x: F(x) - coin_rate(x))
        assert abs(tilted.zeros[0] - x_star) <= 0.02

    def test_infinite_tilt_on_finite_rate_rejected(self):
        rate = rate_function(coin_curve(), 1.0, 1.0)
        narrow = GridFunction(np.linspace(-0.1, 0.1, 5), np.zeros(5))
        with pytest.raises(ValueError):
            tilted_rate(narrow, rate, x_grid=np.linspace(-0.5, 0.5, 11))


class TestEmpiricalLD:
    def test_full_support_interval_has_mass_one(self):
        go = tabulated_from_dict(SPINS, 2, GO_TABLE)
        width = sup_norm(go)
        out = empirical_ld(go, 3, (-width, width))
        assert out.mass == 1.0
        assert out.count == out.configurations == 2 ** 4
        assert out.log_rate == 0.0

    def test_single_word_atom(self):
        go = tabulated_from_dict(SPINS, 2, GO_TABLE)
        out = empirical_ld(go, 1, (1.0, 1.0))  # only the word (1, 1) scores 1
        assert out.count == 1
        assert out.configurations == 4
        assert abs(out.mass - 0.25) <= 0.0
        assert abs(out.log_rate - math.log(0.25)) <= 1e-15

    def test_empty_interval(self):
        go = tabulated_from_dict(SPINS, 2, GO_TABLE)
        out = empirical_ld(go, 2, (100.0, 200.0))
        assert out.count == 0 and out.mass == 0.0
        assert out.log_rate == -INF

    def test_counts_match_bruteforce(self):
        rng = np.random.default_rng(21)
        tab = Tabulated(SPINS, 2, rng.uniform(-1.0, 1.0, 4))
        n = 4
        lo, hi = -0.3, 0.55
        want = 0
        for symbols in itertools.product((-1.0, 1.0), repeat=n + 1):
            total = birkhoff_sum(tab, symbols, n)
            if n * lo <= total <= n * hi:
                want += 1
        out = empirical_ld(tab, n, (lo, hi))
        assert out.count == want
        assert out.configurations == 2 ** (n + 1)

    def test_closed_interval_includes_endpoints(self):
        flat = Tabulated(SPINS, 1, np.array([-1.0, 1.0]))
        out = empirical_ld(flat, 2, (1.0, 1.0))  # average exactly 1: the word (1,1)
        assert out.count == 1

    def test_validation_and_capacity(self):
        go = tabulated_from_dict(SPINS, 2, GO_TABLE)
        with pytest.raises(ValueError):
            empirical_ld(go, 2, (1.0, 0.0))
        with pytest.raises(ValueError):
            empirical_ld(go, 0, (0.0, 1.0))
        with pytest.raises(CapacityError):
            empirical_ld(go, 30, (0.0, 1.0))
