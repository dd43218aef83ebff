"""Closed-form model tests: direct oracles plus cross-module comparisons."""

import math

import numpy as np
import pytest

from thermoform.models import (
    GoModel,
    ProductModel,
    go_potential,
    go_pressure,
    go_pressure_printed,
    mu_of_product_eigenfunction,
    product_d2pressure,
    product_dpressure,
    product_eigenfunction_log,
    product_eigenmeasure_marginal,
    product_iid_weights,
    product_pressure,
    product_rate,
)
from thermoform.shift import SPINS, Affine, Product, index_symbols
from thermoform.transfer import (
    build_transfer,
    cylinder_marginals,
    entropy,
    equilibrium,
    perron,
    pressure,
)

#: high-precision value of the radical formula at t=3 (50-digit evaluation)
GO_PRESSURE_AT_3 = 5.400000094724213


def golden_max(fn, a, b, iters=200):
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
    return max(f1, f2)


def geometric_product(depth: int) -> Product:
    return Product(SPINS, 2.0, 0.0, tuple(0.5 ** n for n in range(1, depth + 1)))


class TestProductPressure:
    def test_values(self):
        assert product_pressure(0.0, 1.7) == math.log(2.0)
        assert abs(product_pressure(1.0, 1.2) - math.log(2.0 * math.cosh(1.2))) <= 1e-15

    def test_even_in_t_bitwise(self):
        for t in (0.3, 1.7, 55.0, 1e-8):
            assert product_pressure(t, 0.83) == product_pressure(-t, 0.83)

    def test_overflow_safe(self):
        big = product_pressure(1e6, 2.0)
        assert math.isfinite(big)
        assert abs(big - 2e6) <= 1e-6

    def test_matches_transfer_on_truncation(self):
        prod = geometric_product(6)
        model = ProductModel.from_potential(prod)
        for t in (-2.0, 0.4, 1.3):
            spectral = pressure(Affine(prod, scale=t))
            assert abs(spectral - product_pressure(t, model.u)) <= 1e-10

    def test_derivatives_match_finite_differences(self):
        u, h = 1.2, 1e-6
        for t in (-2.0, -0.5, 0.5, 2.0):
            fd1 = (product_pressure(t + h, u) - product_pressure(t - h, u)) / (2 * h)
            assert abs(product_dpressure(t, u) - fd1) <= 1e-8
            fd2 = (product_dpressure(t + h, u) - product_dpressure(t - h, u)) / (2 * h)
            assert abs(product_d2pressure(t, u) - fd2) <= 1e-8

    def test_derivative_symmetries(self):
        u = 0.9
        assert product_dpressure(0.0, u) == 0.0
        assert product_d2pressure(0.0, u) == u * u
        for t in (0.4, 2.2):
            assert product_dpressure(-t, u) == -product_dpressure(t, u)
            assert product_d2pressure(-t, u) == product_d2pressure(t, u)


class TestProductRate:
    def test_center_and_domain(self):
        assert product_rate(0.0, 1.0) == 0.0
        assert product_rate(1.0, 1.0) == math.inf
        assert product_rate(-1.0, 1.0) == math.inf
        assert product_rate(1.5, 1.0) == math.inf
        assert math.isfinite(product_rate(0.999999, 1.0))

    def test_even_bitwise(self):
        for x in (0.3, 0.77, 0.9999):
            assert product_rate(x, 1.0) == product_rate(-x, 1.0)

    def test_boundary_monotone(self):
        u = 1.3
        r9 = product_rate(0.9 * u, u)
        r999 = product_rate(0.999 * u, u)
        assert 0.0 < r9 < r999
        assert r999 < product_rate(u * (1.0 - 1e-16), u)

    def test_golden_section_oracle(self):
        want = golden_max(lambda t: 0.5 * t - math.log(math.cosh(t)), -12.0, 12.0)
        assert abs(product_rate(0.5, 1.0) - want) <= 1e-9

    def test_random_points_match_numerical_conjugate(self):
        rng = np.random.default_rng(17)
        u = 0.8
        for x in rng.uniform(-0.95 * u, 0.95 * u, 20):
            want = golden_max(
                lambda t: float(x) * t - math.log(math.cosh(t * u)), -16.0, 16.0
            )
            assert abs(product_rate(float(x), u) - want) <= 1e-6

    def test_u_must_be_positive(self):
        with pytest.raises(ValueError):
            product_rate(0.5, 0.0)

    def test_rate_equals_log2_minus_entropy(self):
        # I(p'(t)) = log 2 - h(mu_t) along the pressure curve
        prod = geometric_product(5)
        model = ProductModel.from_potential(prod)
        for t in (0.3, 0.8, -1.1):
            x = product_dpressure(t, model.u)
            h = entropy(Affine(prod, scale=t))
            assert abs(product_rate(x, model.u) - (math.log(2.0) - h)) <= 1e-7


class TestProductEigenObjects:
    def test_model_construction(self):
        model = ProductModel.from_potential(geometric_product(3))
        assert abs(model.u - (0.5 + 0.25 + 0.125)) <= 1e-15
        assert model.depth == 3
        assert np.allclose(model.alphas, [0.375, 0.125, 0.0], atol=1e-15)
        with pytest.raises(ValueError):
            ProductModel(u=1.0).depth

    def test_eigenfunction_basics(self):
        model = ProductModel.from_potential(geometric_product(4))
        word = (1.0, -1.0, 1.0)
        assert product_eigenfunction_log(0.0, model, word) == 0.0
        plus = product_eigenfunction_log(0.7, model, word)
        minus = product_eigenfunction_log(-0.7, model, (-1.0, 1.0, -1.0))
        assert abs(plus - minus) <= 1e-15
        with pytest.raises(ValueError):
            product_eigenfunction_log(0.7, model, (1.0,))

    def test_eigenfunction_matches_perron_vector(self):
        prod = geometric_product(4)
        model = ProductModel.from_potential(prod)
        t = 0.7
        triple = perron(build_transfer(Affine(prod, scale=t)))
        logs = np.array([
            product_eigenfunction_log(t, model, index_symbols(SPINS, 3, v))
            for v in range(8)
        ])
        ratio = triple.log_psi - logs
        assert np.max(np.abs(ratio - ratio[0])) <= 1e-7

    def test_eigenmeasure_marginals_match_perron_vector(self):
        prod = geometric_product(4)
        model = ProductModel.from_potential(prod)
        t = 0.7
        triple = perron(build_transfer(Affine(prod, scale=t)))
        for v in range(8):
            symbols = index_symbols(SPINS, 3, v)
            want = 1.0
            for n, s in enumerate(symbols, start=1):
                pair = product_eigenmeasure_marginal(t, model, n)
                want *= pair[0] if s > 0 else pair[1]
            assert abs(triple.nu[v] - want) <= 1e-8

    def test_marginal_range_and_extremes(self):
        model = ProductModel.from_potential(geometric_product(3))
        assert product_eigenmeasure_marginal(0.0, model, 2) == (0.5, 0.5)
        last = product_eigenmeasure_marginal(0.9, model, 3)
        assert last == product_iid_weights(0.9, model.u)  # s_K = u
        with pytest.raises(ValueError):
            product_eigenmeasure_marginal(0.5, model, 4)
        with pytest.raises(ValueError):
            product_eigenmeasure_marginal(0.5, model, 0)

    def test_iid_weights(self):
        p, q = product_iid_weights(0.6, 1.2)
        assert p + q == 1.0
        assert abs(p - 1.0 / (1.0 + math.exp(-2.0 * 0.6 * 1.2))) <= 1e-15
        assert product_iid_weights(0.0, 3.0) == (0.5, 0.5)
        pm = product_iid_weights(-0.6, 1.2)
        assert pm == (q, p)

    def test_iid_weights_match_equilibrium_marginal(self):
        prod = geometric_product(4)
        model = ProductModel.from_potential(prod)
        t = 0.7
        eq = equilibrium(Affine(prod, scale=t))
        m1 = cylinder_marginals(eq, 1)
        p, q = product_iid_weights(t, model.u)
        assert abs(m1[1] - p) <= 1e-8
        assert abs(m1[0] - q) <= 1e-8

    def test_mu_of_eigenfunction(self):
        model = ProductModel.from_potential(geometric_product(4))
        assert mu_of_product_eigenfunction(0.0, model) == 1.0
        t = 0.8
        assert mu_of_product_eigenfunction(t, model) == mu_of_product_eigenfunction(-t, model)
        # enumeration oracle over (K-1)-words, unnormalized eigenfunction
        direct = sum(
            math.exp(product_eigenfunction_log(t, model, index_symbols(SPINS, 3, v)))
            for v in range(8)
        ) / 8.0
        assert abs(mu_of_product_eigenfunction(t, model) - direct) <= 1e-12
        # Perron route: rescale the solver's eigenvector to the closed form
        triple = perron(build_transfer(Affine(geometric_product(4), scale=t)))
        scale = math.exp(
            product_eigenfunction_log(t, model, index_symbols(SPINS, 3, 0))
            - triple.log_psi[0]
        )
        perron_mean = float(np.mean(triple.psi)) * scale
        assert abs(mu_of_product_eigenfunction(t, model) - perron_mean) <= 1e-7


class TestGoPressure:
    def test_center(self):
        assert abs(go_pressure(0.0, 0.6) - math.log(2.0)) <= 1e-15
        assert abs(go_pressure_printed(0.0) - math.log(2.0)) <= 1e-15

    def test_pinned_value_at_three(self):
        assert abs(go_pressure_printed(3.0) - GO_PRESSURE_AT_3) <= 1e-12
        assert abs(go_pressure(3.0, 0.6) - GO_PRESSURE_AT_3) <= 1e-12

    def test_two_routes_agree_on_grid(self):
        for t in np.linspace(-2.0, 4.0, 61):
            assert abs(go_pressure(float(t), 0.6) - go_pressure_printed(float(t))) <= 1e-10

    def test_matches_transfer_pressure(self):
        go = go_potential()
        for t, beta in [(0.7, 0.6), (-1.3, 1.1), (2.0, 0.25), (3.0, 0.6)]:
            spectral = pressure(Affine(go, scale=beta * t))
            assert abs(go_pressure(t, beta) - spectral) <= 1e-11

    def test_scaled_table_identity(self):
        # s = beta * t = 1.8 reached as (t, beta) = (3, 0.6)
        spectral = pressure(Affine(go_potential(), scale=1.8))
        assert abs(spectral - go_pressure(3.0, 0.6)) <= 1e-11

    def test_breaks_symmetry(self):
        assert abs(go_pressure(1.0, 0.6) - go_pressure(-1.0, 0.6)) > 0.1

    def test_overflow_safe(self):
        assert math.isfinite(go_pressure(1e5, 0.6))
        assert math.isfinite(go_pressure(-1e5, 0.6))
        assert math.isfinite(go_pressure_printed(1e5))
        assert math.isfinite(go_pressure_printed(-1e5))

    def test_model_wrapper(self):
        model = GoModel(beta=0.6)
        tab = model.potential()
        assert tab.depth == 2
        assert sorted(tab.values.tolist()) == [-5.0, 1.0, 2.0, 3.0]
