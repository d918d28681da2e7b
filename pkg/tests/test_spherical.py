import math

import numpy as np
import pytest
from scipy import integrate

from disperse_lab.analysis.kernels import heat_kernel_exact
from disperse_lab.geometry import spherical
from disperse_lab.geometry.lie_data import make_rank_one_space
from disperse_lab.geometry.quadrature import gauss_panels, richardson
from disperse_lab.geometry.spherical import (
    GaussianMultiplier,
    RadialFunction,
    complex_inverse,
    forward_transform,
    heat_multiplier,
    inverse_transform,
    make_grid,
    phi0,
    phi_imaginary,
    phi_lambda,
    plancherel_density,
    quadrature_weights,
    schrodinger_multiplier,
    spherical_matrix,
)
from disperse_lab.utils.errors import (
    DivergenceError,
    DomainError,
    OscillatoryMultiplierError,
    UnsupportedSpaceError,
)
from disperse_lab.utils.parallel import parallel_map

RADII = np.array([0.25, 0.5, 1.0, 2.0, 4.0])


def mehler(mu: float, r: np.ndarray) -> np.ndarray:
    """phi_{-i mu}(r) on H2 from (sqrt 2 / pi) int_0^r cosh(mu s) / sqrt(cosh r - cosh s) ds."""

    def one(radius: float) -> float:
        def integrand(u: float) -> float:
            gap = 2.0 * math.sinh(radius - 0.5 * u * u) * math.sinh(0.5 * u * u)
            return 2.0 * u * math.cosh(mu * (radius - u * u)) / math.sqrt(gap)

        value, _ = integrate.quad(integrand, 0.0, math.sqrt(radius), epsabs=1e-13, epsrel=1e-12)
        return math.sqrt(2.0) / math.pi * value

    return np.array([one(float(x)) for x in r])


class TestGrid:
    def test_grid_shape(self):
        grid = make_grid(8.0, 101)
        assert grid[0] == 0.0
        assert grid[-1] == pytest.approx(8.0)
        assert np.all(np.diff(grid) > 0)
        # refined towards the origin
        assert np.diff(grid)[0] < np.diff(grid)[-1]

    def test_grid_rejects_bad_sizes(self):
        with pytest.raises(DomainError):
            make_grid(0.0, 100)
        with pytest.raises(DomainError):
            make_grid(5.0, 2)

    @pytest.mark.parametrize("n_points", [65, 66])
    def test_weights_integrate_polynomials(self, n_points):
        grid = make_grid(3.0, n_points, stretch=0.0)
        w = quadrature_weights(grid)
        assert np.sum(w * grid**3) == pytest.approx(3.0**4 / 4.0, rel=1e-12)

    def test_radial_function_validation(self, h3):
        with pytest.raises(DomainError):
            RadialFunction(np.array([0.5, 1.0]), np.zeros(2), h3)
        with pytest.raises(DomainError):
            RadialFunction(np.array([0.0, 1.0, 1.0]), np.zeros(3), h3)
        with pytest.raises(DomainError):
            RadialFunction(np.array([0.0, 1.0]), np.array([np.nan, 1.0]), h3)
        f = RadialFunction(np.array([0.0, 1.0]), np.array([np.inf, 1.0]), h3, True)
        assert f.singular_at_origin


class TestCaches:
    def test_threaded_grids_and_phi_matrices(self, h3):
        lambdas = np.linspace(0.0, 4.0, 9)
        sizes = list(range(40, 72))

        def build(n):
            grid = make_grid(6.0 + n / 64.0, n)
            return quadrature_weights(grid), spherical_matrix(h3, lambdas, grid)

        serial = [build(n) for n in sizes]
        threaded = parallel_map(build, sizes, threads=8)
        for (w_serial, m_serial), (w_threaded, m_threaded) in zip(serial, threaded):
            np.testing.assert_array_equal(w_threaded, w_serial)
            np.testing.assert_array_equal(m_threaded, m_serial)
        assert len(spherical._PHI_CACHE) <= spherical._PHI_CACHE_SIZE
        assert not spherical._CACHE_LOCK.locked()


class TestSphericalFunctions:
    def test_phi0_h3_closed_form(self, h3):
        np.testing.assert_allclose(phi0(h3, RADII), RADII / np.sinh(RADII), rtol=1e-14)
        assert phi0(h3, 0.0) == 1.0

    @pytest.mark.parametrize("mu", [0.0, 0.3])
    def test_h2_against_mehler_integral(self, h2, mu):
        np.testing.assert_allclose(
            phi_imaginary(h2, mu, RADII), mehler(mu, RADII), rtol=1e-8
        )

    def test_phi_lambda_h2_is_real_and_bounded(self, h2):
        values = phi_lambda(h2, 1.7, RADII)
        assert np.max(np.abs(values.imag)) < 1e-12
        assert np.all(np.abs(values.real) <= phi0(h2, RADII) + 1e-12)
        assert phi_lambda(h2, 1.7, 0.0) == pytest.approx(1.0)

    def test_phi_lambda_h3_closed_form(self, h3):
        lam = 2.5
        expected = np.sin(lam * RADII) / (lam * np.sinh(RADII))
        np.testing.assert_allclose(phi_lambda(h3, lam, RADII).real, expected, rtol=1e-12)

    def test_phi_lambda_verification(self, h2):
        values = phi_lambda(h2, 3.0, RADII, verify=True)
        np.testing.assert_allclose(values, phi_lambda(h2, 3.0, RADII))

    def test_phi_imaginary_dominates_phi0(self, h3):
        assert np.all(phi_imaginary(h3, 0.5, RADII) >= phi0(h3, RADII))
        np.testing.assert_allclose(phi_imaginary(h3, 1.0, RADII), 1.0)

    def test_phi0_sl3_positive_and_decreasing(self, sl3c):
        values = phi0(sl3c, np.linspace(0.0, 6.0, 13))
        assert values[0] == 1.0
        assert np.all(np.diff(values) < 0)

    def test_negative_radius(self, h3):
        with pytest.raises(DomainError):
            phi0(h3, -0.1)

    def test_quaternionic_needs_jacobi_route(self):
        h8 = make_rank_one_space("H", 8)
        with pytest.raises(UnsupportedSpaceError):
            phi0(h8, 1.0)


class TestPlancherel:
    def test_h3_density(self, h3):
        lam = np.array([0.0, 0.5, 3.0])
        np.testing.assert_allclose(plancherel_density(h3, lam), lam**2 / (2 * math.pi**2))

    def test_h2_density(self, h2):
        lam = 1.3
        expected = lam * math.tanh(math.pi * lam) / (2 * math.pi)
        assert plancherel_density(h2, lam) == pytest.approx(expected)

    def test_uncertified_space(self):
        c4 = make_rank_one_space("C", 4)
        with pytest.raises(UnsupportedSpaceError):
            plancherel_density(c4, 1.0)
        relaxed = plancherel_density(c4, np.array([0.5, 1.0, 2.0]), strict=False)
        assert np.all(relaxed > 0)
        assert np.all(np.diff(relaxed) > 0)

    def test_jacobi_route_matches_h3(self):
        h3 = make_rank_one_space("R", 3)
        lam = np.array([0.5, 1.0, 4.0])
        np.testing.assert_allclose(
            plancherel_density(h3, lam, strict=False) / plancherel_density(h3, lam),
            1.0,
            rtol=1e-8,
        )


class TestTransforms:
    def test_heat_inverse_matches_closed_form(self, h3):
        grid = make_grid(8.0, 256)
        numeric = inverse_transform(h3, heat_multiplier(h3, 1.0), grid).values.real
        exact = heat_kernel_exact(h3, 1.0, grid)
        scale = np.abs(exact) + 1e-6 * np.max(np.abs(exact))
        assert np.max(np.abs(numeric - exact) / scale) < 1e-7

    def test_oscillatory_needs_regularization(self, h3):
        with pytest.raises(OscillatoryMultiplierError):
            inverse_transform(h3, schrodinger_multiplier(h3, 1.0), make_grid(4.0, 32))

    def test_forward_of_heat_kernel(self, h3):
        grid = make_grid(12.0, 2048)
        h = RadialFunction(grid, heat_kernel_exact(h3, 0.5, grid), h3)
        lam = np.array([0.0, 0.5, 1.0, 2.0])
        samples = forward_transform(h3, h, lam)
        np.testing.assert_allclose(samples.values.real, np.exp(-0.5 * (lam**2 + 1.0)), rtol=1e-6)

    def test_forward_detects_non_integrable_input(self, h3):
        grid = make_grid(6.0, 128)
        ones = RadialFunction(grid, np.ones_like(grid), h3)
        with pytest.raises(DivergenceError):
            forward_transform(h3, ones)

    def test_complex_inverse_closed_form(self, sl2c, h3):
        grid = make_grid(6.0, 64)
        f = complex_inverse(sl2c, heat_multiplier(sl2c, 2.0), grid)
        np.testing.assert_allclose(f.values.real, heat_kernel_exact(h3, 2.0, grid), rtol=1e-12)

    def test_complex_inverse_needs_complex_group(self, h2):
        with pytest.raises(UnsupportedSpaceError):
            complex_inverse(h2, heat_multiplier(h2, 1.0), make_grid(4.0, 16))

    def test_gaussian_multiplier_validation(self):
        with pytest.raises(DomainError):
            GaussianMultiplier(-1.0)
        with pytest.raises(DomainError):
            GaussianMultiplier(0.0)
        assert GaussianMultiplier(-2j).oscillatory
        assert not GaussianMultiplier(-2j).damped(0.1).oscillatory


class TestQuadrature:
    def test_gauss_panels_integrate_exponential(self):
        x, w = gauss_panels(0.0, 2.0, 4)
        assert np.sum(w * np.exp(x)) == pytest.approx(math.exp(2.0) - 1.0, rel=1e-14)

    def test_richardson_removes_linear_error(self):
        eps = 0.1 / 2.0 ** np.arange(4)
        values = [np.array([1.0 + 3.0 * e + 2.0 * e * e]) for e in eps]
        best, estimate = richardson(values)
        assert best[0] == pytest.approx(1.0, abs=1e-12)
        assert estimate[0] < 1e-10
