import math

import numpy as np
import pytest

from disperse_lab.analysis.kernels import (
    DispersiveProfile,
    KernelGrid,
    ProfileKind,
    branch_coverage,
    complex_time_heat_kernel,
    default_profile,
    fit_phi0_exponent,
    heat_kernel_exact,
    heat_kernel_h2,
    heat_mass,
    kernel_grid,
    kernel_Lq_norm,
    measure_check,
    profile_branch,
    profile_value,
    schrodinger_kernel,
    schrodinger_kernel_exact_complex,
    schrodinger_kernel_numeric,
    verify_pointwise_bound,
)
from disperse_lab.geometry.spherical import RadialFunction, make_grid
from disperse_lab.utils.errors import DegenerateProfileError, DomainError, UnsupportedSpaceError


def test_schroedinger_kernel_at_unit_time_and_radius(h3):
    value = schrodinger_kernel_exact_complex(h3, 1.0, 1.0)
    assert abs(value) == pytest.approx(0.019102, rel=1e-3)


def test_modulus_is_phi0_times_power(sl2c):
    r = np.array([0.0, 0.5, 3.0])
    t = 2.5
    modulus = np.abs(schrodinger_kernel_exact_complex(sl2c, t, r))
    ratio = np.ones_like(r)
    ratio[1:] = r[1:] / np.sinh(r[1:])
    np.testing.assert_allclose(modulus, (4 * math.pi * t) ** -1.5 * ratio, rtol=1e-12)


def test_time_reflection_conjugates(h3):
    r = np.linspace(0.0, 5.0, 11)
    np.testing.assert_allclose(
        schrodinger_kernel_exact_complex(h3, -0.7, r),
        np.conj(schrodinger_kernel_exact_complex(h3, 0.7, r)),
        rtol=1e-13,
    )


def test_heat_kernel_is_the_real_time_continuation(h3):
    r = np.array([0.1, 1.0, 2.0])
    np.testing.assert_allclose(
        complex_time_heat_kernel(h3, 0.5, r).real, heat_kernel_exact(h3, 0.5, r)
    )
    with pytest.raises(DomainError):
        heat_kernel_exact(h3, 0.0, r)
    with pytest.raises(DomainError):
        complex_time_heat_kernel(h3, -1.0 + 1j, r)


def test_closed_forms_need_complex_group(h2):
    with pytest.raises(UnsupportedSpaceError):
        schrodinger_kernel_exact_complex(h2, 1.0, 1.0)


def test_kernel_singular_at_zero_time(h3):
    grid = make_grid(4.0, 16)
    with pytest.raises(DomainError):
        schrodinger_kernel(h3, 0.0, grid)
    with pytest.raises(DomainError):
        schrodinger_kernel_numeric(h3, 0.0, grid)


def test_numeric_kernel_matches_closed_form(h3):
    grid = make_grid(4.0, 64)
    numeric = schrodinger_kernel_numeric(h3, 1.0, grid)
    exact = schrodinger_kernel_exact_complex(h3, 1.0, grid)
    window = grid >= 0.1
    error = np.max(np.abs(numeric.values[window] - exact[window]) / np.abs(exact[window]))
    assert error < 1e-3
    assert numeric.metadata["epsilon_ladder"][0] > numeric.metadata["epsilon_ladder"][-1]


@pytest.mark.slow
def test_numeric_kernel_oracle_on_default_grid(h3):
    grid = make_grid()
    window = (grid >= 0.1) & (grid <= 8.0)
    for t in (0.25, 1.0, 4.0):
        numeric = schrodinger_kernel_numeric(h3, t, grid).values[window]
        exact = schrodinger_kernel_exact_complex(h3, t, grid[window])
        assert np.max(np.abs(numeric - exact) / np.abs(exact)) < 1e-6


def test_h2_kernel_uses_abel_route(h2):
    kernel = schrodinger_kernel(h2, 1.0, make_grid(6.0, 32))
    assert kernel.metadata["route"] == "abel"
    assert np.all(np.isfinite(kernel.values))


def test_heat_mass_is_one(h2, h3):
    assert heat_mass(h3, 1.0) == pytest.approx(1.0, abs=1e-6)
    assert heat_mass(h2, 1.0, make_grid(16.0, 1024)) == pytest.approx(1.0, abs=1e-5)


def test_h2_heat_kernel_oracle(h2):
    grid = make_grid(16.0, 1024)
    values = heat_kernel_h2(1.0, grid)
    assert values[0] > values[10] > 0
    mass = RadialFunction(grid, values, h2).integrate().real
    assert mass == pytest.approx(1.0, abs=1e-5)
    assert isinstance(heat_kernel_h2(1.0, 0.5), float)
    with pytest.raises(DomainError):
        heat_kernel_h2(0.0, grid)


def test_measure_check(h3):
    grid = make_grid(10.0, 200)
    assert measure_check(h3, grid) <= 0.25 + 1e-12


class TestProfiles:
    def test_psi1_branches(self):
        profile = DispersiveProfile(ProfileKind.RANK_ONE_PSI1, 3)
        assert profile_value(profile, 0.5, 0.0) == pytest.approx(0.5**-1.5)
        assert profile_value(profile, 4.0, 1.0) == pytest.approx(4.0**-1.5 * 2.0)
        assert profile_branch(profile, 0.5, 0.0) == "small_time"
        assert profile_branch(profile, 4.0, 1.0) == "large_time"

    def test_global_profile_on_complex_group(self):
        profile = DispersiveProfile(ProfileKind.GLOBAL_PSI, 3, complex_group=True)
        assert profile_value(profile, 8.0) == pytest.approx(8.0**-1.5)
        real = DispersiveProfile(ProfileKind.GLOBAL_PSI, 4)
        assert profile_value(real, 0.5) == pytest.approx(0.5**-2.0)
        assert profile_value(real, 4.0) == pytest.approx(4.0**-1.5)

    def test_profile_singular_at_zero(self):
        with pytest.raises(DomainError):
            profile_value(DispersiveProfile(ProfileKind.GLOBAL_PSI, 3), 0.0)

    def test_default_profiles(self, h2, sl3c):
        assert default_profile(h2).kind is ProfileKind.RANK_ONE_PSI1
        psi2 = default_profile(sl3c)
        assert psi2.kind is ProfileKind.COMPLEX_PSI2
        assert psi2.n == 8

    def test_phi0_fit_bounds_phi0(self, h3):
        fit = fit_phi0_exponent(h3)
        assert fit.fitted
        # r / sinh r behaves like 2 r e^{-r}
        assert 0.5 < fit.a < 2.0
        r = np.asarray(fit.radii)
        bound = fit.c * (1 + r) ** fit.a * np.exp(-r)
        assert np.all(r / np.sinh(r) <= bound * (1 + 1e-12))

    def test_branch_coverage(self):
        profile = DispersiveProfile(ProfileKind.RANK_ONE_PSI1, 2)
        counts = branch_coverage(profile, [0.5, 10.0], np.array([0.0, 2.0]))
        assert counts == {"small_time": 2, "large_time": 2}


class TestPointwiseBound:
    def test_h3_constant_is_finite(self, h3):
        radii = make_grid(8.0, 128)
        bound = verify_pointwise_bound(kernel_grid(h3, [0.5, 1.0, 4.0], radii), default_profile(h3))
        assert 0 < bound.constant < 1.0
        assert bound.worst_t in (0.5, 1.0, 4.0)
        assert bound.branches == ["single"]

    def test_constant_tracks_kernel_over_shape(self, h3):
        radii = make_grid(2.0, 8)
        profile = DispersiveProfile(ProfileKind.COMPLEX_PSI2, 3)
        zero = KernelGrid(h3, np.array([1.0]), radii, np.zeros((1, radii.size)))
        assert verify_pointwise_bound(zero, profile).constant == 0.0
        # shape is e^{-r} at t = 1, a = 0
        ones = KernelGrid(h3, np.array([1.0]), radii, np.ones((1, radii.size)))
        bound = verify_pointwise_bound(ones, profile)
        assert bound.constant == pytest.approx(math.exp(2.0))
        assert bound.worst_r == pytest.approx(2.0)

    def test_degenerate_profile_raises(self, h3, monkeypatch):
        radii = make_grid(2.0, 8)
        kernels = KernelGrid(h3, np.array([1.0]), radii, np.ones((1, radii.size)))
        monkeypatch.setattr(
            "disperse_lab.analysis.kernels.profile_value",
            lambda profile, t, r: np.zeros_like(np.asarray(r, dtype=float)),
        )
        with pytest.raises(DegenerateProfileError):
            verify_pointwise_bound(kernels, DispersiveProfile(ProfileKind.COMPLEX_PSI2, 3))


class TestLqNorms:
    def test_lq_norm_needs_q_above_two(self, h3):
        with pytest.raises(DomainError):
            kernel_Lq_norm(h3, 1.0, 2.0)
        with pytest.raises(DomainError):
            kernel_Lq_norm(h3, 0.0, 4.0)

    def test_majorant_dominates(self, h3):
        norm = kernel_Lq_norm(h3, 2.0, 4.0)
        assert norm.value > 0
        assert norm.majorant >= norm.value

    def test_large_time_decay_on_h3(self, h3):
        times = [8.0, 16.0]
        values = [kernel_Lq_norm(h3, t, 4.0).value for t in times]
        slope = math.log(values[1] / values[0]) / math.log(2.0)
        assert slope == pytest.approx(-1.5, abs=0.05)
