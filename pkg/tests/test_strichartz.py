import numpy as np
import pytest

from disperse_lab.evolution.schrodinger_flow import RadialFlow, duhamel_solve, gaussian_bump
from disperse_lab.evolution.strichartz import (
    forcing_tail,
    nonlinear_correction_scaling,
    scattering_residual,
    strichartz_quotient,
    strichartz_report,
)
from disperse_lab.utils.errors import DomainError

INF = float("inf")


@pytest.fixture(scope="module")
def runs(h3):
    flow = RadialFlow(length=200.0, points=2048)
    f = gaussian_bump(h3, 1e-2, flow=flow)
    nonlinear = duhamel_solve(h3, f, 2.0, 2.0, dt=0.05, flow=flow)
    linear = duhamel_solve(h3, f, 2.0, 2.0, dt=0.05, nonlinear=False, flow=flow)
    return h3, flow, nonlinear, linear


class TestQuotients:
    def test_energy_pair_on_linear_run_is_one(self, runs):
        _, _, _, linear = runs
        quotient = strichartz_quotient(linear, INF, 2.0, INF, 2.0)
        assert quotient.value == pytest.approx(1.0, rel=1e-10)
        assert quotient.forcing_norm == 0.0

    def test_nonlinear_quotient_is_finite(self, runs):
        _, _, nonlinear, _ = runs
        quotient = strichartz_quotient(nonlinear, 2.0, 6.0, INF, 2.0)
        assert 0 < quotient.value < np.inf
        assert quotient.forcing_norm > 0

    def test_non_admissible_pair(self, runs):
        _, _, nonlinear, _ = runs
        with pytest.raises(DomainError):
            strichartz_quotient(nonlinear, 10.0, 10.0, INF, 2.0)

    def test_zero_data_is_degenerate(self, runs):
        h3, flow, _, _ = runs
        zero = gaussian_bump(h3, 0.0, flow=flow)
        run = duhamel_solve(h3, zero, 2.0, 0.2, dt=0.05, flow=flow)
        quotient = strichartz_quotient(run, 2.0, 6.0, 2.0, 6.0)
        assert quotient.degenerate
        assert quotient.value == 0.0

    def test_report(self, runs):
        _, _, nonlinear, _ = runs
        report = strichartz_report(nonlinear, [((2.0, 6.0), (2.0, 6.0)), ((INF, 2.0), (4.0, 3.0))])
        assert len(report["quotients"]) == 2
        assert report["quotients"][1]["pair"] == [INF, 2.0]
        assert report["ygamma_ratio"] == pytest.approx(
            report["ygamma"]["total"] / nonlinear.data_norm
        )


class TestScattering:
    def test_linear_run_scatters_trivially(self, runs):
        _, _, _, linear = runs
        residual = scattering_residual(linear, 1.0)
        assert residual.value == 0.0
        assert residual.tail == 0.0
        assert forcing_tail(linear) == (0.0, False)

    def test_residual_shrinks_towards_the_end(self, runs):
        _, _, nonlinear, _ = runs
        early = scattering_residual(nonlinear, 0.0)
        late = scattering_residual(nonlinear, 1.0)
        assert late.value < early.value
        assert scattering_residual(nonlinear, 2.0).value == 0.0

    def test_residual_before_the_horizon_is_not_just_the_tail(self, runs):
        _, _, nonlinear, _ = runs
        inside = scattering_residual(nonlinear, 1.0)
        at_horizon = scattering_residual(nonlinear, nonlinear.T)
        assert inside.value > 0.0
        assert inside.upper > at_horizon.upper == at_horizon.tail

    def test_checkpoints_required(self, runs):
        _, _, nonlinear, _ = runs
        with pytest.raises(DomainError):
            scattering_residual(nonlinear, 1.5)
        with pytest.raises(DomainError):
            scattering_residual(nonlinear, 3.0)


def test_correction_scales_like_gamma(runs):
    h3, flow, _, _ = runs
    scaling = nonlinear_correction_scaling(h3, 2.0, 1.0, (1e-2, 1e-3), dt=0.05, flow=flow)
    assert scaling.exponent == pytest.approx(2.0, abs=0.1)
    assert scaling.corrections[0] > scaling.corrections[1]


def test_correction_needs_two_sizes(h3):
    with pytest.raises(DomainError):
        nonlinear_correction_scaling(h3, 2.0, 1.0, (1e-2,))
