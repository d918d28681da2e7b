import numpy as np
import pytest

from disperse_lab.evolution.schrodinger_flow import (
    RadialFlow,
    duhamel_solve,
    gaussian_bump,
    linear_propagate,
    reverse_solve,
)
from disperse_lab.utils.errors import DomainError, UnsupportedSpaceError


@pytest.fixture(scope="module")
def bump(h3):
    flow = RadialFlow(length=200.0, points=2048)
    return h3, flow, gaussian_bump(h3, 1e-2, flow=flow)


@pytest.fixture(scope="module")
def nonlinear_run(bump):
    space, flow, f = bump
    return duhamel_solve(space, f, 2.0, 2.0, dt=0.05, flow=flow)


class TestRadialFlow:
    def test_rejects_tiny_grids(self):
        with pytest.raises(DomainError):
            RadialFlow(length=0.0)
        with pytest.raises(DomainError):
            RadialFlow(points=4)

    def test_unitary(self, bump):
        _, flow, f = bump
        w = flow.to_w(f)
        for t in (0.5, 3.0, -2.0):
            assert flow.l2_norm(flow.propagate(w, t)) == pytest.approx(flow.l2_norm(w), rel=1e-12)

    def test_group_law(self, bump):
        _, flow, f = bump
        w = flow.to_w(f)
        twice = flow.propagate(flow.propagate(w, 1.0), 2.0)
        np.testing.assert_allclose(twice, flow.propagate(w, 3.0), atol=1e-13)

    def test_backward_undoes_forward(self, bump):
        _, flow, f = bump
        w = flow.to_w(f)
        np.testing.assert_allclose(flow.propagate(flow.propagate(w, 2.5), -2.5), w, atol=1e-14)

    def test_bump_norm(self, bump):
        _, flow, f = bump
        assert flow.l2_norm(flow.to_w(f)) == pytest.approx(1e-2, rel=1e-6)

    def test_linear_propagate_metadata(self, bump):
        space, flow, f = bump
        out = linear_propagate(space, f, 1.0, flow)
        assert out.metadata["t"] == 1.0
        assert out.metadata["l2_norm"] == pytest.approx(1e-2, rel=1e-6)
        assert out.grid[0] == 0.0

    def test_h3_only(self, h2):
        with pytest.raises(UnsupportedSpaceError):
            gaussian_bump(h2)


class TestDuhamel:
    def test_mass_is_conserved(self, nonlinear_run):
        l2 = np.asarray(nonlinear_run.norms["l2"])
        assert np.max(np.abs(l2 / l2[0] - 1.0)) <= 1e-6
        assert not nonlinear_run.blowup_suspect

    def test_run_layout(self, nonlinear_run):
        assert nonlinear_run.T == pytest.approx(2.0)
        assert nonlinear_run.times.size == 41
        assert sorted(nonlinear_run.scattering_checkpoints) == [0.0, 1.0, 2.0]
        assert nonlinear_run.snapshot_times[-1] == pytest.approx(2.0)
        assert len(nonlinear_run.trajectory()) == len(nonlinear_run.snapshots)

    def test_ygamma(self, nonlinear_run):
        y = nonlinear_run.ygamma_norm()
        assert y.sup_l2 == pytest.approx(1e-2, rel=1e-4)
        assert y.spacetime > 0
        summary = nonlinear_run.to_dict()
        assert summary["ygamma"]["total"] == pytest.approx(y.total)
        assert summary["gamma"] == 2.0

    def test_linear_mode_matches_propagator(self, bump):
        space, flow, f = bump
        run = duhamel_solve(space, f, 2.0, 2.0, dt=0.1, nonlinear=False, flow=flow)
        expected = flow.propagate(flow.to_w(f), 2.0)
        assert flow.l2_norm(run.final - expected) <= 1e-10 * flow.l2_norm(expected)

    def test_nonlinear_solution_departs_from_linear(self, bump, nonlinear_run):
        _, flow, _ = bump
        linear = flow.propagate(nonlinear_run.initial, nonlinear_run.T)
        assert flow.l2_norm(nonlinear_run.final - linear) > 0

    def test_time_reversal(self, nonlinear_run):
        recovered = reverse_solve(nonlinear_run)
        flow = nonlinear_run.flow
        error = flow.l2_norm(recovered - nonlinear_run.initial)
        assert error <= 1e-5 * nonlinear_run.data_norm

    @pytest.mark.parametrize("kwargs", [{"gamma": 3.0}, {"gamma": 1.0}, {"T": 0.0}, {"dt": 0.0}])
    def test_rejects(self, bump, kwargs):
        space, flow, f = bump
        args = {"gamma": 2.0, "T": 1.0, "dt": 0.05} | kwargs
        with pytest.raises(DomainError):
            duhamel_solve(space, f, args["gamma"], args["T"], args["dt"], flow=flow)

    def test_h2_unsupported(self, h2, bump):
        _, flow, f = bump
        with pytest.raises(UnsupportedSpaceError):
            duhamel_solve(h2, f, 2.0, 1.0, flow=flow)
