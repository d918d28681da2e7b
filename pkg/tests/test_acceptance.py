import math

import pandas as pd
import pytest

from disperse_lab.analysis.kernels import schrodinger_kernel_exact_complex
from disperse_lab.geometry.spherical import RadialFunction
from disperse_lab.utils.errors import ConfigError, DomainError
from disperse_lab.verification import acceptance
from disperse_lab.verification.acceptance import (
    DEFAULT_PARAMETERS,
    AcceptanceSuite,
    CheckResult,
    format_summary,
    write_summary,
)

FAST = ["ttstar", "admissibility_raster", "poincare_oracle", "unitarity"]


def test_fast_checks_pass(settings):
    results = AcceptanceSuite(settings).run(FAST)
    assert [r.name for r in results] == FAST
    failed = [(r.name, r.detail) for r in results if not r.passed]
    assert failed == []
    assert format_summary(results).endswith("4/4 checks passed")


def test_sample_count_follows_settings(settings):
    suite = AcceptanceSuite(settings)
    assert suite.params["unfolding.samples"] == 20000
    assert suite.params["heat.tolerance"] == DEFAULT_PARAMETERS["heat.tolerance"]


def test_override_can_fail_a_check(settings):
    suite = AcceptanceSuite(settings, {"poincare.delta_bound": -1})
    (result,) = suite.run(["poincare_oracle"])
    assert not result.passed
    assert "bound -1" in result.detail


@pytest.mark.parametrize("overrides", [{"no.such": 1}, {"heat.tolerance": "tight"}])
def test_bad_overrides(settings, overrides):
    with pytest.raises(ConfigError):
        AcceptanceSuite(settings, overrides)


def test_unknown_check(settings):
    with pytest.raises(ConfigError, match="bogus"):
        AcceptanceSuite(settings).run(["ttstar", "bogus"])


def test_errors_become_failures(settings):
    suite = AcceptanceSuite(settings)

    def explode():
        raise DomainError("out of range")

    suite.checks["ttstar"] = explode
    (result,) = suite.run(["ttstar"])
    assert not result.passed
    assert math.isnan(result.value)
    assert result.detail == "out of range"


def test_write_summary(tmp_path):
    results = [
        CheckResult("ttstar", "d", 0.0, 1e-9, True),
        CheckResult("unfolding", "d", 4.0, 3.0, False, "MC off"),
    ]
    path = write_summary(results, tmp_path / "verify_all.csv")
    assert path.read_text().startswith("# verify-all acceptance summary")
    frame = pd.read_csv(path, comment="#")
    assert frame["name"].tolist() == ["ttstar", "unfolding"]
    assert frame["passed"].tolist() == [True, False]
    assert "1/2 checks passed" in format_summary(results)


def test_nls_residual_window_must_end_before_the_horizon(settings):
    suite = AcceptanceSuite(settings, {"nls.T": 20.0, "nls.t_late": 20.0})
    (result,) = suite.run(["small_data_nls"])
    assert not result.passed
    assert "t_late < T" in result.detail


def test_nls_residual_is_measured_inside_the_run(settings):
    overrides = {"nls.T": 8.0, "nls.dt": 0.05, "nls.t_early": 2.0, "nls.t_late": 4.0}
    (result,) = AcceptanceSuite(settings, overrides).run(["small_data_nls"])
    assert result.passed, result.detail
    assert 0.0 < result.value <= DEFAULT_PARAMETERS["nls.residual_factor"]
    assert result.metadata == {"T": 8.0, "t_early": 2.0, "t_late": 4.0}


def test_default_nls_horizon_extends_past_the_late_residual():
    assert DEFAULT_PARAMETERS["nls.t_early"] < DEFAULT_PARAMETERS["nls.t_late"]
    assert DEFAULT_PARAMETERS["nls.t_late"] < DEFAULT_PARAMETERS["nls.T"]


@pytest.fixture
def closed_form_kernels(monkeypatch):
    def numeric(space, t, grid, *args, **kwargs):
        return RadialFunction(grid, schrodinger_kernel_exact_complex(space, t, grid), space)

    monkeypatch.setattr(acceptance, "schrodinger_kernel_numeric", numeric)


def test_kernel_oracle_records_elapsed_time(settings, closed_form_kernels):
    (result,) = AcceptanceSuite(settings).run(["kernel_oracle"])
    assert result.passed, result.detail
    assert result.value < 1e-12
    assert 0.0 < result.metadata["elapsed_seconds"] < 60.0
    assert result.metadata["max_seconds"] == 60.0
    assert "elapsed" in result.detail


def test_kernel_oracle_fails_over_its_time_limit(settings, closed_form_kernels):
    (result,) = AcceptanceSuite(settings, {"kernel.max_seconds": 0.0}).run(["kernel_oracle"])
    assert not result.passed
    assert result.value <= result.threshold


@pytest.mark.slow
def test_kernel_oracle_within_a_minute(settings):
    (result,) = AcceptanceSuite(settings).run(["kernel_oracle"])
    assert result.passed, result.detail
    assert result.metadata["elapsed_seconds"] < 60.0


@pytest.mark.slow
def test_full_suite(settings):
    results = AcceptanceSuite(settings).run()
    assert len(results) == 11
    assert all(r.passed for r in results), format_summary(results)
