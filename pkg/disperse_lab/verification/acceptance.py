"""Desk-scale acceptance checks run by ``verify-all``."""

import logging
import math
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence

import numpy as np
import pandas as pd

from disperse_lab.analysis.dispersive import decay_fit, lq_decay_series
from disperse_lab.analysis.kernels import (
    default_profile,
    heat_kernel_exact,
    kernel_grid,
    kernel_Lq_norm,
    schrodinger_kernel_exact_complex,
    schrodinger_kernel_numeric,
    verify_pointwise_bound,
)
from disperse_lab.evolution.admissibility import (
    integrability_threshold,
    is_admissible,
    ttstar_kernel_norms,
)
from disperse_lab.evolution.schrodinger_flow import default_flow, duhamel_solve, gaussian_bump
from disperse_lab.evolution.strichartz import scattering_residual
from disperse_lab.geometry.lie_data import make_rank_one_space
from disperse_lab.geometry.spherical import heat_multiplier, inverse_transform, make_grid
from disperse_lab.groups.automorphic import quotient_Lq_norm, unfolding_check
from disperse_lab.groups.catalog import cyclic_group
from disperse_lab.groups.discrete_group import Model
from disperse_lab.groups.poincare import critical_exponent_estimate, poincare_series
from disperse_lab.storage.artifacts import write_table_csv
from disperse_lab.utils.config import Settings
from disperse_lab.utils.errors import ConfigError, DisperseLabError
from disperse_lab.utils.parallel import parallel_map

logger = logging.getLogger(__name__)

H2 = make_rank_one_space("R", 2)
H3 = make_rank_one_space("R", 3)

# r-window on which kernel oracles are compared
ORACLE_WINDOW = (0.1, 8.0)

DEFAULT_PARAMETERS: Dict[str, float] = {
    "kernel.tolerance": 1e-6,
    "kernel.max_seconds": 60.0,
    "heat.tolerance": 1e-8,
    "profile.decay_exponent": 1.5,
    "dispersive.tolerance_h3": 0.05,
    "dispersive.tolerance_h2": 0.1,
    "pointwise.stability": 2.0,
    "poincare.tolerance": 1e-10,
    "poincare.delta_bound": 0.05,
    "automorphic.samples": 200_000,
    "automorphic.ratio_bound": 2.0,
    "unfolding.samples": 1_000_000,
    "unfolding.sigmas": 3.0,
    "unitarity.tolerance": 1e-8,
    "group_law.tolerance": 1e-7,
    "nls.T": 40.0,
    "nls.dt": 0.02,
    "nls.t_early": 5.0,
    "nls.t_late": 20.0,
    "nls.residual_factor": 1e-3,
}


@dataclass
class CheckResult:
    """Outcome of one acceptance check."""

    name: str
    description: str
    value: float
    threshold: float
    passed: bool
    detail: str = ""
    seconds: float = 0.0
    metadata: Dict[str, float] = field(default_factory=dict)


def _relative_error(approx: np.ndarray, exact: np.ndarray, floor: float = 0.0) -> float:
    scale = np.abs(exact) + floor * float(np.max(np.abs(exact)))
    return float(np.max(np.abs(approx - exact) / scale))


class AcceptanceSuite:
    """The eleven verify-all checks with overridable thresholds and sizes.

    Args:
        settings: Loaded settings (seed, threads)
        overrides: Replacement values for keys of ``DEFAULT_PARAMETERS``
    """

    def __init__(self, settings: Settings, overrides: Optional[Mapping[str, Any]] = None):
        self.settings = settings
        self.params: Dict[str, float] = dict(DEFAULT_PARAMETERS)
        self.params["unfolding.samples"] = float(settings.mc_samples)
        for key, value in (overrides or {}).items():
            if key not in self.params:
                raise ConfigError(
                    f"override {key!r}: unknown parameter; known: {sorted(self.params)}"
                )
            try:
                self.params[key] = float(value)
            except (TypeError, ValueError) as e:
                raise ConfigError(f"override {key!r}: expected a number, got {value!r}") from e
        self.checks: Dict[str, Callable[[], CheckResult]] = {
            "kernel_oracle": self.check_kernel_oracle,
            "heat_roundtrip": self.check_heat_roundtrip,
            "dispersive_decay": self.check_dispersive_decay,
            "pointwise_profile": self.check_pointwise_profile,
            "poincare_oracle": self.check_poincare_oracle,
            "automorphic_lq": self.check_automorphic_lq,
            "unfolding": self.check_unfolding,
            "unitarity": self.check_unitarity,
            "ttstar": self.check_ttstar,
            "small_data_nls": self.check_small_data_nls,
            "admissibility_raster": self.check_admissibility_raster,
        }

    @property
    def seed(self) -> int:
        return self.settings.seed

    def run(self, only: Optional[Sequence[str]] = None) -> List[CheckResult]:
        """Run the selected checks (all by default) in order.

        Raises:
            ConfigError: Unknown check name
        """
        names = list(self.checks) if not only else list(only)
        unknown = [n for n in names if n not in self.checks]
        if unknown:
            raise ConfigError(f"unknown checks {unknown}; known: {list(self.checks)}")

        results = []
        for name in names:
            start = time.perf_counter()
            try:
                result = self.checks[name]()
            except DisperseLabError as e:
                logger.warning(f"check {name} raised {type(e).__name__}: {e}")
                result = CheckResult(name, name, math.nan, math.nan, False, str(e))
            except Exception as e:
                logger.error(f"Error during check {name}: {e}", exc_info=True)
                result = CheckResult(name, name, math.nan, math.nan, False, repr(e))
            result.seconds = time.perf_counter() - start
            status = "PASS" if result.passed else "FAIL"
            logger.info(f"[{status}] {name}: {result.value:.4g} vs {result.threshold:.4g}")
            results.append(result)
        return results

    # -- kernels ---------------------------------------------------------------

    def check_kernel_oracle(self) -> CheckResult:
        start = time.perf_counter()
        grid = make_grid()
        window = (grid >= ORACLE_WINDOW[0]) & (grid <= ORACLE_WINDOW[1])
        worst = 0.0
        for t in (0.25, 1.0, 4.0):
            numeric = schrodinger_kernel_numeric(H3, t, grid).values[window]
            exact = schrodinger_kernel_exact_complex(H3, t, grid[window])
            worst = max(worst, _relative_error(numeric, exact))
        elapsed = time.perf_counter() - start
        tol = self.params["kernel.tolerance"]
        limit = self.params["kernel.max_seconds"]
        return CheckResult(
            "kernel_oracle",
            "H3 numeric s_t vs closed form, max relative error on r in [0.1, 8]",
            worst,
            tol,
            worst <= tol and elapsed <= limit,
            f"elapsed {elapsed:.2f} s (limit {limit:g} s)",
            metadata={"elapsed_seconds": elapsed, "max_seconds": limit},
        )

    def check_heat_roundtrip(self) -> CheckResult:
        grid = make_grid()
        window = (grid >= ORACLE_WINDOW[0]) & (grid <= ORACLE_WINDOW[1])
        worst = 0.0
        for t in (0.1, 1.0):
            numeric = inverse_transform(H3, heat_multiplier(H3, t), grid).values.real[window]
            exact = heat_kernel_exact(H3, t, grid[window])
            worst = max(worst, _relative_error(numeric, exact, floor=1e-6))
        tol = self.params["heat.tolerance"]
        return CheckResult(
            "heat_roundtrip",
            "H3 inverse transform of e^{-t(lam^2+1)} vs closed-form heat kernel",
            worst,
            tol,
            worst <= tol,
            "relative error with a floor of 1e-6 of the peak",
        )

    def check_dispersive_decay(self) -> CheckResult:
        expected = -self.params["profile.decay_exponent"]
        threads = self.settings.threads
        h3_times = np.geomspace(2.0, 50.0, 9)
        h3 = decay_fit(h3_times, lq_decay_series(H3, h3_times, 4.0, threads))
        h2_times = np.geomspace(25.0, 400.0, 9)
        h2 = decay_fit(h2_times, lq_decay_series(H2, h2_times, 4.0, threads))
        early = np.geomspace(2.0, 50.0, 9)
        h2_early = decay_fit(early, lq_decay_series(H2, early, 4.0, threads))

        dev_h3 = abs(h3.slope - expected) / self.params["dispersive.tolerance_h3"]
        dev_h2 = abs(h2.slope - expected) / self.params["dispersive.tolerance_h2"]
        worst = max(dev_h3, dev_h2)
        return CheckResult(
            "dispersive_decay",
            "||s_t||_L4 log-log slope, deviation in units of the tolerance",
            worst,
            1.0,
            worst <= 1.0,
            f"H3 [2,50] {h3.slope:.4f}; H2 [25,400] {h2.slope:.4f}; "
            f"H2 [2,50] {h2_early.slope:.4f} (informational)",
        )

    def check_pointwise_profile(self) -> CheckResult:
        times = [0.05, 0.2, 1.0, 4.0, 16.0]
        worst = 1.0
        notes = []
        branches_h2: List[str] = []
        for space in (H2, H3):
            profile = default_profile(space)
            constants = []
            for n_points in (512, 1024):
                radii = make_grid(ORACLE_WINDOW[1], n_points)
                bound = verify_pointwise_bound(kernel_grid(space, times, radii), profile)
                constants.append(bound.constant)
                if space.n == 2:
                    branches_h2 = bound.branches
            if not all(np.isfinite(constants)) or min(constants) <= 0:
                worst = math.inf
            else:
                worst = max(worst, max(constants) / min(constants))
            notes.append(f"{space.label} c*={constants[-1]:.4g}")
        limit = self.params["pointwise.stability"]
        both = {"small_time", "large_time"} <= set(branches_h2)
        return CheckResult(
            "pointwise_profile",
            "pointwise constant ratio under grid doubling; psi_1 branches covered on H2",
            worst,
            limit,
            worst <= limit and both,
            "; ".join(notes) + f"; H2 branches {branches_h2}",
        )

    # -- groups ----------------------------------------------------------------

    def check_poincare_oracle(self) -> CheckResult:
        worst = 0.0
        for s in (0.5, 1.0, 2.0):
            for ell in (0.5, 1.0, 2.0):
                result = poincare_series(cyclic_group(Model.H3, ell), s)
                exact = 1.0 / math.tanh(s * ell / 2.0)
                worst = max(worst, abs(result.partial_sum - exact))
        delta = critical_exponent_estimate(cyclic_group(Model.H3, 1.0)).estimate
        tol = self.params["poincare.tolerance"]
        bound = self.params["poincare.delta_bound"]
        return CheckResult(
            "poincare_oracle",
            "cyclic Poincare sums vs coth(s ell / 2)",
            worst,
            tol,
            worst <= tol and delta <= bound,
            f"critical exponent estimate {delta:.4f} (bound {bound})",
        )

    def check_automorphic_lq(self) -> CheckResult:
        group = cyclic_group(Model.H3, 1.0)
        samples = int(self.params["automorphic.samples"])
        times = [1.0, 2.0, 5.0, 10.0, 20.0]

        def ratio(i_t: Any) -> Any:
            i, t = i_t
            quotient = quotient_Lq_norm(group, t, 4.0, samples=samples, seed=self.seed + i)
            free = kernel_Lq_norm(H3, t, 4.0).value
            return quotient.value / free, quotient.stderr / free

        pairs = parallel_map(ratio, list(enumerate(times)), self.settings.threads)
        low = [r - 3.0 * e for r, e in pairs]
        high = [r + 3.0 * e for r, e in pairs]
        spread = max(low) / min(high)
        limit = self.params["automorphic.ratio_bound"]
        return CheckResult(
            "automorphic_lq",
            "||s_hat_t||_L4(M) / ||s_t||_L4(X) spread over t in [1, 20] (3 sigma)",
            spread,
            limit,
            spread <= limit,
            "ratios " + ", ".join(f"{r:.4f}+-{e:.1e}" for r, e in pairs),
        )

    def check_unfolding(self) -> CheckResult:
        result = unfolding_check(
            cyclic_group(Model.H3, 1.0),
            sigma=1.0,
            samples=int(self.params["unfolding.samples"]),
            seed=self.seed,
        )
        limit = self.params["unfolding.sigmas"]
        return CheckResult(
            "unfolding",
            "fundamental-domain MC of the periodized bump vs int_X F, in standard errors",
            result.deviation,
            limit,
            result.deviation <= limit,
            f"MC {result.monte_carlo:.6g} +- {result.stderr:.2g}, exact {result.exact:.6g}",
        )

    # -- evolution -------------------------------------------------------------

    def check_unitarity(self) -> CheckResult:
        flow = default_flow()
        w = flow.to_w(gaussian_bump(H3, 1e-2, flow=flow))
        norm = flow.l2_norm(w)
        mass = max(
            abs(flow.l2_norm(flow.propagate(w, t)) / norm - 1.0) for t in np.linspace(0, 10, 11)
        )
        twice = flow.propagate(flow.propagate(w, 1.0), 1.0)
        law = flow.l2_norm(twice - flow.propagate(w, 2.0)) / norm
        mass_tol = self.params["unitarity.tolerance"]
        law_tol = self.params["group_law.tolerance"]
        return CheckResult(
            "unitarity",
            "mass drift of S_t on t in [0, 10]",
            mass,
            mass_tol,
            mass <= mass_tol and law <= law_tol,
            f"||S_1 S_1 f - S_2 f|| / ||f|| = {law:.2e} (tolerance {law_tol:g})",
        )

    def check_ttstar(self) -> CheckResult:
        k1_error = abs(ttstar_kernel_norms(3, 4.0).k1 - 4.0)
        worst = 0.0
        for n in (3, 4, 5):
            low, high = 2.0 + 1e-9, 1e6
            for _ in range(200):
                mid = 0.5 * (low + high)
                if ttstar_kernel_norms(n, mid).k2_divergent:
                    high = mid
                else:
                    low = mid
            worst = max(worst, abs(high - integrability_threshold(n)) / integrability_threshold(n))
        passed = k1_error <= 1e-12 and worst <= 1e-9
        return CheckResult(
            "ttstar",
            "||k_1||_1 - 4 and relative error of the bisected k_2 integrability flip",
            max(k1_error, worst),
            1e-9,
            passed,
            f"|k1 - 4| = {k1_error:.1e}, flip error {worst:.1e}",
        )

    def check_small_data_nls(self) -> CheckResult:
        T = self.params["nls.T"]
        dt = self.params["nls.dt"]
        t_early = self.params["nls.t_early"]
        t_late = self.params["nls.t_late"]
        factor = self.params["nls.residual_factor"]
        description = f"scattering residual at t = {t_late:g} relative to |f| (gamma = 2 on H3)"
        # at the horizon itself the residual is the tail estimate alone
        if not 0 <= t_early < t_late < T:
            return CheckResult(
                "small_data_nls",
                description,
                math.inf,
                factor,
                False,
                f"need 0 <= t_early < t_late < T, got {t_early:g}, {t_late:g}, T = {T:g}",
            )
        flow = default_flow()
        ratios = []
        notes = []
        ok = True
        worst = 0.0
        for size in (1e-2, 1e-3):
            run = duhamel_solve(H3, gaussian_bump(H3, size, flow=flow), 2.0, T, dt, flow=flow)
            if run.blowup_suspect:
                return CheckResult(
                    "small_data_nls",
                    description,
                    math.inf,
                    factor,
                    False,
                    f"no contraction at |f|={size}",
                )
            ratios.append(run.ygamma_norm().total / run.data_norm)
            late = scattering_residual(run, t_late)
            early = scattering_residual(run, t_early)
            worst = max(worst, late.upper / run.data_norm)
            ok = ok and late.value > 0 and late.upper < early.upper
            notes.append(
                f"|f|={size:g}: residual({t_late:g})={late.upper:.2e}, "
                f"residual({t_early:g})={early.upper:.2e}, tail {late.tail:.1e}"
            )
        scaling = max(ratios) / min(ratios)
        passed = ok and scaling <= 2.0 and worst <= factor
        notes.append(f"Y_gamma / |f| spread {scaling:.3f}")
        return CheckResult(
            "small_data_nls",
            description,
            worst,
            factor,
            passed,
            "; ".join(notes),
            metadata={"T": T, "t_early": t_early, "t_late": t_late},
        )

    def check_admissibility_raster(self) -> CheckResult:
        mismatches = 0
        half = Fraction(1, 2)
        for n in (2, 3):
            for i in range(101):
                for j in range(101):
                    a, b = Fraction(i, 100), Fraction(j, 100)
                    brute = (a == 0 and b == half) or (
                        0 < a <= half and 0 < b < half and 2 * a + n * b >= n * half
                    )
                    p = math.inf if i == 0 else 100.0 / i
                    q = math.inf if j == 0 else 100.0 / j
                    if is_admissible(n, p, q) != brute:
                        mismatches += 1
        return CheckResult(
            "admissibility_raster",
            "is_admissible vs exact inequality on a 0.01 raster of (1/p, 1/q), n = 2, 3",
            float(mismatches),
            0.0,
            mismatches == 0,
        )


def summary_frame(results: Sequence[CheckResult]) -> pd.DataFrame:
    return pd.DataFrame([asdict(r) for r in results])[
        ["name", "passed", "value", "threshold", "seconds", "description", "detail"]
    ]


def format_summary(results: Sequence[CheckResult]) -> str:
    """Fixed-width table for the terminal."""
    lines = [f"{'check':<22} {'status':<6} {'value':>12} {'threshold':>12} {'time [s]':>9}"]
    lines.append("-" * len(lines[0]))
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        lines.append(
            f"{r.name:<22} {status:<6} {r.value:>12.4g} {r.threshold:>12.4g} {r.seconds:>9.1f}"
        )
    passed = sum(r.passed for r in results)
    lines.append(f"{passed}/{len(results)} checks passed")
    return "\n".join(lines)


def write_summary(results: Sequence[CheckResult], path: Any) -> Any:
    header = [
        "verify-all acceptance summary",
        "value: measured quantity (dimensionless); threshold: certified bound it is compared to",
        "passed: value within threshold and every auxiliary condition of the check",
    ]
    return write_table_csv(summary_frame(results), path, header)
