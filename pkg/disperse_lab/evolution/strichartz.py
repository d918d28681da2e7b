"""Strichartz quotients, scattering residuals and the first-order Duhamel scaling check."""

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate, stats

from disperse_lab.evolution.admissibility import is_admissible
from disperse_lab.evolution.schrodinger_flow import (
    NlsRun,
    RadialFlow,
    default_flow,
    duhamel_solve,
    gaussian_bump,
)
from disperse_lab.geometry.lie_data import Space, conjugate_exponent
from disperse_lab.utils.errors import DomainError

logger = logging.getLogger(__name__)

Pair = Tuple[float, float]


@dataclass
class StrichartzQuotient:
    """||u||_{L^p L^q} / (||f||_2 + ||F(u)||_{L^{p~'} L^{q~'}}) on [0, T]."""

    p: float
    q: float
    p_tilde: float
    q_tilde: float
    value: float
    solution_norm: float
    data_norm: float
    forcing_norm: float
    degenerate: bool = False


@dataclass
class ScatteringResidual:
    """||u(t) - S_t u_+||_2 with the estimated contribution of s > T."""

    t: float
    value: float
    tail: float
    widened: bool = False

    @property
    def upper(self) -> float:
        return self.value + self.tail


@dataclass
class CorrectionScaling:
    """||u_NL(T) - S_T f||_2 for several data sizes and the fitted power."""

    data_norms: List[float]
    corrections: List[float]
    exponent: float


def _time_norm(times: Sequence[float], values: Sequence[float], p: float) -> float:
    v = np.asarray(values, dtype=float)
    if math.isinf(p):
        return float(np.max(v))
    if len(v) < 2:
        return 0.0
    return float(integrate.trapezoid(v**p, np.asarray(times, dtype=float))) ** (1.0 / p)


def _require_pair(n: int, p: float, q: float) -> None:
    if not is_admissible(n, p, q):
        raise DomainError(f"(p, q) = ({p}, {q}) is not admissible for n={n}")


def strichartz_quotient(
    run: NlsRun, p: float, q: float, p_tilde: float, q_tilde: float
) -> StrichartzQuotient:
    """Measured Strichartz quotient over the stored snapshots of a run.

    ||F(u)||_{L^{q~'}} is evaluated as ||u||_{L^{gamma q~'}}^gamma. Linear runs
    have no forcing term. Zero data returns 0 with ``degenerate`` set.

    Raises:
        DomainError: Either pair not admissible
    """
    n = run.space.n
    _require_pair(n, p, q)
    _require_pair(n, p_tilde, q_tilde)
    flow = run.flow
    data_norm = run.data_norm
    if data_norm == 0:
        logger.warning("strichartz_quotient on zero data, returning 0")
        return StrichartzQuotient(p, q, p_tilde, q_tilde, 0.0, 0.0, 0.0, 0.0, True)

    times = run.snapshot_times
    solution = _time_norm(times, [flow.lq_norm(w, q) for w in run.snapshots], p)
    forcing = 0.0
    if run.nonlinear:
        qp = conjugate_exponent(q_tilde)
        pp = conjugate_exponent(p_tilde)
        spatial = [flow.lq_norm(w, run.gamma * qp) ** run.gamma for w in run.snapshots]
        forcing = _time_norm(times, spatial, pp)
    value = solution / (data_norm + forcing)
    logger.debug(
        f"Strichartz ({p:g},{q:g};{p_tilde:g},{q_tilde:g}): "
        f"{solution:.4e} / ({data_norm:.4e} + {forcing:.4e}) = {value:.4f}"
    )
    return StrichartzQuotient(p, q, p_tilde, q_tilde, value, solution, data_norm, forcing)


def strichartz_report(run: NlsRun, pairs: Sequence[Tuple[Pair, Pair]]) -> Dict[str, object]:
    """Per-pair quotients together with the Y_gamma norm of the run."""
    y = run.ygamma_norm()
    quotients = [strichartz_quotient(run, *first, *second) for first, second in pairs]
    return {
        "ygamma": {"sup_l2": y.sup_l2, "spacetime": y.spacetime, "total": y.total},
        "ygamma_ratio": y.total / run.data_norm if run.data_norm > 0 else 0.0,
        "quotients": [
            {
                "pair": [sq.p, sq.q],
                "dual_pair": [sq.p_tilde, sq.q_tilde],
                "value": sq.value,
                "degenerate": sq.degenerate,
            }
            for sq in quotients
        ],
    }


def _checkpoint(run: NlsRun, t: float) -> np.ndarray:
    for key, coeffs in run.scattering_checkpoints.items():
        if abs(key - t) <= 0.5 * run.dt:
            return coeffs
    raise DomainError(
        f"no scattering checkpoint at t={t}; stored: {sorted(run.scattering_checkpoints)}"
    )


def forcing_tail(run: NlsRun) -> Tuple[float, bool]:
    """Estimate of int_T^inf ||F(u(s))||_2 ds from a power fit over [T/2, T].

    Returns (tail, widened); widened when the fitted decay is not integrable.
    """
    if not run.nonlinear:
        return 0.0, False
    times = np.asarray(run.times)
    forcing = np.asarray(run.norms["F_l2"])
    late = (times >= 0.5 * run.T) & (times > 0) & (forcing > 0)
    if np.count_nonzero(late) < 3:
        return float(forcing[-1] * run.T), True
    fit = stats.linregress(np.log(times[late]), np.log(forcing[late]))
    decay = -float(fit.slope)
    if decay <= 1.0:
        logger.warning(f"forcing decays like t^-{decay:.2f}, scattering tail not integrable")
        return float(forcing[-1] * run.T), True
    return float(forcing[-1] * run.T / (decay - 1.0)), False


def scattering_residual(
    run: NlsRun, t: float, tail_tol: Optional[float] = None
) -> ScatteringResidual:
    """||u(t) - S_t u_+||_2 with u_+ = f - i int_0^inf S_{-s} F(u(s)) ds.

    By unitarity this equals ||J(inf) - J(t)||_2 for J(t) = int_0^t S_{-s} F ds.
    J(inf) is replaced by J(T) and the remainder by ``forcing_tail``.

    Raises:
        DomainError: Run flagged blowup-suspect, or no checkpoint at t
    """
    if run.blowup_suspect:
        raise DomainError("scattering_residual needs a run without the blowup-suspect flag")
    if not 0 <= t <= run.T + 0.5 * run.dt:
        raise DomainError(f"t={t} outside the run interval [0, {run.T}]")
    tail_tol = 1e-4 * run.data_norm if tail_tol is None else tail_tol
    final = _checkpoint(run, run.T)
    value = run.flow.l2_norm(final - _checkpoint(run, t))
    tail, widened = forcing_tail(run)
    if tail > tail_tol:
        widened = True
        logger.warning(f"scattering tail {tail:.2e} above tolerance {tail_tol:.2e}")
    return ScatteringResidual(float(t), value, tail, widened)


def nonlinear_correction_scaling(
    space: Space,
    gamma: float,
    T: float,
    data_norms: Sequence[float] = (1e-2, 1e-3),
    dt: float = 0.02,
    flow: Optional[RadialFlow] = None,
) -> CorrectionScaling:
    """||u_NL(T) - S_T f||_2 for Gaussian data of each size; the power should be near gamma."""
    if len(data_norms) < 2:
        raise DomainError("nonlinear_correction_scaling needs at least two data sizes")
    flow = default_flow() if flow is None else flow
    corrections = []
    for size in data_norms:
        f = gaussian_bump(space, size, flow=flow)
        run = duhamel_solve(space, f, gamma, T, dt, eps_small=math.inf, flow=flow)
        linear = flow.propagate(run.initial, run.T)
        corrections.append(flow.l2_norm(run.final - linear))
    fit = stats.linregress(np.log(data_norms), np.log(corrections))
    logger.info(f"nonlinear correction power {fit.slope:.3f} (gamma={gamma})")
    return CorrectionScaling(list(data_norms), corrections, float(fit.slope))
