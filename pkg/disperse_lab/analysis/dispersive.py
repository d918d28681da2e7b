"""Kunze-Stein and Herz bounds, A_q norms, operator-norm decay and dispersive exponents."""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence

import numpy as np
from scipy import stats

from disperse_lab.analysis.kernels import (
    DispersiveProfile,
    ProfileKind,
    complex_time_heat_kernel,
    kernel_Lq_norm,
    lq_grid,
    profile_value,
    schrodinger_kernel,
)
from disperse_lab.geometry.lie_data import RankOneSpace, Space, rho_p, s_exponent
from disperse_lab.geometry.spherical import (
    GaussianMultiplier,
    RadialFunction,
    abel_values,
    make_grid,
    phi0,
    phi_imaginary,
)
from disperse_lab.groups.automorphic import QuotientNorm, quotient_Lq_norm
from disperse_lab.groups.discrete_group import DiscreteGroup, Model, Point
from disperse_lab.utils.errors import ClassViolationError, DivergenceError, DomainError
from disperse_lab.utils.parallel import parallel_map

logger = logging.getLogger(__name__)

OUTER_SHARE = 1e-6
HEAT_BUMP_SIGMA = 0.05


class Regime(str, Enum):
    SMALL_TIME = "small_time"
    LARGE_TIME_RANK_ONE = "large_time_rank_one"
    LARGE_TIME_COMPLEX = "large_time_complex"


@dataclass
class AqNorm:
    """||kappa||_{A_q}: (int |kappa|^{q/2} phi_0 dx)^{2/q}, the sup norm at q = inf."""

    q: float
    value: float


@dataclass
class OperatorNormBound:
    """Two-sided report on ||S_t||_{L^1 -> L^q} over M."""

    t: float
    q: float
    upper: float
    upper_stderr: float
    lower: float
    basepoints: int


@dataclass
class DecayFit:
    """Least-squares slope of log value against log t."""

    slope: float
    stderr: float
    intercept: float
    n_points: int


def _weighted_integral(kappa: RadialFunction, weight: np.ndarray, what: str) -> float:
    """c_X int |kappa| weight delta dr with an outer-share divergence check."""
    density = np.abs(kappa.values) * weight
    if kappa.singular_at_origin:
        density[0] = 0.0
    w = kappa.weights
    total = float(np.real(kappa.integrate(density)))
    outer = kappa.grid >= 0.9 * kappa.grid[-1]
    tail = float(np.real(kappa.integrate(np.where(outer, density, 0.0))))
    if not np.isfinite(total) or (total > 0 and tail > OUTER_SHARE * total):
        raise DivergenceError(
            f"{what}: integrand not integrable on the grid (outer share {tail / total:.2e})",
            {"total": total, "outer": tail, "grid_points": int(w.size)},
        )
    return total


def herz_bound(space: Space, kappa: RadialFunction, p: float) -> float:
    """Herz criterion: c_X int |kappa| phi_{-i rho_p} delta dr.

    p = 2 gives int |kappa| phi_0 delta, p = 1 the L^1(G) norm; p and p' agree.

    Raises:
        DomainError: p < 1
        DivergenceError: Integrand not integrable on the grid
    """
    mu = rho_p(space, p)
    return _weighted_integral(kappa, phi_imaginary(space, mu, kappa.grid), "herz_bound")


def ks_locsym_bound(space: Space, kappa: RadialFunction, p: float, class_s: bool = True) -> float:
    """Locally symmetric Kunze-Stein bound c_X int |kappa| phi_0^{s(p)} delta dr.

    Since phi_0 <= 1 the bound grows as |1/p - 1/2| grows, from the p = 2
    Herz value towards the L^1 norm as p -> 1 or p -> inf.

    Raises:
        ClassViolationError: class_s flag not set
        DomainError: p outside (1, inf)
    """
    if not class_s:
        raise ClassViolationError("ks_locsym_bound needs the class (S) flag")
    s = s_exponent(p)
    return _weighted_integral(kappa, phi0(space, kappa.grid) ** s, "ks_locsym_bound")


def aq_grid(space: Space, q: float, n_points: int = 1024) -> np.ndarray:
    """Radial grid on which |s_t|^{q/2} phi_0 delta has decayed past e^{-40}."""
    rho = space.rho if isinstance(space, RankOneSpace) else 1.0
    rate = rho * (q / 2.0 - 1.0)
    r_max = min(100.0, 12.0 + 40.0 / max(rate, 1e-12))
    return make_grid(r_max, n_points)


def aq_norm(
    space: Space, kappa: RadialFunction, q: float, cutoff: Optional[float] = None
) -> AqNorm:
    """||kappa||_{A_q}, optionally for the truncation kappa 1_{r <= cutoff}.

    Raises:
        DomainError: q < 2
        DivergenceError: Integrand not integrable on the grid
    """
    if q < 2:
        raise DomainError(f"A_q norms need q >= 2, got q={q}")
    values = np.abs(kappa.values)
    if cutoff is not None:
        values = np.where(kappa.grid <= cutoff, values, 0.0)
    if math.isinf(q):
        return AqNorm(q, float(np.max(values)))
    trimmed = RadialFunction(
        kappa.grid, values ** (q / 2.0), kappa.space, kappa.singular_at_origin
    )
    integral = _weighted_integral(trimmed, phi0(space, kappa.grid), "aq_norm")
    return AqNorm(q, integral ** (2.0 / q))


def _heat_bump_norm(space: Space, t: float, q: float, sigma: float) -> float:
    """||S_t h_sigma||_{L^q(X)} / ||h_sigma||_{L^1(X)} with S_t h_sigma = h_{sigma - i t}."""
    grid = lq_grid(q)
    tau = complex(sigma, -t)
    if space.is_complex_group:
        values = complex_time_heat_kernel(space, tau, grid)
    else:
        rho_sq = space.rho**2 if isinstance(space, RankOneSpace) else 0.0
        values = abel_values(GaussianMultiplier(tau, 1.0, rho_sq), grid)
    # heat kernels have unit mass
    return RadialFunction(grid, values, space).lq_norm(q)


def opnorm_L1_to_Lq(
    group: DiscreteGroup,
    t: float,
    q: float,
    basepoints: Optional[Sequence[Point]] = None,
    samples: int = 200_000,
    seed: int = 0,
    sigma: float = HEAT_BUMP_SIGMA,
) -> OperatorNormBound:
    """Upper bound sup_x ||s_hat_t(x, .)||_{L^q(M)} and heat-bump lower bound.

    The trivial group uses the exact ||s_t||_{L^q(X)}; other groups use Monte
    Carlo over the fundamental domain at each basepoint.

    Raises:
        DomainError: q <= 2 or t = 0
        ClassViolationError: Gate fails
    """
    if q <= 2:
        raise DomainError(f"opnorm_L1_to_Lq needs q > 2, got q={q}")
    if t == 0:
        raise DomainError("opnorm_L1_to_Lq needs t != 0")
    space = group.space
    lower = _heat_bump_norm(space, t, q, sigma)

    if group.rank == 0:
        exact = kernel_Lq_norm(space, t, q).value
        return OperatorNormBound(float(t), float(q), exact, 0.0, lower, 1)

    points = list(basepoints) if basepoints is not None else default_basepoints(group.model)
    norms: List[QuotientNorm] = [
        quotient_Lq_norm(group, t, q, x, samples, seed + i) for i, x in enumerate(points)
    ]
    best = max(norms, key=lambda n: n.value)
    logger.info(
        f"{group.label}: ||S_t||_(1->{q:g}) at t={t:g}: upper {best.value:.4g}, lower {lower:.4g}"
    )
    return OperatorNormBound(float(t), float(q), best.value, best.stderr, lower, len(points))


def opnorm_Lqprime_to_Linf(
    group: DiscreteGroup,
    t: float,
    q: float,
    basepoints: Optional[Sequence[Point]] = None,
    samples: int = 200_000,
    seed: int = 0,
) -> OperatorNormBound:
    """||S_t||_{L^{q'} -> L^inf}, equal to the L^1 -> L^q norm by duality (symmetric kernel)."""
    return opnorm_L1_to_Lq(group, -t, q, basepoints, samples, seed)


def default_basepoints(model: Model) -> List[Point]:
    """Axis point and two off-axis points at heights 1."""
    if model is Model.H2:
        return [1j, 0.5 + 1j, 1.5 + 1j]
    return [(0j, 1.0), (0.5 + 0j, 1.0), (1.5 + 0j, 1.0)]


def dispersive_exponent(n: int, q: float, q_tilde: float, regime: str) -> float:
    """Decay exponent of ||S_t||_{L^{q~'} -> L^q}.

    small_time: n max{1/2 - 1/q, 1/2 - 1/q~}; large_time_rank_one: 3/2;
    large_time_complex: n/2.

    Raises:
        DomainError: q or q~ <= 2, or unknown regime
    """
    for name, value in (("q", q), ("q_tilde", q_tilde)):
        if not value > 2:
            raise DomainError(f"{name} must lie in (2, inf], got {value}")
    try:
        regime = Regime(regime)
    except ValueError as e:
        choices = [r.value for r in Regime]
        raise DomainError(f"unknown regime {regime!r}; expected one of {choices}") from e

    if regime is Regime.SMALL_TIME:
        return n * max(0.5 - 1.0 / q, 0.5 - 1.0 / q_tilde)
    if regime is Regime.LARGE_TIME_RANK_ONE:
        return 1.5
    return n / 2.0


def decay_fit(times: Sequence[float], values: Sequence[float]) -> DecayFit:
    """Slope of log value against log |t| with its standard error.

    Raises:
        DomainError: Fewer than 5 samples or a nonpositive value
    """
    t = np.abs(np.asarray(times, dtype=float))
    v = np.asarray(values, dtype=float)
    if t.size < 5 or t.size != v.size:
        raise DomainError(f"decay_fit needs at least 5 (t, value) pairs, got {t.size}")
    if np.any(v <= 0) or np.any(t <= 0):
        raise DomainError("decay_fit needs positive times and values")
    fit = stats.linregress(np.log(t), np.log(v))
    return DecayFit(float(fit.slope), float(fit.stderr), float(fit.intercept), int(t.size))


def lq_decay_series(
    space: Space, times: Sequence[float], q: float, threads: int = 1
) -> np.ndarray:
    """||s_t||_{L^q(X)} for each t."""
    grid = lq_grid(q)
    norms = parallel_map(lambda t: kernel_Lq_norm(space, float(t), q, grid).value, times, threads)
    return np.array(norms)


def aq_decay_series(
    space: Space, times: Sequence[float], q: float, threads: int = 1
) -> np.ndarray:
    """||s_t||_{A_q} for each t."""
    grid = aq_grid(space, q)

    def one(t: float) -> float:
        return aq_norm(space, schrodinger_kernel(space, float(t), grid), q).value

    return np.array(parallel_map(one, times, threads))


def global_profile(space: Space) -> DispersiveProfile:
    """Psi(t): |t|^{-n/2} for |t| <= 1 (or on complex groups), |t|^{-3/2} after."""
    return DispersiveProfile(ProfileKind.GLOBAL_PSI, space.n, complex_group=space.is_complex_group)


def profile_ratios(space: Space, times: Sequence[float], values: Sequence[float]) -> np.ndarray:
    """values / Psi(t); bounded ratios certify the profile."""
    profile = global_profile(space)
    return np.array([v / profile_value(profile, float(t)) for t, v in zip(times, values)])
