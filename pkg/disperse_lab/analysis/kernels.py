"""Heat and Schroedinger kernels on X, pointwise bound certification, L^q(X) norms."""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
from scipy import stats

from disperse_lab.geometry.lie_data import (
    Family,
    RankOneSpace,
    Space,
    make_rank_one_space,
    radial_density,
    rho_norm,
)
from disperse_lab.geometry.spherical import (
    RadialFunction,
    abel_values,
    heat_multiplier,
    inverse_transform,
    make_grid,
    phi0,
    quadrature_weights,
    schrodinger_multiplier,
)
from disperse_lab.utils.errors import DegenerateProfileError, DomainError, UnsupportedSpaceError

logger = logging.getLogger(__name__)

H2 = make_rank_one_space(Family.R, 2)


class ProfileKind(str, Enum):
    """Bound shapes for Schroedinger kernels."""

    RANK_ONE_PSI1 = "rank_one_psi1"
    COMPLEX_PSI2 = "complex_psi2"
    GLOBAL_PSI = "global_Psi"


@dataclass
class DispersiveProfile:
    """A bound shape psi(t, r) (or Psi(t)) with its dimension, exponent and constant."""

    kind: ProfileKind
    n: int
    a: float = 0.0
    c: float = 1.0
    complex_group: bool = False


@dataclass
class Phi0Fit:
    """phi_0(r) <= c (1 + r)^a e^{-rho r} fitted on a dyadic grid."""

    c: float
    a: float
    fitted: bool
    radii: List[float] = field(default_factory=list)


@dataclass
class KernelGrid:
    """Kernel values on a common (t, r) grid, shape (len(times), len(radii))."""

    space: Space
    times: np.ndarray
    radii: np.ndarray
    values: np.ndarray


@dataclass
class PointwiseBound:
    """Result of verify_pointwise_bound."""

    constant: float
    worst_t: float
    worst_r: float
    branches: List[str]


@dataclass
class LqNorm:
    """||s_t||_{L^q(X)} with the e^{2 rho r} majorant value."""

    t: float
    q: float
    value: float
    majorant: float


def profile_value(profile: DispersiveProfile, t: float, r: Union[float, np.ndarray] = 0.0):
    """Evaluate psi_1, psi_2 or Psi at (t, r) (Psi ignores r).

    Raises:
        DomainError: t = 0
    """
    if t == 0:
        raise DomainError("profiles are singular at t = 0")
    at = abs(t)
    r_arr = np.asarray(r, dtype=float)
    n = profile.n

    if profile.kind is ProfileKind.RANK_ONE_PSI1:
        small = at <= 1.0 + r_arr
        value = np.where(
            small, at ** (-n / 2.0) * (1.0 + r_arr) ** ((n - 1) / 2.0), at**-1.5 * (1.0 + r_arr)
        )
    elif profile.kind is ProfileKind.COMPLEX_PSI2:
        value = at ** (-n / 2.0) * (1.0 + r_arr) ** profile.a
    else:
        if profile.complex_group or at <= 1.0:
            scalar = at ** (-n / 2.0)
        else:
            scalar = at**-1.5
        value = np.full_like(r_arr, scalar)

    return float(value) if np.ndim(value) == 0 else value


def profile_branch(profile: DispersiveProfile, t: float, r: float) -> str:
    """Which psi_1 branch (t, r) falls in: ``small_time`` for |t| <= 1 + r, else ``large_time``."""
    if profile.kind is not ProfileKind.RANK_ONE_PSI1:
        return "single"
    return "small_time" if abs(t) <= 1.0 + r else "large_time"


def fit_phi0_exponent(space: Space, radii: Optional[Sequence[float]] = None) -> Phi0Fit:
    """Fit (c, a) in phi_0(r) <= c (1 + r)^a e^{-rho r} on a dyadic r-grid.

    The slope of log(phi_0 e^{rho r}) against log(1 + r) gives a; c is then the
    smallest constant making the bound hold on the grid. Falls back to a = number
    of positive roots when the fit is degenerate.
    """
    r = np.asarray(radii if radii is not None else 2.0 ** np.arange(-2, 6), dtype=float)
    rho = rho_norm(space)
    y = np.log(phi0(space, r)) + rho * r
    x = np.log1p(r)
    fitted = True
    try:
        a = float(stats.linregress(x, y).slope)
    except ValueError:
        a = float("nan")
    if not np.isfinite(a) or a < 0:
        roots = getattr(space, "positive_roots", ((1.0,),))
        a = float(len(roots))
        fitted = False
        logger.warning(f"phi0 exponent fit degenerate on {space.label}; using a={a}")
    c = float(np.max(np.exp(y - a * x)))
    logger.debug(f"phi0 fit on {space.label}: c={c:.4f}, a={a:.4f}")
    return Phi0Fit(c, a, fitted, r.tolist())


def default_profile(space: Space) -> DispersiveProfile:
    """psi_2 (complex groups, a from the phi_0 fit) or psi_1 (other rank-one spaces)."""
    if space.is_complex_group:
        fit = fit_phi0_exponent(space)
        return DispersiveProfile(ProfileKind.COMPLEX_PSI2, space.n, a=fit.a, complex_group=True)
    return DispersiveProfile(ProfileKind.RANK_ONE_PSI1, space.n)


def _require_complex(space: Space, what: str) -> None:
    if not space.is_complex_group:
        raise UnsupportedSpaceError(f"{what}: {space.label} is not a complex-group space")


def complex_time_heat_kernel(space: Space, tau: complex, r: Union[float, np.ndarray]):
    """h_tau(r) = (4 pi tau)^{-n/2} e^{-tau |rho|^2} phi_0(r) e^{-r^2 / 4 tau}, Re tau >= 0.

    Principal branch of the power; tau = -i t gives the Schroedinger kernel.
    """
    _require_complex(space, "complex_time_heat_kernel")
    tau = complex(tau)
    if tau == 0 or tau.real < 0:
        raise DomainError(f"complex_time_heat_kernel needs Re tau >= 0, tau != 0 (got {tau})")
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < 0):
        raise DomainError("kernels require r >= 0")
    value = (
        np.power(4.0 * np.pi * tau, -space.n / 2.0)
        * np.exp(-tau * rho_norm(space) ** 2)
        * phi0(space, r_arr)
        * np.exp(-(r_arr**2) / (4.0 * tau))
    )
    return complex(value) if np.ndim(value) == 0 else value


def heat_kernel_exact(space: Space, t: float, r: Union[float, np.ndarray]):
    """(4 pi t)^{-3/2} (r / sinh r) e^{-t} e^{-r^2/4t} on H^3 (any complex group in general).

    Raises:
        DomainError: t <= 0
    """
    if t <= 0:
        raise DomainError(f"heat kernel needs t > 0, got t={t}")
    value = complex_time_heat_kernel(space, t, r)
    return np.real(value) if np.ndim(value) else float(np.real(value))


def heat_kernel_h2(t: float, r: Union[float, np.ndarray]):
    """Heat kernel on H^2 (unit total mass) through the Abel integral of a 1-D Gaussian."""
    if t <= 0:
        raise DomainError(f"heat kernel needs t > 0, got t={t}")
    r_arr = np.asarray(r, dtype=float)
    values = abel_values(heat_multiplier(H2, t), np.atleast_1d(r_arr)).real
    return float(values[0]) if np.ndim(r_arr) == 0 else values


def schrodinger_kernel_exact_complex(space: Space, t: float, r: Union[float, np.ndarray]):
    """s_t on a complex-group space, the continuation t -> -i t of the heat kernel.

    |s_t(r)| = (4 pi |t|)^{-n/2} phi_0(r) and s_{-t} = conj(s_t).

    Raises:
        DomainError: t = 0
    """
    if t == 0:
        raise DomainError("Schroedinger kernel is singular at t = 0")
    return complex_time_heat_kernel(space, -1j * t, r)


def schrodinger_kernel_numeric(
    space: Space, t: float, grid: Optional[np.ndarray] = None, levels: int = 6
) -> RadialFunction:
    """Inverse spherical transform of w_t through the regularized eps-ladder.

    Raises:
        DomainError: t = 0
        NumericalError: Ladder did not converge
    """
    if t == 0:
        raise DomainError("Schroedinger kernel is singular at t = 0")
    grid = make_grid() if grid is None else np.asarray(grid, dtype=float)
    kernel = inverse_transform(
        space, schrodinger_multiplier(space, t), grid, regularize=True, levels=levels
    )
    kernel.metadata["t"] = t
    return kernel


def schrodinger_kernel(space: Space, t: float, grid: np.ndarray) -> RadialFunction:
    """Best available s_t: closed form on complex groups, direct Abel integral on H^2,
    regularized inverse transform otherwise."""
    if t == 0:
        raise DomainError("Schroedinger kernel is singular at t = 0")
    grid = np.asarray(grid, dtype=float)
    if space.is_complex_group:
        values = schrodinger_kernel_exact_complex(space, t, grid)
        return RadialFunction(grid, values, space, metadata={"t": t, "route": "closed_form"})
    if isinstance(space, RankOneSpace) and space.family is Family.R and space.n == 2:
        values = abel_values(schrodinger_multiplier(space, t), grid)
        return RadialFunction(grid, values, space, metadata={"t": t, "route": "abel"})
    return schrodinger_kernel_numeric(space, t, grid)


def verify_pointwise_bound(kernels: KernelGrid, profile: DispersiveProfile) -> PointwiseBound:
    """c* = max over the grid of |s_t(r)| / (psi(t, r) e^{-rho_m r}).

    Raises:
        DegenerateProfileError: Profile vanishes where the kernel does not
    """
    rho_m = kernels.space.rho_m
    best = 0.0
    worst_t = worst_r = float("nan")
    branches = set()
    for i, t in enumerate(kernels.times):
        shape = profile_value(profile, float(t), kernels.radii) * np.exp(-rho_m * kernels.radii)
        modulus = np.abs(kernels.values[i])
        bad = (shape <= 0) & (modulus > 0)
        if np.any(bad):
            raise DegenerateProfileError(
                f"profile vanishes at t={t}, r={kernels.radii[bad][0]} where the kernel is nonzero"
            )
        ratio = np.where(shape > 0, modulus / np.where(shape > 0, shape, 1.0), 0.0)
        j = int(np.argmax(ratio))
        if ratio[j] > best:
            best, worst_t, worst_r = float(ratio[j]), float(t), float(kernels.radii[j])
        branches.update(profile_branch(profile, float(t), float(r)) for r in kernels.radii)

    logger.debug(f"pointwise bound c*={best:.4g} at t={worst_t}, r={worst_r}")
    return PointwiseBound(best, worst_t, worst_r, sorted(branches))


def kernel_grid(space: Space, times: Sequence[float], radii: np.ndarray) -> KernelGrid:
    """Tabulate |s_t(r)| on a (t, r) grid with the best available kernel."""
    radii = np.asarray(radii, dtype=float)
    rows = [schrodinger_kernel(space, float(t), radii).values for t in times]
    return KernelGrid(space, np.asarray(times, dtype=float), radii, np.vstack(rows))


def lq_grid(q: float, n_points: int = 1024) -> np.ndarray:
    """Radial grid long enough for |s_t|^q delta to be negligible at the outer end."""
    r_max = min(80.0, 12.0 + 60.0 / (q - 2.0))
    return make_grid(r_max, n_points)


def kernel_Lq_norm(
    space: Space,
    t: float,
    q: float,
    grid: Optional[np.ndarray] = None,
    amplitude: float = 1.0,
) -> LqNorm:
    """||s_t||_{L^q(X)} = (c_X int |s_t|^q delta dr)^{1/q}, plus the e^{2 rho r} majorant.

    Raises:
        DomainError: q <= 2 or t = 0
    """
    if q <= 2:
        raise DomainError(f"kernel_Lq_norm needs q > 2, got q={q}")
    if t == 0:
        raise DomainError("kernel_Lq_norm needs t != 0")
    grid = lq_grid(q) if grid is None else np.asarray(grid, dtype=float)
    kernel = schrodinger_kernel(space, t, grid).scaled(amplitude)
    modulus_q = np.abs(kernel.values) ** q
    value = kernel.lq_norm(q)

    rank_one = space if isinstance(space, RankOneSpace) else None
    rho = rho_norm(space)
    volume = rank_one.volume_constant if rank_one else space.volume_constant
    weights = quadrature_weights(grid)
    majorant = (volume * float(np.sum(weights * modulus_q * np.exp(2.0 * rho * grid)))) ** (1.0 / q)
    if majorant < value:
        logger.warning(f"L^q majorant {majorant:.4g} below exact-measure value {value:.4g}")
    return LqNorm(float(t), float(q), value, majorant)


def measure_check(space: Space, grid: np.ndarray) -> float:
    """max over the grid of delta(r) e^{-2 rho r} (bounded by 1 for r >= 1)."""
    rank_one = space if isinstance(space, RankOneSpace) else None
    if rank_one is None:
        raise UnsupportedSpaceError("measure_check needs a rank-one space")
    grid = np.asarray(grid, dtype=float)
    return float(np.max(radial_density(rank_one, grid) * np.exp(-2.0 * rank_one.rho * grid)))


def heat_mass(space: Space, t: float, grid: Optional[np.ndarray] = None) -> float:
    """Total mass c_X int h_t delta dr of the heat kernel."""
    grid = make_grid() if grid is None else np.asarray(grid, dtype=float)
    if space.is_complex_group:
        values = heat_kernel_exact(space, t, grid)
    else:
        values = inverse_transform(space, heat_multiplier(space, t), grid).values.real
    return float(np.real(RadialFunction(grid, values, space).integrate()))


def branch_coverage(
    profile: DispersiveProfile, times: Sequence[float], radii: np.ndarray
) -> Dict[str, int]:
    """Count (t, r) grid points per psi_1 branch."""
    counts: Dict[str, int] = {}
    for t in times:
        for r in radii:
            key = profile_branch(profile, float(t), float(r))
            counts[key] = counts.get(key, 0) + 1
    return counts

