"""Automorphic Schroedinger kernel on M = Gamma\\X and fundamental-domain Monte Carlo."""

import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline

from disperse_lab.analysis.kernels import schrodinger_kernel_exact_complex
from disperse_lab.geometry.lie_data import radial_density
from disperse_lab.geometry.spherical import abel_values, schrodinger_multiplier
from disperse_lab.groups.catalog import in_fundamental_domain
from disperse_lab.groups.discrete_group import (
    DEFAULT_BUDGET,
    DiscreteGroup,
    Model,
    Point,
    apply,
    apply_many,
    cyclic_diagonal_length,
    distances_to,
    enumerate_orbit,
    hyperbolic_distance,
)
from disperse_lab.groups.poincare import (
    CriticalExponent,
    cyclic_distances,
    cyclic_tail,
    axis_position,
    critical_exponent_estimate,
    default_radius,
    growth_tail,
)
from disperse_lab.utils.errors import ClassViolationError, DomainError, UnsupportedGroupError

logger = logging.getLogger(__name__)

# kernel terms beyond this distance from the basepoint are dropped in Monte Carlo sums
ORBIT_CUTOFF = 40.0
ENVELOPE_WINDOW = 40.0
MAX_TRUNCATION = 128.0
MAX_ORBIT_RADIUS = 48.0
CHUNK = 100_000

RadialProfile = Callable[[np.ndarray], np.ndarray]


@dataclass
class AutomorphicValue:
    """Truncated sum_gamma s_t(x, gamma y) with its tail bound."""

    value: complex
    tail_bound: float
    terms: int
    radius: float
    epsilon: float
    certificate: str


@dataclass
class QuotientIntegral:
    """Monte Carlo estimate of a fundamental-domain integral and its standard error."""

    mean: float
    stderr: float
    samples: int
    accepted: int


@dataclass
class QuotientNorm:
    """(int_FD |s_hat_t(x, y)|^q dy)^{1/q} with a delta-method standard error."""

    t: float
    q: float
    value: float
    stderr: float
    samples: int
    accepted: int


@dataclass
class UnfoldingResult:
    """int_FD sum_gamma F(gamma y) dy against int_X F dy for a Gaussian bump F."""

    monte_carlo: float
    stderr: float
    exact: float
    sigma: float

    @property
    def deviation(self) -> float:
        """|MC - exact| in units of the standard error."""
        if self.stderr == 0:
            return 0.0 if self.monte_carlo == self.exact else math.inf
        return abs(self.monte_carlo - self.exact) / self.stderr


def class_gate(
    group: DiscreteGroup, exponent: Optional[CriticalExponent] = None
) -> CriticalExponent:
    """Admit the group for automorphic runs iff delta_hat + interval < rho_m.

    Raises:
        ClassViolationError: Gate fails, or the group is not flagged class (S)
    """
    rho_m = group.space.rho_m
    if not group.class_s:
        raise ClassViolationError(f"{group.label}: group is not flagged as class (S)")
    exponent = critical_exponent_estimate(group) if exponent is None else exponent
    if not exponent.admits(rho_m):
        raise ClassViolationError(
            f"{group.label}: critical exponent {exponent.estimate:.3f} "
            f"(upper {exponent.ci_high:.3f}) not below rho_m={rho_m}"
        )
    return exponent


def kernel_values(model: Model, t: float, dists: np.ndarray) -> np.ndarray:
    """s_t at the given distances: closed form on H^3, Abel integral on H^2."""
    dists = np.asarray(dists, dtype=float)
    if model is Model.H3:
        return np.asarray(schrodinger_kernel_exact_complex(model.space, t, dists), dtype=complex)
    return abel_values(schrodinger_multiplier(model.space, t), dists)


def kernel_table(model: Model, t: float, r_max: float = ORBIT_CUTOFF + 20.0) -> RadialProfile:
    """Vectorized s_t for Monte Carlo sums; H^2 values come from a cubic spline table."""
    if model is Model.H3:
        return lambda d: kernel_values(model, t, d)
    grid = np.linspace(0.0, r_max, int(r_max * 100) + 1)
    values = kernel_values(model, t, grid)
    re, im = CubicSpline(grid, values.real), CubicSpline(grid, values.imag)
    logger.debug(f"H2 kernel table at t={t}: {grid.size} nodes up to r={r_max}")

    def _lookup(d: np.ndarray) -> np.ndarray:
        out = re(d) + 1j * im(d)
        return np.where(d <= r_max, out, 0.0)

    return _lookup


def _envelope(model: Model, t: float, start: float, s_env: float) -> float:
    """max of |s_t(r)| e^{s_env r} over [start, start + window]."""
    r = np.linspace(start, start + ENVELOPE_WINDOW, 81)
    return float(np.max(np.abs(kernel_values(model, t, r)) * np.exp(s_env * r)))


def _cyclic_kernel_tail(
    model: Model, t: float, ell: float, delta: float, k_max: int, s_env: float
) -> float:
    """Bound on sum over |k| > K of |s_t(d(x, g^k y))| using d >= |k ell - delta|."""
    if model is Model.H3:
        n_terms = int(min(1e6, math.ceil(750.0 / ell)))
        k = np.arange(k_max + 1, k_max + 1 + n_terms)
        lower = np.concatenate([k * ell - delta, k * ell + delta])
        lower = np.maximum(lower, 1e-300)
        # r / sinh r = 2 r e^{-r} / (1 - e^{-2r})
        ratio = 2.0 * lower * np.exp(-lower) / -np.expm1(-2.0 * lower)
        return (4.0 * math.pi * abs(t)) ** -1.5 * math.fsum(ratio)
    start = (k_max + 1) * ell - abs(delta)
    return _envelope(model, t, start, s_env) * cyclic_tail(s_env, ell, delta, k_max)


def _complex_fsum(values: np.ndarray) -> complex:
    return complex(math.fsum(values.real), math.fsum(values.imag))


def automorphic_kernel(
    group: DiscreteGroup,
    t: float,
    x: Optional[Point] = None,
    y: Optional[Point] = None,
    epsilon: Optional[float] = None,
    tol: float = 1e-10,
    exponent: Optional[CriticalExponent] = None,
    budget: int = DEFAULT_BUDGET,
) -> AutomorphicValue:
    """s_hat_t(x, y) = sum_gamma s_t(d(x, gamma y)) with an honest tail bound.

    Cyclic groups sum |k| <= K and bound the rest through the axis projection
    (explicitly on H^3, via c_eps times the geometric Poincare tail on H^2).
    Other groups sum the orbit within a radius R and bound the tail by
    c_eps(R) times the Poincare tail at s = rho_m - eps.

    Args:
        group: Discrete group passing the class gate
        t: Time, nonzero
        x, y: Points (default: group basepoint)
        epsilon: Exponent margin; defaults to (rho_m - delta_hat) / 2
        tol: Target tail bound
        exponent: Precomputed critical exponent estimate
        budget: Orbit enumeration budget

    Raises:
        DomainError: t = 0
        ClassViolationError: Gate fails
    """
    if t == 0:
        raise DomainError("automorphic_kernel needs t != 0")
    model = group.model
    x = group.basepoint() if x is None else x
    y = x if y is None else y
    exponent = class_gate(group, exponent)
    rho_m = group.space.rho_m
    eps = 0.5 * (rho_m - max(exponent.estimate, 0.0)) if epsilon is None else float(epsilon)
    if not 0 < eps < rho_m:
        raise DomainError(f"epsilon must lie in (0, rho_m={rho_m}), got {eps}")
    s_env = rho_m - eps

    if group.rank == 0:
        d = np.array([hyperbolic_distance(model, x, y)])
        value = complex(kernel_values(model, t, d)[0])
        return AutomorphicValue(value, 0.0, 1, float(d[0]), eps, "trivial")

    ell = cyclic_diagonal_length(group)
    if ell is not None:
        delta = axis_position(model, x) - axis_position(model, y)
        k_max = max(1, int(math.ceil(abs(delta) / ell)))
        k_cap = max(k_max, int(math.ceil(MAX_TRUNCATION / ell)))
        while True:
            tail = _cyclic_kernel_tail(model, t, ell, delta, k_max, s_env)
            if tail <= tol or k_max >= k_cap:
                break
            k_max = min(2 * k_max, k_cap)
        _, dists = cyclic_distances(group, x, y, k_max)
        value = _complex_fsum(kernel_values(model, t, dists))
        if tail > tol:
            logger.warning(f"{group.label}: automorphic tail {tail:.2e} above tol {tol:.1e}")
        logger.debug(f"{group.label}: |k| <= {k_max}, tail {tail:.2e}")
        return AutomorphicValue(value, tail, dists.size, k_max * ell, eps, "cyclic")

    radius = default_radius(group, x)
    while True:
        orbit = enumerate_orbit(group, x, y, radius=radius, budget=budget)
        dists = orbit.distances()
        tail = _envelope(model, t, radius, s_env) * growth_tail(dists, radius, s_env)
        if tail <= tol or radius >= MAX_ORBIT_RADIUS or not orbit.complete:
            break
        radius = min(radius + 8.0, MAX_ORBIT_RADIUS)
    value = _complex_fsum(kernel_values(model, t, dists))
    if tail > tol:
        logger.warning(f"{group.label}: automorphic tail {tail:.2e} above tol at R={radius}")
    return AutomorphicValue(value, tail, len(dists), radius, eps, orbit.certificate)


# ---------------------------------------------------------------------------
# Monte Carlo over fundamental domains
# ---------------------------------------------------------------------------


def _truncated_exponential(rng: np.random.Generator, size: int, reach: float):
    """Radii with density e^{-r} / (1 - e^{-reach}) on [0, reach], and that density."""
    norm = -math.expm1(-reach)
    r = -np.log1p(-rng.random(size) * norm)
    return r, np.exp(-r) / norm


def _fermi_chunk(
    group: DiscreteGroup, rng: np.random.Generator, size: int, reach: float, ell: float
):
    """Samples of the slab 0 <= s < ell around the vertical axis, with volume weights."""
    rho, pdf = _truncated_exponential(rng, size, reach)
    s = rng.random(size) * ell
    if group.model is Model.H3:
        theta = rng.random(size) * 2.0 * math.pi
        hs = np.exp(s) / np.cosh(rho)
        zs = np.exp(s) * np.tanh(rho) * np.exp(1j * theta)
        weight = 2.0 * math.pi * ell * np.sinh(rho) * np.cosh(rho) / pdf
    else:
        sign = np.where(rng.random(size) < 0.5, -1.0, 1.0)
        hs = np.exp(s) / np.cosh(rho)
        zs = (np.exp(s) * np.tanh(sign * rho)).astype(complex)
        weight = 2.0 * ell * np.cosh(rho) / pdf
    return zs, hs, weight


def _polar_chunk(model: Model, x: Point, rng: np.random.Generator, size: int, reach: float):
    """Geodesic polar samples around x with volume weights."""
    r, pdf = _truncated_exponential(rng, size, reach)
    if model is Model.H3:
        cphi = rng.uniform(-1.0, 1.0, size)
        psi = rng.random(size) * 2.0 * math.pi
        denom = np.cosh(r) - np.sinh(r) * cphi
        zs = np.sinh(r) * np.sqrt(1.0 - cphi * cphi) * np.exp(1j * psi) / denom
        weight = 4.0 * math.pi * np.sinh(r) ** 2 / pdf
        w0, k0 = x  # type: ignore[misc]
    else:
        theta = rng.random(size) * 2.0 * math.pi
        denom = np.cosh(r) - np.sinh(r) * np.cos(theta)
        zs = (np.sinh(r) * np.sin(theta) / denom).astype(complex)
        weight = 2.0 * math.pi * np.sinh(r) / pdf
        w0, k0 = complex(complex(x).real), complex(x).imag  # type: ignore[arg-type]
    hs = 1.0 / denom
    return k0 * zs + w0, k0 * hs, weight


def _orbit_points(group: DiscreteGroup, x: Point, radius: float, budget: int) -> List[Point]:
    orbit = enumerate_orbit(group, x, x, radius=radius, budget=budget)
    if not orbit.complete:
        logger.warning(f"{group.label}: orbit incomplete, Monte Carlo sum truncated early")
    return [apply(group.model, e.matrix, x) for e in orbit.entries]


def fundamental_domain_integral(
    group: DiscreteGroup,
    profile: RadialProfile,
    power: float,
    x: Optional[Point] = None,
    samples: int = 1_000_000,
    seed: int = 0,
    reach: float = 20.0,
    cutoff: float = ORBIT_CUTOFF,
    budget: int = DEFAULT_BUDGET,
) -> QuotientIntegral:
    """Monte Carlo int_FD |sum_gamma profile(d(x, gamma y))|^power dy.

    Cyclic groups sample the Fermi slab around the axis; trivial and Schottky
    groups sample geodesic polar coordinates around x and keep the points of
    the disc-bounded fundamental domain.

    Raises:
        UnsupportedGroupError: No fundamental domain description for the group
    """
    model = group.model
    x = group.basepoint() if x is None else x
    ell = cyclic_diagonal_length(group)
    if ell is None and group.kind not in ("trivial", "schottky"):
        raise UnsupportedGroupError(
            f"{group.label}: Monte Carlo needs a cyclic, trivial or Schottky fundamental domain"
        )
    if samples < 2:
        raise DomainError("Monte Carlo needs at least two samples")

    rng = np.random.default_rng(seed)
    if ell is not None:
        g = group.generators[0]
        span = int(math.ceil((cutoff + abs(axis_position(model, x))) / ell)) + 1
        powers = [np.diag([g[0, 0] ** k, g[1, 1] ** k]) for k in range(-span, span + 1)]
        points: List[Point] = []
    else:
        points = _orbit_points(group, x, reach + cutoff, budget)
        powers = []

    total = total_sq = 0.0
    accepted = 0
    done = 0
    while done < samples:
        size = min(CHUNK, samples - done)
        done += size
        if ell is not None:
            zs, hs, weight = _fermi_chunk(group, rng, size, reach, ell)
            acc = np.zeros(size, dtype=complex)
            for mat in powers:
                zk, hk = apply_many(model, mat, zs, hs)
                acc += profile(distances_to(model, x, zk, hk))
            accepted += size
        else:
            zs, hs, weight = _polar_chunk(model, x, rng, size, reach)
            keep = in_fundamental_domain(group, zs, hs)
            acc = np.zeros(size, dtype=complex)
            if np.any(keep):
                zk, hk = zs[keep], hs[keep]
                part = np.zeros(zk.size, dtype=complex)
                for p in points:
                    d = distances_to(model, p, zk, hk)
                    part += np.where(d <= cutoff, profile(np.minimum(d, cutoff)), 0.0)
                acc[keep] = part
            weight = np.where(keep, weight, 0.0)
            accepted += int(np.count_nonzero(keep))
        vals = weight * np.abs(acc) ** power
        total += float(np.sum(vals))
        total_sq += float(np.sum(vals * vals))

    mean = total / samples
    var = max(total_sq / samples - mean * mean, 0.0)
    stderr = math.sqrt(var / (samples - 1))
    logger.debug(f"{group.label}: MC mean {mean:.4g} +- {stderr:.2g} ({accepted}/{samples} in FD)")
    return QuotientIntegral(mean, stderr, samples, accepted)


def quotient_Lq_norm(
    group: DiscreteGroup,
    t: float,
    q: float,
    x: Optional[Point] = None,
    samples: int = 1_000_000,
    seed: int = 0,
    budget: int = DEFAULT_BUDGET,
) -> QuotientNorm:
    """||s_hat_t(x, .)||_{L^q(M)} by Monte Carlo over a fundamental domain.

    Sampling is concentrated within distance 3 (1 + |t|) of x (at least 20 for
    cyclic and trivial groups, at most 20 for Schottky groups).

    Raises:
        DomainError: q <= 2 or t = 0
        ClassViolationError: Gate fails
        UnsupportedGroupError: Unknown fundamental domain
    """
    if q <= 2:
        raise DomainError(f"quotient_Lq_norm needs q > 2, got q={q}")
    if t == 0:
        raise DomainError("quotient_Lq_norm needs t != 0")
    class_gate(group)
    scale = 3.0 * (1.0 + abs(t))
    if group.kind == "schottky":
        reach, cutoff = min(scale, 20.0), 12.0
    else:
        reach, cutoff = max(scale, 20.0), ORBIT_CUTOFF
    profile = kernel_table(group.model, t)
    integral = fundamental_domain_integral(
        group, profile, q, x, samples, seed, reach=reach, cutoff=cutoff, budget=budget
    )
    value = integral.mean ** (1.0 / q) if integral.mean > 0 else 0.0
    stderr = value * integral.stderr / (q * integral.mean) if integral.mean > 0 else 0.0
    logger.info(f"{group.label}: ||s_hat_{t:g}||_L{q:g}(M) = {value:.5g} +- {stderr:.2g}")
    return QuotientNorm(float(t), float(q), value, stderr, integral.samples, integral.accepted)


def unfolding_check(
    group: DiscreteGroup,
    sigma: float = 1.0,
    samples: int = 1_000_000,
    seed: int = 0,
    budget: int = DEFAULT_BUDGET,
) -> UnfoldingResult:
    """Weyl-formula check int_FD sum_gamma F(gamma y) dy = int_X F dy.

    F(y) = exp(-d(o, y)^2 / 2 sigma^2) around the group basepoint o.
    """
    if sigma <= 0:
        raise DomainError(f"sigma must be positive, got {sigma}")
    space = group.space

    def bump(d: np.ndarray) -> np.ndarray:
        return np.exp(-(d**2) / (2.0 * sigma**2))

    reach = 12.0 * sigma
    integral = fundamental_domain_integral(
        group, bump, 1.0, None, samples, seed, reach=reach, cutoff=reach, budget=budget
    )
    exact, _ = integrate.quad(
        lambda r: math.exp(-r * r / (2.0 * sigma**2)) * radial_density(space, r), 0.0, reach
    )
    exact *= space.volume_constant
    result = UnfoldingResult(integral.mean, integral.stderr, exact, sigma)
    logger.info(
        f"{group.label}: unfolding MC {result.monte_carlo:.5g} +- {result.stderr:.2g} "
        f"vs exact {exact:.5g} ({result.deviation:.2f} sigma)"
    )
    return result
