"""Spherical functions, Plancherel density and spherical Fourier transforms.

Normalizations (fixed once by the heat-kernel oracle on H^3 and frozen):

    forward:  Hf(lam) = c_X * int_0^inf f(r) phi_lam(r) delta(r) dr
    inverse:  f(r)    = int_0^inf Hf(lam) phi_lam(r) density(lam) dlam

where c_X is the sphere-area constant of the space, density(lam) = lam^2/(2 pi^2)
on H^3 and lam tanh(pi lam)/(2 pi) on H^2.
"""

import logging
import math
import threading
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple, Union

import numpy as np
from scipy import integrate, special

from disperse_lab.geometry.lie_data import (
    ComplexGroupSpace,
    Family,
    RankOneSpace,
    Space,
    make_rank_one_space,
    radial_density,
    rho_norm,
)
from disperse_lab.geometry.quadrature import gauss_panels, richardson
from disperse_lab.utils.errors import (
    DivergenceError,
    DomainError,
    NumericalError,
    OscillatoryMultiplierError,
    UnsupportedSpaceError,
)

logger = logging.getLogger(__name__)

DEFAULT_R_MAX = 12.0
DEFAULT_POINTS = 2048
DEFAULT_STRETCH = 2.0
DEFAULT_LAMBDA_MAX = 16.0
DEFAULT_LAMBDA_STEP = 0.01
TAIL_LOG = 36.0
LADDER_LEVELS = 6
LADDER_TOLERANCE = 1e-3

# (n_points, r_max, stretch) of grids built by make_grid
_MAPPED_GRIDS: List[Tuple[int, float, float]] = []
_PHI_CACHE: "OrderedDict[Tuple[Any, ...], np.ndarray]" = OrderedDict()
_PHI_CACHE_SIZE = 4
# guards both caches; transforms run on parallel_map worker threads
_CACHE_LOCK = threading.Lock()


# ---------------------------------------------------------------------------
# Grids and quadrature weights
# ---------------------------------------------------------------------------


def _mapped_radii(n_points: int, r_max: float, stretch: float) -> np.ndarray:
    x = np.linspace(0.0, 1.0, n_points)
    if stretch == 0:
        return r_max * x
    return r_max * np.sinh(stretch * x) / math.sinh(stretch)


def make_grid(
    r_max: float = DEFAULT_R_MAX, n_points: int = DEFAULT_POINTS, stretch: float = DEFAULT_STRETCH
) -> np.ndarray:
    """Radial grid r = r_max sinh(a x)/sinh(a), x uniform on [0, 1].

    The sinh map refines geometrically towards r = 0 (spacing ratio cosh(a)
    between the outer and inner ends).

    Args:
        r_max: Outer radius
        n_points: Number of grid points including r = 0
        stretch: Map parameter a (0 gives a uniform grid)

    Returns:
        Strictly increasing radii starting at 0
    """
    if r_max <= 0 or n_points < 3:
        raise DomainError(f"make_grid needs r_max > 0 and n_points >= 3 (got {r_max}, {n_points})")
    key = (int(n_points), float(r_max), float(stretch))
    with _CACHE_LOCK:
        if key not in _MAPPED_GRIDS:
            _MAPPED_GRIDS.append(key)
    return _mapped_radii(*key)


def _uniform_weights(n: int, h: float) -> np.ndarray:
    """Composite Simpson weights (3/8 rule on the last three intervals when needed)."""
    w = np.zeros(n)
    intervals = n - 1
    if intervals == 1:
        w[:] = 0.5 * h
        return w
    simpson_end = intervals if intervals % 2 == 0 else intervals - 3
    if simpson_end > 0:
        w[0:simpson_end + 1:2] += 2.0 * h / 3.0
        w[1:simpson_end:2] += 4.0 * h / 3.0
        w[0] -= h / 3.0
        w[simpson_end] -= h / 3.0
    if simpson_end < intervals:
        w[simpson_end:simpson_end + 4] += 3.0 * h / 8.0 * np.array([1.0, 3.0, 3.0, 1.0])
    return w


def quadrature_weights(grid: np.ndarray) -> np.ndarray:
    """Weights w with sum(w * g) ~ int_0^{r_max} g(r) dr on the grid.

    Grids from make_grid integrate in the uniform map variable (Simpson, exact
    Jacobian), which keeps spectral-like accuracy for even integrands. Any other
    grid falls back to scipy's nonuniform Simpson rule.
    """
    grid = np.asarray(grid, dtype=float)
    n = grid.size
    with _CACHE_LOCK:
        known = list(_MAPPED_GRIDS)
    for n_points, r_max, stretch in known:
        if n_points == n and r_max == grid[-1]:
            if np.array_equal(grid, _mapped_radii(n_points, r_max, stretch)):
                x = np.linspace(0.0, 1.0, n)
                if stretch == 0:
                    jac = np.full(n, r_max)
                else:
                    jac = r_max * stretch * np.cosh(stretch * x) / math.sinh(stretch)
                return _uniform_weights(n, 1.0 / (n - 1)) * jac

    steps = np.diff(grid)
    if np.allclose(steps, steps[0], rtol=1e-10, atol=0.0):
        return _uniform_weights(n, float(grid[-1] - grid[0]) / (n - 1))
    return integrate.simpson(np.eye(n), x=grid)


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------


@dataclass
class RadialFunction:
    """K-bi-invariant function sampled on a radial grid."""

    grid: np.ndarray
    values: np.ndarray
    space: Space
    singular_at_origin: bool = False
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.grid = np.asarray(self.grid, dtype=float)
        self.values = np.asarray(self.values, dtype=complex)
        if self.grid.ndim != 1 or self.grid.size < 2:
            raise DomainError("RadialFunction grid must be a 1-D array with at least 2 points")
        if self.grid[0] != 0.0:
            raise DomainError(f"RadialFunction grid must start at 0, got {self.grid[0]}")
        if np.any(np.diff(self.grid) <= 0):
            raise DomainError("RadialFunction grid must be strictly increasing")
        if self.values.shape != self.grid.shape:
            raise DomainError(
                f"values shape {self.values.shape} does not match grid shape {self.grid.shape}"
            )
        checked = self.values[1:] if self.singular_at_origin else self.values
        if not np.all(np.isfinite(checked)):
            raise DomainError("RadialFunction values must be finite")

    @property
    def weights(self) -> np.ndarray:
        if "_weights" not in self.__dict__:
            self.__dict__["_weights"] = quadrature_weights(self.grid)
        return self.__dict__["_weights"]

    def integrate(self, integrand: Optional[np.ndarray] = None) -> complex:
        """c_X * int g(r) delta(r) dr, with g = values unless given."""
        g = self.values if integrand is None else np.asarray(integrand)
        return radial_integral(self.space, self.grid, g, self.weights)

    def lq_norm(self, q: float) -> float:
        """L^q(X) norm with the full hyperbolic measure (q = inf gives the sup norm)."""
        if math.isinf(q):
            return float(np.max(np.abs(self.values)))
        return float(np.real(self.integrate(np.abs(self.values) ** q))) ** (1.0 / q)

    def scaled(self, factor: complex) -> "RadialFunction":
        return RadialFunction(
            self.grid,
            self.values * factor,
            self.space,
            self.singular_at_origin,
            dict(self.metadata),
        )


def radial_integral(
    space: Space, grid: np.ndarray, integrand: np.ndarray, weights: Optional[np.ndarray] = None
) -> complex:
    """c_X * int_0^{r_max} integrand(r) delta(r) dr on a radial grid."""
    rank_one = _rank_one_view(space)
    if rank_one is None:
        raise UnsupportedSpaceError(f"{_label(space)}: radial integrals need a rank-one space")
    w = quadrature_weights(grid) if weights is None else weights
    delta = radial_density(rank_one, np.asarray(grid, dtype=float))
    return complex(rank_one.volume_constant * np.sum(w * delta * integrand))


class SpectralMultiplier:
    """Even function of the spectral parameter, m(lam) = m(-lam).

    Args:
        evaluator: Callable on arrays of lam >= 0
        oscillatory: True for multipliers that are not absolutely integrable
            against the Plancherel density (e.g. w_t)
        lam_max: Truncation of the lam integral for non-Gaussian multipliers
        label: Human-readable name for logs and sidecars
    """

    def __init__(
        self,
        evaluator: Callable[[np.ndarray], np.ndarray],
        oscillatory: bool = False,
        lam_max: Optional[float] = None,
        label: str = "multiplier",
    ):
        self._evaluator = evaluator
        self.oscillatory = oscillatory
        self.lam_max = lam_max
        self.label = label
        self.symmetry_flag = True

    def __call__(self, lam: Union[float, np.ndarray]) -> np.ndarray:
        # even extension
        return np.asarray(self._evaluator(np.abs(np.asarray(lam))), dtype=complex)

    def scaled(self, factor: complex) -> "SpectralMultiplier":
        ev = self._evaluator
        return SpectralMultiplier(
            lambda lam: factor * ev(lam), self.oscillatory, self.lam_max, f"{factor}*{self.label}"
        )

    def damped(self, eps: float) -> "SpectralMultiplier":
        ev = self._evaluator
        return SpectralMultiplier(
            lambda lam: ev(lam) * np.exp(-eps * lam**2), False, self.lam_max, self.label
        )


class GaussianMultiplier(SpectralMultiplier):
    """m(lam) = A exp(-tau (lam^2 + rho_sq)), Re tau >= 0, tau != 0.

    tau = t gives the heat multiplier, tau = -i t the Schroedinger multiplier w_t.
    """

    def __init__(self, tau: complex, amplitude: complex = 1.0, rho_sq: float = 0.0):
        tau = complex(tau)
        if tau == 0 or tau.real < 0:
            raise DomainError(f"GaussianMultiplier needs Re tau >= 0 and tau != 0, got {tau}")
        self.tau = tau
        self.amplitude = complex(amplitude)
        self.rho_sq = float(rho_sq)
        super().__init__(
            lambda lam: self.amplitude * np.exp(-self.tau * (lam**2 + self.rho_sq)),
            oscillatory=tau.real == 0,
            label=f"gauss(tau={tau})",
        )

    def scaled(self, factor: complex) -> "GaussianMultiplier":
        return GaussianMultiplier(self.tau, self.amplitude * factor, self.rho_sq)

    def damped(self, eps: float) -> "GaussianMultiplier":
        """Shift tau -> tau + eps; the constant rho_sq part is damped as well."""
        return GaussianMultiplier(self.tau + eps, self.amplitude, self.rho_sq)

    def euclidean_profile(self, s: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """1-D inverse Fourier transform g(s) = (1/2pi) int m(lam) e^{i lam s} dlam and g'(s)."""
        pref = self.amplitude * np.exp(-self.tau * self.rho_sq) / np.sqrt(4.0 * np.pi * self.tau)
        g = pref * np.exp(-(s**2) / (4.0 * self.tau))
        return g, -s / (2.0 * self.tau) * g


def heat_multiplier(space: Space, t: float) -> GaussianMultiplier:
    """exp(-t (lam^2 + |rho|^2))."""
    if t <= 0:
        raise DomainError(f"heat multiplier needs t > 0, got t={t}")
    return GaussianMultiplier(t, 1.0, rho_norm(space) ** 2)


def schrodinger_multiplier(space: Space, t: float) -> GaussianMultiplier:
    """w_t(lam) = exp(i t (lam^2 + |rho|^2))."""
    if t == 0:
        raise DomainError("Schroedinger multiplier needs t != 0")
    return GaussianMultiplier(-1j * t, 1.0, rho_norm(space) ** 2)


@dataclass
class SpectralSamples:
    """Samples of a spherical transform on a lam grid."""

    lambdas: np.ndarray
    values: np.ndarray
    space: Space
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __call__(self, lam: Union[float, np.ndarray]) -> np.ndarray:
        lam = np.abs(np.asarray(lam, dtype=float))
        return np.interp(lam, self.lambdas, self.values.real) + 1j * np.interp(
            lam, self.lambdas, self.values.imag
        )


Multiplier = Union[SpectralMultiplier, SpectralSamples]


# ---------------------------------------------------------------------------
# Spherical functions and Plancherel density
# ---------------------------------------------------------------------------


def _label(space: Space) -> str:
    return space.label


def _rank_one_view(space: Space) -> Optional[RankOneSpace]:
    """The rank-one description of a space, if it has one (SL(2,C) is H^3)."""
    if isinstance(space, RankOneSpace):
        return space
    if space.rank == 1:
        return make_rank_one_space(Family.R, 3)
    return None


def _has_closed_form(space: Space) -> bool:
    rank_one = _rank_one_view(space)
    return rank_one is not None and rank_one.is_complex_group


def _require_real_family(space: Space, what: str) -> RankOneSpace:
    rank_one = _rank_one_view(space)
    if rank_one is None or rank_one.family is not Family.R:
        raise UnsupportedSpaceError(
            f"{what} on {_label(space)}: numerics are provided for real hyperbolic spaces "
            "and SL(2,C) only"
        )
    return rank_one


def _check_radii(r: Union[float, np.ndarray]) -> np.ndarray:
    arr = np.asarray(r, dtype=float)
    if np.any(arr < 0):
        raise DomainError("spherical functions require r >= 0")
    return arr


def plancherel_density(space: Space, lam: Union[float, np.ndarray], strict: bool = True):
    """Plancherel density |c(lam)|^{-2} in the normalization of inverse_transform.

    Args:
        space: Underlying space
        lam: Spectral parameter(s), lam >= 0
        strict: Only H^2 and H^3 are certified; with strict=False other rank-one
            spaces use the Jacobi c-function (best effort)

    Raises:
        UnsupportedSpaceError: Uncertified space in strict mode
    """
    lam_arr = np.asarray(lam, dtype=float)
    if np.any(lam_arr < 0):
        raise DomainError("plancherel_density requires lam >= 0")

    rank_one = _rank_one_view(space)
    if rank_one is None:
        raise UnsupportedSpaceError(f"{_label(space)}: Plancherel density only in rank one")

    if rank_one.family is Family.R and rank_one.n == 3:
        value = lam_arr**2 / (2.0 * math.pi**2)
    elif rank_one.family is Family.R and rank_one.n == 2:
        value = lam_arr * np.tanh(math.pi * lam_arr) / (2.0 * math.pi)
    elif strict:
        raise UnsupportedSpaceError(
            f"{_label(space)}: Plancherel density is certified on H2(R) and H3(R) only; "
            "pass strict=False for the c-function value"
        )
    else:
        value = _jacobi_density(rank_one, lam_arr)

    return float(value) if np.ndim(value) == 0 else value


def _jacobi_density(space: RankOneSpace, lam: np.ndarray) -> np.ndarray:
    """|c(lam)|^{-2} from the Jacobi c-function, scaled to the inverse-transform normalization."""
    alpha = (space.m_alpha + space.m_2alpha - 1) / 2.0
    beta = (space.m_2alpha - 1) / 2.0
    rho = space.rho
    z = 1j * np.where(lam == 0, 1e-300, lam)
    log_c = (
        (rho - z) * math.log(2.0)
        + special.loggamma(alpha + 1.0)
        + special.loggamma(z)
        - special.loggamma((z + rho) / 2.0)
        - special.loggamma((z + alpha - beta + 1.0) / 2.0)
    )
    inv_c_sq = np.exp(-2.0 * np.real(log_c))
    inv_c_sq = np.where(lam == 0, 0.0, inv_c_sq)
    return inv_c_sq * 2.0 ** (space.n - 1) / (2.0 * math.pi * space.volume_constant)


def _log_b(x: np.ndarray) -> np.ndarray:
    """log(x / (e^x - 1))."""
    return np.log(x) - np.log(np.expm1(x))


def _phi_quadrature(space: RankOneSpace, lam: complex, r: np.ndarray, nodes: Optional[int] = None):
    """phi_lam(r) on H^n(R) from its integral representation over psi in [0, pi].

    With s = -r cos(psi) and B(x) = x/(e^x - 1),

        phi_lam(r) = c_n e^{-(n-3) r/2} sinh(r)^{2-n}
                     * int_0^pi e^{i lam s} (r^2 - s^2)^{(n-2)/2}
                                (B(r+s) B(r-s))^{-(n-3)/2} dpsi

    with c_n = Gamma(n/2) / (sqrt(pi) Gamma((n-1)/2)). The integrand is smooth in psi.
    """
    n = space.n
    r_max = float(np.max(r)) if r.size else 0.0
    if nodes is None:
        nodes = 48 + int(math.ceil(1.5 * abs(lam) * r_max))
    x, w = np.polynomial.legendre.leggauss(nodes)
    psi = 0.5 * math.pi * (x + 1.0)
    w = 0.5 * math.pi * w

    out = np.ones(r.shape, dtype=complex)
    pos = r > 0
    if not np.any(pos):
        return out

    rr = r[pos][:, None]
    s = -rr * np.cos(psi)[None, :]
    a = rr + s
    b = rr - s
    log_cn = math.lgamma(n / 2.0) - 0.5 * math.log(math.pi) - math.lgamma((n - 1) / 2.0)
    log_w = (
        0.5 * (n - 2) * (np.log(a) + np.log(b))
        - 0.5 * (n - 3) * (_log_b(a) + _log_b(b))
        - (n - 2) * np.log(np.sinh(rr))
        - 0.5 * (n - 3) * rr
        + log_cn
    )
    integrand = np.exp(log_w + 1j * lam * s)
    out[pos] = integrand @ w
    return out


def _phi_closed_form(lam: complex, r: np.ndarray) -> np.ndarray:
    """sin(lam r) / (lam sinh r) on H^3 (complex lam allowed)."""
    r = np.asarray(r, dtype=float)
    ratio = np.ones_like(r)
    pos = r > 0
    ratio[pos] = r[pos] / np.sinh(r[pos])
    return np.sinc(lam * r / math.pi) * ratio


def phi0(space: Space, r: Union[float, np.ndarray]):
    """Basic spherical function phi_0 (values in (0, 1], phi_0(0) = 1).

    Complex groups use the product formula prod_{alpha > 0} alpha(H)/sinh alpha(H)
    on the chamber ray through rho; real hyperbolic spaces use quadrature.
    """
    arr = _check_radii(r)
    flat = np.atleast_1d(arr).astype(float)

    if isinstance(space, ComplexGroupSpace) and space.rank > 1:
        alphas = np.outer(flat, space.unit_ray()) @ space.roots_array().T
        safe = np.where(alphas == 0, 1.0, alphas)
        ratio = np.where(alphas == 0, 1.0, safe / np.sinh(safe))
        values = np.prod(ratio, axis=1)
    elif _has_closed_form(space):
        values = _phi_closed_form(0.0, flat).real
    else:
        rank_one = _require_real_family(space, "phi0")
        values = _phi_quadrature(rank_one, 0.0, flat).real

    return float(values[0]) if np.ndim(arr) == 0 else values


def phi_lambda(space: Space, lam: complex, r: Union[float, np.ndarray], verify: bool = False):
    """Elementary spherical function phi_lam(r).

    Args:
        space: Rank-one real hyperbolic space (or SL(2,C))
        lam: Spectral parameter; complex values are the analytic continuation
        r: Radii >= 0
        verify: Re-evaluate with 1.5x quadrature nodes and raise if the two disagree

    Raises:
        NumericalError: Quadrature did not settle (verify=True only)
    """
    arr = _check_radii(r)
    flat = np.atleast_1d(arr).astype(float)
    lam = complex(lam)

    if _has_closed_form(space):
        values = _phi_closed_form(lam, flat)
    else:
        rank_one = _require_real_family(space, "phi_lambda")
        values = _phi_quadrature(rank_one, lam, flat)
        if verify:
            base = 48 + int(math.ceil(1.5 * abs(lam) * float(flat.max())))
            finer = _phi_quadrature(rank_one, lam, flat, nodes=base + base // 2)
            residual = float(np.max(np.abs(finer - values)))
            if residual > 1e-8:
                raise NumericalError(
                    f"phi_lambda quadrature did not settle (residual {residual:.2e})",
                    {"residual": residual, "lam": lam, "nodes": base},
                )

    return complex(values[0]) if np.ndim(arr) == 0 else values


def phi_imaginary(space: Space, mu: float, r: Union[float, np.ndarray]):
    """phi_{-i mu}(r) for real mu (real-valued, >= phi_0)."""
    arr = _check_radii(r)
    flat = np.atleast_1d(arr).astype(float)
    if _has_closed_form(space):
        if mu == 0:
            values = _phi_closed_form(0.0, flat).real
        else:
            values = np.ones_like(flat)
            pos = flat > 0
            values[pos] = np.sinh(mu * flat[pos]) / (mu * np.sinh(flat[pos]))
    else:
        rank_one = _require_real_family(space, "phi_imaginary")
        values = _phi_quadrature(rank_one, -1j * mu, flat).real
    return float(values[0]) if np.ndim(arr) == 0 else values


def spherical_matrix(space: Space, lambdas: np.ndarray, grid: np.ndarray) -> np.ndarray:
    """phi_lam(r) for all (r, lam) pairs, shape (len(grid), len(lambdas)); cached."""
    lambdas = np.asarray(lambdas, dtype=float)
    grid = np.asarray(grid, dtype=float)
    key = (_label(space), lambdas.tobytes(), grid.tobytes())
    with _CACHE_LOCK:
        if key in _PHI_CACHE:
            _PHI_CACHE.move_to_end(key)
            return _PHI_CACHE[key]

    if _has_closed_form(space):
        ratio = np.ones_like(grid)
        ratio[grid > 0] = grid[grid > 0] / np.sinh(grid[grid > 0])
        matrix = np.sinc(np.outer(grid, lambdas) / math.pi) * ratio[:, None]
    else:
        rank_one = _require_real_family(space, "spherical_matrix")
        matrix = np.empty((grid.size, lambdas.size))
        for j, lam in enumerate(lambdas):
            matrix[:, j] = _phi_quadrature(rank_one, lam, grid).real
        logger.debug(f"Built {grid.size}x{lambdas.size} phi matrix on {_label(space)}")

    with _CACHE_LOCK:
        _PHI_CACHE[key] = matrix
        if len(_PHI_CACHE) > _PHI_CACHE_SIZE:
            _PHI_CACHE.popitem(last=False)
    return matrix


# ---------------------------------------------------------------------------
# Transforms
# ---------------------------------------------------------------------------


def default_lambdas(
    lam_max: float = DEFAULT_LAMBDA_MAX, step: float = DEFAULT_LAMBDA_STEP
) -> np.ndarray:
    n = int(round(lam_max / step))
    if n % 2:
        n += 1
    return np.linspace(0.0, lam_max, n + 1)


def forward_transform(
    space: Space, f: RadialFunction, lambdas: Optional[np.ndarray] = None
) -> SpectralSamples:
    """Hf(lam) = c_X int f(r) phi_lam(r) delta(r) dr on the grid of f.

    Raises:
        DivergenceError: f is not integrable on its grid (mass near r_max)
    """
    lambdas = default_lambdas() if lambdas is None else np.asarray(lambdas, dtype=float)
    if np.any(lambdas < 0):
        raise DomainError("forward_transform samples lam >= 0")

    grid = f.grid
    weights = f.weights
    rank_one = _rank_one_view(space)
    if rank_one is None:
        raise UnsupportedSpaceError(f"{_label(space)}: forward transform needs a rank-one space")

    values = np.where(np.isfinite(f.values), f.values, 0.0)
    mass_density = np.abs(values) * phi0(space, grid) * radial_density(rank_one, grid)
    total = float(np.sum(weights * mass_density))
    outer = grid >= 0.9 * grid[-1]
    tail = float(np.sum(weights[outer] * mass_density[outer]))
    if not np.isfinite(total) or (total > 0 and tail > 1e-6 * total):
        raise DivergenceError(
            f"forward_transform: input not integrable on the grid (outer share {tail / total:.2e})",
            {"total": total, "outer": tail},
        )

    phi = spherical_matrix(space, lambdas, grid)
    kernel = rank_one.volume_constant * weights * radial_density(rank_one, grid) * values
    hf = kernel @ phi
    logger.debug(f"forward_transform on {_label(space)}: {lambdas.size} lam samples")
    return SpectralSamples(lambdas, hf, space, {"grid_points": int(grid.size)})


def _lambda_nodes(
    m: SpectralMultiplier, r_max: float, tail_log: float
) -> Tuple[np.ndarray, np.ndarray]:
    if isinstance(m, GaussianMultiplier):
        lam_max = math.sqrt(tail_log / m.tau.real)
        omega = r_max + 2.0 * abs(m.tau.imag) * lam_max
    elif m.lam_max is not None:
        lam_max = float(m.lam_max)
        omega = r_max
    else:
        raise DomainError(f"{m.label}: non-Gaussian multipliers need lam_max for truncation")
    width = min(1.0, 3.0 / max(omega, 1e-12))
    n_panels = int(math.ceil(lam_max / width)) + 1
    return gauss_panels(0.0, lam_max, n_panels)


def _quadrature_inverse(
    space: Space, lam: np.ndarray, coeff: np.ndarray, grid: np.ndarray
) -> np.ndarray:
    """sum_j coeff_j phi_{lam_j}(r) for each r (coeff already includes density and weights)."""
    if _has_closed_form(space):
        out = np.empty(grid.size, dtype=complex)
        for i, r in enumerate(grid):
            out[i] = np.dot(coeff, np.sinc(lam * r / math.pi))
        ratio = np.ones_like(grid)
        ratio[grid > 0] = grid[grid > 0] / np.sinh(grid[grid > 0])
        return out * ratio
    return spherical_matrix(space, lam, grid) @ coeff


def inverse_transform(
    space: Space,
    m: Multiplier,
    grid: np.ndarray,
    regularize: bool = False,
    levels: int = LADDER_LEVELS,
    tail_log: float = TAIL_LOG,
) -> RadialFunction:
    """(H^{-1} m)(r) = int_0^inf m(lam) phi_lam(r) density(lam) dlam.

    Args:
        space: H^2, H^3 or SL(2,C) (other real hyperbolic spaces for
            non-oscillatory multipliers)
        m: Multiplier or transform samples
        grid: Radial grid
        regularize: Required for oscillatory multipliers; evaluates at
            tau + eps on a halving eps-ladder and Richardson-extrapolates eps -> 0
        levels: Ladder length
        tail_log: Truncate lam where the Gaussian damping drops below e^{-tail_log}

    Raises:
        OscillatoryMultiplierError: Oscillatory m without regularize=True
        NumericalError: Ladder did not converge (diagnostics attached)
    """
    grid = np.asarray(grid, dtype=float)
    RadialFunction(grid, np.zeros_like(grid), space)  # validates the grid

    if isinstance(m, SpectralSamples):
        lam = m.lambdas
        coeff = m.values * plancherel_density(space, lam) * quadrature_weights(lam)
        values = _quadrature_inverse(space, lam, coeff, grid)
        return RadialFunction(grid, values, space, metadata={"truncation": float(lam[-1])})

    if m.oscillatory:
        if not regularize:
            raise OscillatoryMultiplierError(
                f"{m.label} is oscillatory; call inverse_transform(..., regularize=True) "
                "to use the eps-ladder continuation"
            )
        if not isinstance(m, GaussianMultiplier):
            raise DomainError(
                "the eps-ladder continuation is implemented for Gaussian-type multipliers"
            )
        return _regularized_inverse(space, m, grid, levels, tail_log)

    if isinstance(m, GaussianMultiplier) and _is_h2(space):
        return euclidean_reduction_inverse(space, m, grid)

    lam, w = _lambda_nodes(m, float(grid[-1]), tail_log)
    coeff = m(lam) * plancherel_density(space, lam) * w
    values = _quadrature_inverse(space, lam, coeff, grid)
    logger.debug(f"inverse_transform on {_label(space)}: {lam.size} lam nodes up to {lam[-1]:.2f}")
    return RadialFunction(grid, values, space, metadata={"truncation": float(lam[-1])})


def _is_h2(space: Space) -> bool:
    return isinstance(space, RankOneSpace) and space.family is Family.R and space.n == 2


def _ladder(tau: complex, r_max: float, levels: int) -> np.ndarray:
    t = abs(tau.imag)
    eps0 = 0.5 * min(t, 4.0 * t * t / max(r_max**2, 1.0))
    return eps0 / 2.0 ** np.arange(levels)


def _regularized_inverse(
    space: Space, m: GaussianMultiplier, grid: np.ndarray, levels: int, tail_log: float
) -> RadialFunction:
    eps = _ladder(m.tau, float(grid[-1]), levels)

    if _is_h2(space):
        ladder = [euclidean_reduction_inverse(space, m.damped(e), grid).values for e in eps]
    elif _has_closed_form(space):
        ladder = _closed_form_ladder(m, grid, eps, tail_log)
    else:
        raise UnsupportedSpaceError(
            f"{_label(space)}: oscillatory inverse transforms are provided on H2(R) and H3(R)"
        )

    values, estimate = richardson(ladder)
    scale = max(float(np.max(np.abs(values))), 1e-300)
    worst = float(np.max(estimate))
    diagnostics = {
        "epsilon_ladder": eps.tolist(),
        "ladder_at_origin": [complex(v[0]) for v in ladder],
        "error_estimate": worst,
    }
    if worst > LADDER_TOLERANCE * scale:
        raise NumericalError(
            f"eps-ladder did not converge: estimate {worst:.2e} vs scale {scale:.2e}", diagnostics
        )
    logger.debug(f"eps-ladder {eps[0]:.3g}..{eps[-1]:.3g}, error estimate {worst:.2e}")
    return RadialFunction(
        grid,
        values,
        space,
        metadata={"epsilon_ladder": eps.tolist(), "error_estimate": worst},
    )


def _closed_form_ladder(
    m: GaussianMultiplier, grid: np.ndarray, eps: np.ndarray, tail_log: float
) -> List[np.ndarray]:
    """All ladder levels on H^3 from one set of lam nodes sized for the smallest eps."""
    t = abs(m.tau.imag)
    lam_max = math.sqrt(tail_log / (m.tau.real + eps[-1]))
    omega = 2.0 * t * lam_max + float(grid[-1])
    n_panels = int(math.ceil(lam_max * omega / 3.0)) + 1
    lam, w = gauss_panels(0.0, lam_max, n_panels)
    logger.debug(f"H3 ladder: {lam.size} lam nodes, lam_max={lam_max:.1f}")

    base = m(lam) * lam**2 / (2.0 * math.pi**2) * w
    damping = np.exp(-np.outer(eps, lam**2 + m.rho_sq))

    out = np.empty((eps.size, grid.size), dtype=complex)
    for i, r in enumerate(grid):
        out[:, i] = damping @ (base * np.sinc(lam * r / math.pi))
    ratio = np.ones_like(grid)
    ratio[grid > 0] = grid[grid > 0] / np.sinh(grid[grid > 0])
    return [row * ratio for row in out]


def abel_values(m: GaussianMultiplier, radii: np.ndarray, tail: float = 80.0) -> np.ndarray:
    """H^2 inverse transform of a Gaussian multiplier at arbitrary radii (Abel integral)."""
    radii = np.atleast_1d(np.asarray(radii, dtype=float))
    v_max = math.sqrt(tail)
    phase_rate = abs((1.0 / (4.0 * m.tau)).imag)
    values = np.empty(radii.size, dtype=complex)
    for i, r in enumerate(radii):
        phase = phase_rate * ((r + tail) ** 2 - r**2)
        n_panels = max(64, int(math.ceil(phase / 3.0)))
        v, w = gauss_panels(0.0, v_max, n_panels)
        s = r + v * v
        _, dg = m.euclidean_profile(s)
        jac = 2.0 * v / np.sqrt(2.0 * np.sinh(r + 0.5 * v * v) * np.sinh(0.5 * v * v))
        values[i] = -np.dot(w, dg * jac) / (math.sqrt(2.0) * math.pi)
    return values


def euclidean_reduction_inverse(
    space: Space, m: GaussianMultiplier, grid: np.ndarray, tail: float = 80.0
) -> RadialFunction:
    """Inverse transform on H^2 through the Abel integral.

    With g the 1-D Euclidean inverse Fourier transform of m,

        (H^{-1} m)(r) = -(1/(sqrt(2) pi)) int_r^inf g'(s) / sqrt(cosh s - cosh r) ds

    evaluated with s = r + v^2, where cosh s - cosh r = 2 sinh(r + v^2/2) sinh(v^2/2).
    The integral converges absolutely for every Re tau >= 0.
    """
    if not _is_h2(space):
        raise UnsupportedSpaceError(f"{_label(space)}: the Abel route is implemented on H2(R)")
    if not isinstance(m, GaussianMultiplier):
        raise DomainError("euclidean_reduction_inverse needs a GaussianMultiplier")

    grid = np.asarray(grid, dtype=float)
    values = abel_values(m, grid, tail)
    return RadialFunction(grid, values, space, metadata={"route": "abel", "tail": tail})


def complex_inverse(space: Space, m: Multiplier, grid: np.ndarray) -> RadialFunction:
    """Inverse transform on X = G/K with G complex: phi_0 times a Euclidean inverse FT.

    Gaussian multipliers use the closed form
    A e^{-tau |rho|^2} (4 pi tau)^{-n/2} phi_0(H) e^{-|H|^2 / 4 tau} along the rho ray;
    other multipliers are supported in rank one through the radial Euclidean
    (sine) transform.

    Raises:
        UnsupportedSpaceError: G is not complex
    """
    if not space.is_complex_group:
        raise UnsupportedSpaceError(f"{_label(space)}: complex_inverse needs a complex group")
    grid = np.asarray(grid, dtype=float)
    p0 = phi0(space, grid)

    if isinstance(m, GaussianMultiplier):
        tau = m.tau
        pref = m.amplitude * np.exp(-tau * m.rho_sq) * np.power(4.0 * np.pi * tau, -space.n / 2.0)
        values = pref * p0 * np.exp(-(grid**2) / (4.0 * tau))
        return RadialFunction(grid, values, space, metadata={"route": "closed_form"})

    if space.rank != 1:
        raise UnsupportedSpaceError(
            f"{_label(space)}: only Gaussian multipliers are supported beyond rank one"
        )
    if isinstance(m, SpectralSamples):
        lam, w = m.lambdas, quadrature_weights(m.lambdas)
        mv = m.values
    else:
        if m.oscillatory:
            raise OscillatoryMultiplierError(f"{m.label}: oscillatory non-Gaussian multiplier")
        lam, w = _lambda_nodes(m, float(grid[-1]), TAIL_LOG)
        mv = m(lam)

    # radial Euclidean inverse FT in R^3: (1/2pi^2) int m(lam) lam^2 sinc(lam r) dlam
    coeff = mv * lam**2 * w / (2.0 * math.pi**2)
    euclid = np.array([np.dot(coeff, np.sinc(lam * r / math.pi)) for r in grid])
    return RadialFunction(grid, p0 * euclid, space, metadata={"route": "sine_transform"})
