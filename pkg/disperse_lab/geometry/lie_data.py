"""Rank-one symmetric spaces and complex-group root data.

All spaces use the geodesic normalization: alpha(H0) = 1 with |H0| = 1, so the
radial coordinate r = |H| is the Riemannian distance to the origin.
"""

import logging
import math
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, Tuple, Union

import numpy as np

from disperse_lab.utils.errors import DomainError

logger = logging.getLogger(__name__)


class Family(str, Enum):
    """Rank-one families: real, complex, quaternionic, octonionic hyperbolic spaces."""

    R = "R"
    C = "C"
    H = "H"
    O = "O"


@dataclass(frozen=True)
class RankOneSpace:
    """Rank-one symmetric space X = G/K."""

    family: Family
    n: int
    m_alpha: int
    m_2alpha: int
    rho: float
    rho_m: float

    @property
    def label(self) -> str:
        """Short label, e.g. ``H3(R)``."""
        return f"H{self.n}({self.family.value})"

    @property
    def rank(self) -> int:
        return 1

    @property
    def is_complex_group(self) -> bool:
        """H^3(R) = SL(2,C)/SU(2) is the only rank-one space with G complex."""
        return self.family is Family.R and self.n == 3

    @property
    def volume_constant(self) -> float:
        """Constant c with dx = c * delta(r) dr * d(sigma) on X.

        The sphere area of S^{n-1}, divided by 2^{m_2alpha} because delta carries
        sinh(2r) rather than sinh(r) cosh(r).
        """
        sphere = 2.0 * math.pi ** (self.n / 2.0) / math.gamma(self.n / 2.0)
        return sphere / 2.0**self.m_2alpha

    def to_dict(self) -> Dict[str, object]:
        """Catalog dump record."""
        return {
            "family": self.family.value,
            "n": self.n,
            "m_alpha": self.m_alpha,
            "m_2alpha": self.m_2alpha,
            "rho": self.rho,
            "rho_m": self.rho_m,
        }


@dataclass(frozen=True)
class ComplexGroupSpace:
    """X = G/K for a complex semisimple G; every root has multiplicity 2.

    Roots are stored as vectors in a ~ R^d (ambient coordinates); alpha(H) is
    the Euclidean inner product.
    """

    label: str
    positive_roots: Tuple[Tuple[float, ...], ...]
    simple_roots: Tuple[Tuple[float, ...], ...]
    n: int
    rho: Tuple[float, ...]
    rho_m: float
    chamber_edges: Tuple[Tuple[float, ...], ...] = field(default=())

    @property
    def rank(self) -> int:
        return len(self.simple_roots)

    @property
    def is_complex_group(self) -> bool:
        return True

    @property
    def rho_norm(self) -> float:
        return float(np.linalg.norm(self.rho))

    def roots_array(self) -> np.ndarray:
        return np.asarray(self.positive_roots, dtype=float)

    def unit_ray(self) -> np.ndarray:
        """Default ray for radial sampling: the rho direction (interior of the chamber)."""
        rho = np.asarray(self.rho, dtype=float)
        return rho / np.linalg.norm(rho)

    @property
    def volume_constant(self) -> float:
        """Sphere-area constant; defined for the rank-one instance only."""
        if self.rank != 1:
            raise DomainError(f"{self.label}: volume constant only defined in rank one")
        return 4.0 * math.pi

    def to_dict(self) -> Dict[str, object]:
        return {
            "label": self.label,
            "n": self.n,
            "rank": self.rank,
            "rho": list(self.rho),
            "rho_m": self.rho_m,
        }


Space = Union[RankOneSpace, ComplexGroupSpace]


@dataclass(frozen=True)
class WeylData:
    """Weyl group data in rank one: W = {+1, -1} acting on a* ~ R."""

    group_order: int = 2
    chamber: str = "r >= 0"

    def symmetrize(
        self, f: Callable[[np.ndarray], np.ndarray]
    ) -> Callable[[np.ndarray], np.ndarray]:
        """Return the W-invariant average of f."""

        def _sym(lam: np.ndarray) -> np.ndarray:
            lam = np.asarray(lam)
            return 0.5 * (f(lam) + f(-lam))

        return _sym


def make_rank_one_space(family: Union[Family, str], n: int) -> RankOneSpace:
    """Build a rank-one space from its family and REAL dimension.

    Args:
        family: One of R, C, H, O
        n: Real dimension of X

    Returns:
        Populated RankOneSpace

    Raises:
        DomainError: Illegal (family, n) combination
    """
    try:
        fam = Family(family)
    except ValueError as e:
        raise DomainError(f"Unknown family {family!r}; expected one of R, C, H, O") from e

    if fam is Family.R:
        if n < 2:
            raise DomainError(f"H^n(R) requires n >= 2, got n={n}")
        m_alpha, m_2alpha = n - 1, 0
    elif fam is Family.C:
        if n % 2 != 0 or n < 4:
            raise DomainError(f"H^k(C) requires even real dimension n = 2k >= 4, got n={n}")
        m_alpha, m_2alpha = n - 2, 1
    elif fam is Family.H:
        if n % 4 != 0 or n < 8:
            raise DomainError(
                f"H^k(H) requires real dimension n = 4k divisible by 4 and >= 8, got n={n}"
            )
        m_alpha, m_2alpha = n - 4, 3
    else:
        if n != 16:
            raise DomainError(f"H^2(O) has real dimension 16, got n={n}")
        m_alpha, m_2alpha = 8, 7

    rho = m_alpha / 2.0 + m_2alpha
    space = RankOneSpace(fam, n, m_alpha, m_2alpha, rho, rho)
    logger.debug(f"Built {space.label}: m_alpha={m_alpha}, m_2alpha={m_2alpha}, rho={rho}")
    return space


def catalog() -> Tuple[RankOneSpace, ...]:
    """Representative spaces of every family (used by the ``lie`` subcommand)."""
    return (
        make_rank_one_space("R", 2),
        make_rank_one_space("R", 3),
        make_rank_one_space("R", 4),
        make_rank_one_space("C", 4),
        make_rank_one_space("H", 8),
        make_rank_one_space("O", 16),
    )


def make_complex_group_space(kind: str = "SL", k: int = 2) -> ComplexGroupSpace:
    """Root data of SL(k, C)/SU(k), type A_{k-1}.

    Roots e_i - e_j are scaled by 1/sqrt(2) so that SL(2,C) reproduces H^3 with
    alpha(H0) = 1, rho = 1.
    """
    if kind.upper() != "SL":
        raise DomainError(f"Only SL(k, C) root data is provided, got {kind!r}")
    if k < 2:
        raise DomainError(f"SL(k, C) requires k >= 2, got k={k}")

    eye = np.eye(k)
    scale = 1.0 / math.sqrt(2.0)
    positive = [scale * (eye[i] - eye[j]) for i in range(k) for j in range(i + 1, k)]
    simple = [scale * (eye[i] - eye[i + 1]) for i in range(k - 1)]

    # half-sum with multiplicity 2
    rho = np.sum(positive, axis=0)

    # chamber edges: fundamental coweights, minimal-norm solutions of alpha_i(w_j) = delta_ij
    edges = np.linalg.pinv(np.asarray(simple)).T
    unit_edges = [e / np.linalg.norm(e) for e in edges]
    rho_m = min(float(np.dot(rho, e)) for e in unit_edges)

    space = ComplexGroupSpace(
        label=f"SL({k},C)",
        positive_roots=tuple(tuple(float(x) for x in a) for a in positive),
        simple_roots=tuple(tuple(float(x) for x in a) for a in simple),
        n=k * k - 1,
        rho=tuple(float(x) for x in rho),
        rho_m=rho_m,
        chamber_edges=tuple(tuple(float(x) for x in e) for e in unit_edges),
    )
    logger.debug(f"Built {space.label}: n={space.n}, |rho|={space.rho_norm:.4f}, rho_m={rho_m:.4f}")
    return space


_SPACE_PATTERN = re.compile(r"^H(\d+)(?:\(([RCHO])\))?$")
_SL_PATTERN = re.compile(r"^SL\(?(\d+)(?:,C)?\)?$")


def parse_space(spec: str) -> Space:
    """Space from a label: ``H3``, ``H4(C)``, ``H16(O)`` or ``SL(3,C)``.

    A bare ``Hn`` is real hyperbolic space.

    Raises:
        DomainError: Unrecognized label
    """
    text = spec.replace(" ", "").upper()
    match = _SPACE_PATTERN.match(text)
    if match:
        return make_rank_one_space(match.group(2) or "R", int(match.group(1)))
    match = _SL_PATTERN.match(text)
    if match:
        return make_complex_group_space("SL", int(match.group(1)))
    raise DomainError(f"Unrecognized space {spec!r}; expected e.g. H3, H4(C) or SL(3,C)")


def class_s_note(space: Space) -> str:
    """Which quotients of this space are known to have the convolution property."""
    if isinstance(space, ComplexGroupSpace):
        return "lattices; discrete groups with delta(Gamma) < rho_m under the class-(S) hypothesis"
    if space.family in (Family.H, Family.O):
        return "all discrete Gamma (property (T)), delta(Gamma) < rho"
    return "lattices, and amenable Gamma with delta(Gamma) < rho"


def density_delta(space: RankOneSpace, r: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """Cartan density delta(r) = sinh^{m_alpha}(r) sinh^{m_2alpha}(2r).

    Raises:
        DomainError: Negative radius
    """
    arr = np.asarray(r, dtype=float)
    if np.any(arr < 0):
        raise DomainError("density_delta requires r >= 0")
    value = np.sinh(arr) ** space.m_alpha * np.sinh(2.0 * arr) ** space.m_2alpha
    return float(value) if np.ndim(value) == 0 else value


def complex_density_delta(space: ComplexGroupSpace, h: np.ndarray) -> np.ndarray:
    """delta(H) = prod_{alpha > 0} sinh^2 alpha(H) for H given as rows of ``h``."""
    h = np.atleast_2d(np.asarray(h, dtype=float))
    alphas = h @ space.roots_array().T
    return np.prod(np.sinh(alphas) ** 2, axis=1)


def radial_density(space: Space, r: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """delta along the radial coordinate for either kind of space (rank one or a ray)."""
    if isinstance(space, RankOneSpace):
        return density_delta(space, r)
    arr = np.asarray(r, dtype=float)
    if np.any(arr < 0):
        raise DomainError("radial density requires r >= 0")
    values = complex_density_delta(space, np.outer(np.atleast_1d(arr), space.unit_ray()))
    return float(values[0]) if np.ndim(arr) == 0 else values


def rho_norm(space: Space) -> float:
    """|rho|."""
    if isinstance(space, RankOneSpace):
        return space.rho
    return space.rho_norm


def rho_p(space: Space, p: float) -> float:
    """rho_p = |2/p - 1| * |rho|.

    Raises:
        DomainError: p < 1
    """
    if p < 1:
        raise DomainError(f"rho_p requires p >= 1, got p={p}")
    inv = 0.0 if math.isinf(p) else 1.0 / p
    return abs(2.0 * inv - 1.0) * rho_norm(space)


def conjugate_exponent(p: float) -> float:
    """p' with 1/p + 1/p' = 1 (1 <-> inf)."""
    if p == 1:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1.0)


def s_exponent(p: float) -> float:
    """s(p) = 2 min(1/p, 1/p').

    Raises:
        DomainError: p outside (1, inf)
    """
    if not (1.0 < p < math.inf):
        raise DomainError(f"s(p) requires 1 < p < inf, got p={p}")
    return 2.0 * min(1.0 / p, 1.0 - 1.0 / p)
