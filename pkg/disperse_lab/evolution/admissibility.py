"""Admissible Strichartz pairs, the well-posedness range of gamma, and TT* kernel norms."""

import logging
import math
from dataclasses import dataclass
from numbers import Real
from typing import Optional, Tuple, Union

from disperse_lab.geometry.lie_data import conjugate_exponent
from disperse_lab.utils.errors import DomainError

logger = logging.getLogger(__name__)

ADMISSIBLE_TOLERANCE = 1e-12

Exponent = Union[float, Real]


@dataclass
class AdmissiblePair:
    """(p, q) with (1/p, 1/q) in the triangle T_n."""

    p: float
    q: float
    n: int

    def __post_init__(self) -> None:
        if not is_admissible(self.n, self.p, self.q):
            raise DomainError(f"(p, q) = ({self.p}, {self.q}) is not admissible for n={self.n}")

    @property
    def dual(self) -> Tuple[float, float]:
        """(p', q')."""
        return conjugate_exponent(self.p), conjugate_exponent(self.q)


@dataclass
class TTStarNorms:
    """L^1 norms of the TT* kernels |u|^{-3/2} 1_{|u| >= 1} and |u|^{-e} 1_{|u| <= 1}."""

    k1: float
    k2: Optional[float]
    exponent: float

    @property
    def k2_divergent(self) -> bool:
        return self.k2 is None


def _reciprocal(p: Exponent) -> Exponent:
    if isinstance(p, float) and math.isinf(p):
        return 0.0
    if p <= 0:
        raise DomainError(f"exponents must be positive or infinite, got {p}")
    return 1 / p


def in_triangle(
    n: int, inv_p: Exponent, inv_q: Exponent, tol: float = ADMISSIBLE_TOLERANCE
) -> bool:
    """(1/p, 1/q) in (0, 1/2] x (0, 1/2) with 2/p + n/q >= n/2, or the point (0, 1/2).

    Exact for Fraction inputs (pass tol=0).
    """
    if inv_p == 0 and inv_q * 2 == 1:
        return True
    if not (0 < inv_p <= 0.5 + tol and 0 < inv_q < 0.5):
        return False
    return 2 * inv_p + n * inv_q >= n / 2 - tol


def is_admissible(n: int, p: Exponent, q: Exponent) -> bool:
    """Membership of (1/p, 1/q) in T_n, including the isolated endpoint (p, q) = (inf, 2)."""
    return in_triangle(n, _reciprocal(p), _reciprocal(q))


def gamma_range(n: int) -> Tuple[float, float]:
    """(1, 1 + 4/n]: nonlinearity orders with small-data global well-posedness."""
    if n < 1:
        raise DomainError(f"dimension must be positive, got n={n}")
    return 1.0, 1.0 + 4.0 / n


def check_gamma(n: int, gamma: float) -> float:
    """Return gamma if it lies in (1, 1 + 4/n].

    Raises:
        DomainError: gamma outside the range
    """
    low, high = gamma_range(n)
    if not (low < gamma <= high + ADMISSIBLE_TOLERANCE):
        raise DomainError(f"gamma must lie in (1, {high:g}] for n={n}, got {gamma}")
    return gamma


def ttstar_exponent(n: int, q: float) -> float:
    """e = n (1/2 - 1/q), the small-|u| singularity of the TT* kernel."""
    if not q > 2:
        raise DomainError(f"TT* kernels need q > 2, got q={q}")
    return n * (0.5 - (0.0 if math.isinf(q) else 1.0 / q))


def ttstar_kernel_norms(n: int, q: float) -> TTStarNorms:
    """||k_1||_1 = int_{|u|>=1} |u|^{-3/2} du = 4 and ||k_2||_1 = 2/(1 - e) when e < 1.

    k_2 is integrable iff e = n (1/2 - 1/q) < 1, i.e. 1/q > 1/2 - 1/n.
    """
    e = ttstar_exponent(n, q)
    # 2 * [-2 u^{-1/2}]_1^inf
    k1 = 2.0 * 2.0
    k2 = 2.0 / (1.0 - e) if e < 1.0 else None
    if k2 is None:
        logger.debug(f"TT* kernel k2 not integrable: n={n}, q={q}, exponent {e:.4f} >= 1")
    return TTStarNorms(k1, k2, e)


def integrability_threshold(n: int) -> float:
    """q* = 2n/(n - 2) where k_2 stops being integrable (inf for n <= 2)."""
    if n <= 2:
        return math.inf
    return 2.0 * n / (n - 2.0)
