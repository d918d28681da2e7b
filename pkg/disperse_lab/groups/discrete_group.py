"""Discrete matrix groups acting on H^2 and H^3; distances and orbit enumeration."""

import logging
import math
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np

from disperse_lab.geometry.lie_data import RankOneSpace, make_rank_one_space
from disperse_lab.utils.errors import DomainError

logger = logging.getLogger(__name__)

DET_TOLERANCE = 1e-12
DEDUP_TOLERANCE = 1e-9
DEFAULT_BUDGET = 200000

# H^2 points are complex numbers with Im z > 0; H^3 points are (z, h) with h > 0.
Point = Union[complex, Tuple[complex, float]]


class Model(str, Enum):
    """Upper half-plane / upper half-space models."""

    H2 = "upper_half_plane_H2"
    H3 = "upper_half_space_H3"

    @property
    def space(self) -> RankOneSpace:
        return make_rank_one_space("R", 2 if self is Model.H2 else 3)


@dataclass
class DiscreteGroup:
    """Finitely generated discrete group given by SL(2) generators.

    ``kind`` is one of trivial, cyclic, schottky or custom; catalog groups carry
    their construction parameters (translation lengths) in ``params``.
    ``class_s`` records the eta_Gamma = 0 hypothesis, which is taken on trust.
    """

    model: Model
    generators: List[np.ndarray]
    label: str = "group"
    kind: str = "custom"
    params: Dict[str, float] = field(default_factory=dict)
    class_s: bool = True

    def __post_init__(self) -> None:
        self.model = Model(self.model)
        gens = []
        for i, g in enumerate(self.generators):
            m = np.asarray(g, dtype=complex)
            if m.shape != (2, 2):
                raise DomainError(f"generators[{i}]: expected a 2x2 matrix, got shape {m.shape}")
            det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
            if abs(det - 1.0) > DET_TOLERANCE:
                raise DomainError(
                    f"generators[{i}]: |det - 1| = {abs(det - 1.0):.3e} exceeds 1e-12"
                )
            if self.model is Model.H2 and np.max(np.abs(m.imag)) > 0:
                raise DomainError(f"generators[{i}]: H2 generators must be real")
            gens.append(m)
        self.generators = gens

    @property
    def space(self) -> RankOneSpace:
        return self.model.space

    @property
    def rank(self) -> int:
        """Number of generators."""
        return len(self.generators)

    def symbols(self) -> List[np.ndarray]:
        """Generators and inverses; symbol 2i is g_i, 2i+1 is g_i^{-1}."""
        out = []
        for g in self.generators:
            out.append(g)
            out.append(np.array([[g[1, 1], -g[0, 1]], [-g[1, 0], g[0, 0]]]))
        return out

    def basepoint(self) -> Point:
        """Default basepoint (i, resp. (0, 1)); lies on the axis of catalog cyclic groups."""
        return 1j if self.model is Model.H2 else (0j, 1.0)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "model": self.model.value,
            "label": self.label,
            "generators": [
                [[[float(v.real), float(v.imag)] for v in row] for row in g]
                for g in self.generators
            ],
        }


@dataclass
class OrbitEntry:
    word: Tuple[int, ...]
    matrix: np.ndarray
    distance: float


@dataclass
class GroupOrbit:
    """Orbit points gamma y with their distances d(x, gamma y)."""

    entries: List[OrbitEntry]
    x: Point
    y: Point
    radius: Optional[float]
    max_length: Optional[int]
    complete: bool
    certificate: str
    torsion_suspect: bool = False

    def distances(self) -> np.ndarray:
        return np.array([e.distance for e in self.entries])

    def __len__(self) -> int:
        return len(self.entries)


def _check_point(model: Model, x: Point) -> Tuple[complex, float]:
    if model is Model.H2:
        z = complex(x)  # type: ignore[arg-type]
        if not z.imag > 0:
            raise DomainError(f"H2 point must satisfy Im z > 0, got {z}")
        return complex(z.real, 0.0), z.imag
    z, h = x  # type: ignore[misc]
    if not h > 0:
        raise DomainError(f"H3 point must have height h > 0, got h={h}")
    return complex(z), float(h)


def hyperbolic_distance(model: Union[Model, str], x: Point, y: Point) -> float:
    """Riemannian distance in the half-plane / half-space model (curvature -1).

    cosh d = 1 + (|z - w|^2 + (h - k)^2) / (2 h k), evaluated as
    d = 2 asinh(sqrt(|z - w|^2 + (h - k)^2) / (2 sqrt(h k))).

    Raises:
        DomainError: A point on (or beyond) the boundary
    """
    model = Model(model)
    z, h = _check_point(model, x)
    w, k = _check_point(model, y)
    chord = math.sqrt(abs(z - w) ** 2 + (h - k) ** 2)
    return 2.0 * math.asinh(chord / (2.0 * math.sqrt(h * k)))


def distances_to(model: Model, x: Point, zs: np.ndarray, hs: np.ndarray) -> np.ndarray:
    """Vectorized d(x, (z_i, h_i)); for H2 pass z_i real parts and h_i imaginary parts."""
    z0, h0 = _check_point(model, x)
    chord = np.sqrt(np.abs(zs - z0) ** 2 + (hs - h0) ** 2)
    return 2.0 * np.arcsinh(chord / (2.0 * np.sqrt(hs * h0)))


def apply(model: Union[Model, str], matrix: np.ndarray, x: Point) -> Point:
    """Isometric action of an SL(2) matrix.

    H2: Moebius z -> (a z + b)/(c z + d). H3: with P = z + h j,
    D = |c z + d|^2 + |c|^2 h^2, z' = ((a z + b) conj(c z + d) + a conj(c) h^2) / D,
    h' = h / D.
    """
    model = Model(model)
    a, b, c, d = matrix[0, 0], matrix[0, 1], matrix[1, 0], matrix[1, 1]
    if model is Model.H2:
        z = complex(x)  # type: ignore[arg-type]
        return complex((a * z + b) / (c * z + d))
    z, h = _check_point(model, x)
    czd = c * z + d
    denom = abs(czd) ** 2 + abs(c) ** 2 * h * h
    z_new = ((a * z + b) * np.conj(czd) + a * np.conj(c) * h * h) / denom
    return complex(z_new), float(h / denom)


def apply_many(model: Model, matrix: np.ndarray, zs: np.ndarray, hs: np.ndarray):
    """Vectorized action on arrays of points (z, h); H2 points as (Re z, Im z)."""
    a, b, c, d = matrix[0, 0], matrix[0, 1], matrix[1, 0], matrix[1, 1]
    if model is Model.H2:
        w = zs + 1j * hs
        out = (a * w + b) / (c * w + d)
        return out.real, out.imag
    czd = c * zs + d
    denom = np.abs(czd) ** 2 + np.abs(c) ** 2 * hs * hs
    z_new = ((a * zs + b) * np.conj(czd) + a * np.conj(c) * hs * hs) / denom
    return z_new, hs / denom


def projective_key(matrix: np.ndarray) -> Tuple[int, ...]:
    """Hashable key identifying matrices up to sign (relative tolerance 1e-9 for large entries)."""
    flat = matrix.ravel()
    scale = max(1.0, float(np.max(np.abs(flat))))
    lead = next((v for v in flat if abs(v) > 1e-6 * scale), flat[0])
    sign = -1.0 if (lead.real < 0 or (lead.real == 0 and lead.imag < 0)) else 1.0
    normalized = sign * flat / (scale * DEDUP_TOLERANCE)
    return tuple(int(round(v)) for part in (normalized.real, normalized.imag) for v in part)


def translation_length(matrix: np.ndarray) -> float:
    """Displacement 2 log|a| of the dominant eigenvalue a (0 for elliptic/parabolic)."""
    eig = np.linalg.eigvals(matrix)
    return float(2.0 * math.log(max(1.0, float(np.max(np.abs(eig))))))


def cyclic_diagonal_length(group: DiscreteGroup) -> Optional[float]:
    """Translation length when the group is generated by one diagonal hyperbolic element."""
    if group.rank != 1:
        return None
    g = group.generators[0]
    if abs(g[0, 1]) > DET_TOLERANCE or abs(g[1, 0]) > DET_TOLERANCE:
        return None
    ell = 2.0 * math.log(abs(g[0, 0]))
    return abs(ell) if abs(ell) > 0 else None


def enumerate_orbit(
    group: DiscreteGroup,
    x: Optional[Point] = None,
    y: Optional[Point] = None,
    radius: Optional[float] = None,
    max_length: Optional[int] = None,
    budget: int = DEFAULT_BUDGET,
) -> GroupOrbit:
    """Breadth-first enumeration of reduced words with d(x, gamma y) <= radius.

    With a radius, words whose orbit point lies beyond radius + margin are not
    extended, where the margin is twice the largest generator displacement of y.
    With max_length only, every reduced word up to that length is listed.

    Args:
        group: The group
        x: First basepoint (default: group basepoint)
        y: Second basepoint (default: x)
        radius: Distance cutoff R
        max_length: Word-length horizon L
        budget: Maximum number of distinct elements

    Returns:
        GroupOrbit sorted by distance; ``complete`` is False when the budget was hit
    """
    if radius is None and max_length is None:
        raise DomainError("enumerate_orbit needs a radius R > 0 or a word-length horizon L >= 0")
    if radius is not None and radius <= 0:
        raise DomainError(f"radius must be positive, got {radius}")
    if max_length is not None and max_length < 0:
        raise DomainError(f"max_length must be >= 0, got {max_length}")

    model = group.model
    x = group.basepoint() if x is None else x
    y = x if y is None else y
    _check_point(model, x)
    _check_point(model, y)
    symbols = group.symbols()
    margin = 2.0 * max(
        (hyperbolic_distance(model, y, apply(model, s, y)) for s in symbols), default=0.0
    )
    horizon = radius + margin if radius is not None else math.inf

    identity = np.eye(2, dtype=complex)
    seen = {projective_key(identity)}
    entries = [OrbitEntry((), identity, hyperbolic_distance(model, x, y))]
    frontier = deque([((), identity)])
    complete = True
    torsion = False
    length = 0

    while frontier and (max_length is None or length < max_length):
        length += 1
        next_frontier: deque = deque()
        for word, mat in frontier:
            last = word[-1] if word else None
            for k, s in enumerate(symbols):
                if last is not None and k == last ^ 1:
                    continue
                new = mat @ s
                key = projective_key(new)
                if key in seen:
                    continue
                point = apply(model, new, y)
                dist = hyperbolic_distance(model, x, point)
                if dist > horizon:
                    continue
                seen.add(key)
                new_word = word + (k,)
                if hyperbolic_distance(model, y, point) < 1e-9:
                    torsion = True
                entries.append(OrbitEntry(new_word, new, dist))
                next_frontier.append((new_word, new))
                if len(seen) >= budget:
                    complete = False
                    break
            if not complete:
                break
        if not complete:
            logger.warning(
                f"{group.label}: orbit budget {budget} exhausted at word length {length}"
            )
            break
        frontier = next_frontier

    if radius is not None:
        entries = [e for e in entries if e.distance <= radius + 1e-12]
    entries.sort(key=lambda e: (round(e.distance, 12), len(e.word), e.word))

    if torsion:
        logger.warning(f"{group.label}: a nontrivial element fixes the basepoint (torsion?)")
    if not complete:
        certificate = "incomplete"
    elif group.kind in ("trivial", "cyclic", "schottky"):
        certificate = group.kind
    else:
        certificate = "heuristic"

    logger.debug(f"{group.label}: {len(entries)} orbit points, certificate={certificate}")
    return GroupOrbit(entries, x, y, radius, max_length, complete, certificate, torsion)
