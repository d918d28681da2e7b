"""Poincare series, critical exponent and growth function."""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy import stats

from disperse_lab.groups.discrete_group import (
    DEFAULT_BUDGET,
    DiscreteGroup,
    Model,
    Point,
    apply,
    cyclic_diagonal_length,
    enumerate_orbit,
    hyperbolic_distance,
    projective_key,
)
from disperse_lab.utils.errors import DomainError

logger = logging.getLogger(__name__)

CYCLIC_COUNT_RADIUS = 200.0
WIDE_INTERVAL = 0.2
# |k| ell stays below this so that g^k does not overflow
MAX_EXPONENT = 600.0


@dataclass
class PoincareResult:
    """Partial sum of sum_gamma e^{-s d(x, gamma y)} with a tail bound.

    ``exact_tail`` is True when the tail is a rigorous bound (cyclic groups);
    otherwise it comes from a fitted orbit-growth model.
    """

    s: float
    partial_sum: float
    tail_bound: float
    terms_used: int
    divergent: bool = False
    exact_tail: bool = False


@dataclass
class CriticalExponent:
    """Slope fit of log N(R) against R with a two-sigma interval."""

    estimate: float
    stderr: float
    ci_low: float
    ci_high: float
    n_points: int
    wide: bool = False

    def admits(self, rho_m: float) -> bool:
        """The class-(S0) gate: estimate plus interval below rho_m."""
        return self.ci_high < rho_m


@dataclass
class GrowthResult:
    """Ball sizes gamma(k) = #{g : |g|_A <= k} for k = 0..n."""

    n: int
    counts: List[int] = field(default_factory=list)
    complete: bool = True
    subexponential: bool = False

    @property
    def value(self) -> int:
        return self.counts[-1]


def axis_position(model: Model, x: Point) -> float:
    """Signed position of the projection of x onto the vertical axis."""
    if model is Model.H2:
        return math.log(abs(complex(x)))  # type: ignore[arg-type]
    z, h = x  # type: ignore[misc]
    return 0.5 * math.log(abs(z) ** 2 + h * h)


def cyclic_distances(
    group: DiscreteGroup, x: Point, y: Point, k_max: int
) -> Tuple[np.ndarray, np.ndarray]:
    g = group.generators[0]
    ks = np.arange(-k_max, k_max + 1)
    dists = np.empty(ks.size)
    for i, k in enumerate(ks):
        gk = np.diag([g[0, 0] ** k, g[1, 1] ** k])
        dists[i] = hyperbolic_distance(group.model, x, apply(group.model, gk, y))
    return ks, dists


def cyclic_tail(s: float, ell: float, delta: float, k_max: int) -> float:
    """sum over |k| > K of e^{-s |k ell - delta|}, valid for K ell >= |delta|."""
    geometric = math.exp(-s * (k_max + 1) * ell) / -math.expm1(-s * ell)
    return (math.exp(s * delta) + math.exp(-s * delta)) * geometric


def poincare_series(
    group: DiscreteGroup,
    s: float,
    x: Optional[Point] = None,
    y: Optional[Point] = None,
    radius: Optional[float] = None,
    budget: int = DEFAULT_BUDGET,
    tol: float = 1e-13,
) -> PoincareResult:
    """Partial Poincare sum with tail bound.

    Cyclic groups sum g^k for |k| <= K with the exact tail from the axis
    projection d(x, g^k y) >= |k ell - (s_x - s_y)|. Other groups sum the orbit
    within a radius and bound the tail with the fitted growth N(R) ~ C e^{delta R};
    s at or below the fitted exponent is flagged divergent.

    Raises:
        DomainError: s <= 0
    """
    if s <= 0:
        raise DomainError(f"poincare_series needs s > 0, got s={s}")
    x = group.basepoint() if x is None else x
    y = x if y is None else y

    ell = cyclic_diagonal_length(group)
    if ell is not None:
        delta = axis_position(group.model, x) - axis_position(group.model, y)
        k_cap = max(1, int(MAX_EXPONENT / ell), int(math.ceil(abs(delta) / ell)))
        k_max = max(1, int(math.ceil(abs(delta) / ell)))
        while True:
            tail = cyclic_tail(s, ell, delta, k_max)
            if tail <= tol or 2 * k_max + 1 >= budget or k_max >= k_cap:
                break
            k_max = min(2 * k_max, k_cap)
        _, dists = cyclic_distances(group, x, y, k_max)
        partial = math.fsum(np.exp(-s * dists))
        if tail > tol * max(partial, 1.0):
            logger.warning(f"cyclic Poincare tail {tail:.2e} above tolerance at budget {budget}")
        return PoincareResult(s, partial, tail, dists.size, False, True)

    if group.rank == 0:
        partial = math.exp(-s * hyperbolic_distance(group.model, x, y))
        return PoincareResult(s, partial, 0.0, 1, False, True)

    radius = default_radius(group, x) if radius is None else radius
    orbit = enumerate_orbit(group, x, y, radius=radius, budget=budget)
    dists = orbit.distances()
    partial = math.fsum(np.exp(-s * dists))

    tail = growth_tail(dists, radius, s)
    if math.isinf(tail):
        logger.warning(f"{group.label}: s={s} at or below the fitted orbit growth, divergent")
        return PoincareResult(s, partial, math.inf, len(dists), True, False)
    return PoincareResult(s, partial, tail, len(dists), False, False)


def default_radius(group: DiscreteGroup, x: Point) -> float:
    """Counting radius: five generator displacements, at least 16."""
    disp = [
        hyperbolic_distance(group.model, x, apply(group.model, g, x)) for g in group.generators
    ]
    return max(16.0, 5.0 * max(disp, default=0.0))


def _fit_growth(
    dists: np.ndarray, radius: float, samples: int = 64
) -> Optional[Tuple[float, float]]:
    """(rate, log C) of N(r) ~ C e^{rate r} on r in [R/2, R]."""
    r = np.linspace(0.5 * radius, radius, samples)
    counts = np.searchsorted(np.sort(dists), r, side="right")
    if np.unique(counts).size < 2:
        return None
    fit = stats.linregress(r, np.log(counts))
    return max(float(fit.slope), 0.0), float(fit.intercept)


def growth_tail(dists: np.ndarray, radius: float, s: float, margin: float = 0.02) -> float:
    """Estimated sum of e^{-s d} over orbit points beyond the radius.

    With N(r) ~ C e^{rate r} fitted on [R/2, R], the tail is
    int_R^inf e^{-s r} dN = C rate e^{(rate - s) R} / (s - rate); inf when s <= rate + margin.
    """
    fit = _fit_growth(dists, radius)
    if fit is None:
        return 0.0 if dists.size <= 1 else math.inf
    rate, log_c = fit
    if s <= rate + margin:
        return math.inf
    return max(math.exp(log_c) * rate * math.exp((rate - s) * radius) / (s - rate), 0.0)


def critical_exponent_estimate(
    group: DiscreteGroup,
    x: Optional[Point] = None,
    radius: Optional[float] = None,
    budget: int = DEFAULT_BUDGET,
) -> CriticalExponent:
    """Slope of log #{gamma : d(x, gamma x) <= R} against R over [R_max/2, R_max]."""
    x = group.basepoint() if x is None else x
    if group.rank == 0:
        return CriticalExponent(0.0, 0.0, 0.0, 0.0, 1)

    ell = cyclic_diagonal_length(group)
    if ell is not None:
        radius = CYCLIC_COUNT_RADIUS if radius is None else radius
        _, dists = cyclic_distances(group, x, x, int(math.ceil(radius / ell)) + 2)
    else:
        radius = default_radius(group, x) if radius is None else radius
        orbit = enumerate_orbit(group, x, x, radius=radius, budget=budget)
        if not orbit.complete:
            logger.warning(f"{group.label}: orbit incomplete, critical exponent biased low")
        dists = orbit.distances()

    r = np.linspace(0.5 * radius, radius, 64)
    counts = np.searchsorted(np.sort(dists), r, side="right")
    distinct = np.unique(counts).size
    if distinct < 2:
        est, err = 0.0, 0.0
    else:
        fit = stats.linregress(r, np.log(counts))
        est, err = float(fit.slope), float(fit.stderr)

    low, high = est - 2.0 * err, est + 2.0 * err
    wide = distinct < 5 or (high - low) > WIDE_INTERVAL
    if wide:
        logger.warning(
            f"{group.label}: wide critical-exponent interval [{low:.3f}, {high:.3f}] "
            f"from {distinct} distinct counts"
        )
    logger.debug(f"{group.label}: delta estimate {est:.4f} +- {2 * err:.4f} at R={radius}")
    return CriticalExponent(est, err, low, high, len(dists), wide)


def growth_function(group: DiscreteGroup, n: int, budget: int = DEFAULT_BUDGET) -> GrowthResult:
    """Ball sizes in the word metric of the symmetric generating set.

    The subexponential flag is set when log gamma(n)/n has dropped below 3/4 of
    log gamma(n/2)/(n/2), i.e. the growth rate is still decaying on the computed range.
    """
    if n < 0:
        raise DomainError(f"growth_function needs n >= 0, got n={n}")
    symbols = group.symbols()
    identity = np.eye(2, dtype=complex)
    seen = {projective_key(identity)}
    frontier = [identity]
    counts = [1]
    complete = True

    for _ in range(n):
        nxt = []
        for mat in frontier:
            for s in symbols:
                new = mat @ s
                key = projective_key(new)
                if key not in seen:
                    seen.add(key)
                    nxt.append(new)
            if len(seen) >= budget:
                complete = False
                break
        counts.append(len(seen))
        frontier = nxt
        if not complete:
            logger.warning(f"{group.label}: growth budget {budget} exhausted")
            break

    subexp = False
    m = len(counts) - 1
    if m >= 4 and counts[m] > 1:
        half = m // 2
        rate_full = math.log(counts[m]) / m
        rate_half = math.log(counts[half]) / half
        subexp = rate_half == 0 or rate_full / rate_half < 0.75
    return GrowthResult(n, counts, complete, subexp)
