"""Composite Gauss-Legendre rules and Richardson extrapolation."""

import logging
from functools import lru_cache
from typing import List, Sequence, Tuple

import numpy as np

logger = logging.getLogger(__name__)


@lru_cache(maxsize=32)
def _legendre(order: int) -> Tuple[np.ndarray, np.ndarray]:
    nodes, weights = np.polynomial.legendre.leggauss(order)
    return nodes, weights


def gauss_panels(
    a: float, b: float, n_panels: int, order: int = 16
) -> Tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of a composite Gauss-Legendre rule on [a, b].

    Args:
        a: Left endpoint
        b: Right endpoint
        n_panels: Number of equal panels
        order: Nodes per panel

    Returns:
        (nodes, weights), both of length n_panels * order
    """
    n_panels = max(1, int(n_panels))
    x, w = _legendre(order)
    edges = np.linspace(a, b, n_panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def richardson(values: Sequence[np.ndarray], ratio: float = 2.0) -> Tuple[np.ndarray, np.ndarray]:
    """Extrapolate a ladder f(eps0), f(eps0/ratio), ... to eps -> 0.

    The error is assumed to be a power series in eps starting at order one.

    Args:
        values: Ladder values, coarsest first (arrays of a common shape)
        ratio: Ladder ratio between consecutive eps values

    Returns:
        (extrapolated value, error estimate) where the estimate is the difference
        between the last two diagonal entries of the Neville table
    """
    table: List[List[np.ndarray]] = []
    for j, v in enumerate(values):
        row = [np.asarray(v)]
        for k in range(1, j + 1):
            factor = ratio**k
            row.append(row[k - 1] + (row[k - 1] - table[j - 1][k - 1]) / (factor - 1.0))
        table.append(row)

    best = table[-1][-1]
    if len(table) < 2:
        return best, np.full_like(np.abs(best), np.inf, dtype=float)
    estimate = np.abs(best - table[-1][-2])
    return best, estimate
