import math
from fractions import Fraction

import pytest

from disperse_lab.evolution.admissibility import (
    AdmissiblePair,
    check_gamma,
    gamma_range,
    in_triangle,
    integrability_threshold,
    is_admissible,
    ttstar_exponent,
    ttstar_kernel_norms,
)
from disperse_lab.utils.errors import DomainError


@pytest.mark.parametrize(
    "n, p, q, expected",
    [
        (3, 2, 6, True),
        (3, math.inf, 2, True),
        (3, 4, 3, True),
        (3, 2, 8, False),
        (3, 10, 10, False),
        (3, 1, 4, False),
        (2, 2, 1e9, True),
        (2, math.inf, 4, False),
    ],
)
def test_is_admissible(n, p, q, expected):
    assert is_admissible(n, p, q) is expected


def test_exact_fractions_on_the_edge():
    # 2/p + 3/q = 3/2 exactly
    assert in_triangle(3, Fraction(1, 2), Fraction(1, 6), tol=0)
    assert not in_triangle(3, Fraction(1, 2), Fraction(1, 7), tol=0)


def test_nonpositive_exponent():
    with pytest.raises(DomainError):
        is_admissible(3, 0, 4)


def test_admissible_pair():
    pair = AdmissiblePair(2.0, 6.0, 3)
    assert pair.dual == (2.0, pytest.approx(1.2))
    with pytest.raises(DomainError):
        AdmissiblePair(10.0, 10.0, 3)


def test_gamma_range():
    assert gamma_range(3) == (1.0, pytest.approx(7.0 / 3.0))
    assert check_gamma(3, 2.0) == 2.0
    assert check_gamma(3, 7.0 / 3.0) == pytest.approx(7.0 / 3.0)
    for bad in (1.0, 3.0):
        with pytest.raises(DomainError):
            check_gamma(3, bad)
    with pytest.raises(DomainError):
        gamma_range(0)


class TestTTStar:
    def test_exponent(self):
        assert ttstar_exponent(3, 4.0) == pytest.approx(0.75)
        assert ttstar_exponent(3, math.inf) == pytest.approx(1.5)
        with pytest.raises(DomainError):
            ttstar_exponent(3, 2.0)

    def test_norms(self):
        norms = ttstar_kernel_norms(3, 4.0)
        assert norms.k1 == 4.0
        assert norms.k2 == pytest.approx(8.0)
        assert not norms.k2_divergent

    def test_threshold(self):
        assert integrability_threshold(3) == 6.0
        assert integrability_threshold(2) == math.inf
        assert ttstar_kernel_norms(3, 7.0).k2_divergent
        assert not ttstar_kernel_norms(3, 5.5).k2_divergent
