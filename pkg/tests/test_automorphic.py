import math

import numpy as np
import pytest

from disperse_lab.analysis.kernels import schrodinger_kernel_exact_complex
from disperse_lab.groups.automorphic import (
    UnfoldingResult,
    automorphic_kernel,
    class_gate,
    kernel_values,
    quotient_Lq_norm,
    unfolding_check,
)
from disperse_lab.groups.catalog import cyclic_group
from disperse_lab.groups.discrete_group import DiscreteGroup, Model
from disperse_lab.groups.poincare import CriticalExponent
from disperse_lab.utils.errors import ClassViolationError, DomainError, UnsupportedGroupError


class TestClassGate:
    def test_cyclic_group_admitted(self, cyclic_h3):
        assert class_gate(cyclic_h3).ci_high < 1.0

    def test_precomputed_exponent(self, cyclic_h3):
        fine = CriticalExponent(0.8, 0.01, 0.78, 0.82, 10)
        assert class_gate(cyclic_h3, fine) is fine
        with pytest.raises(ClassViolationError):
            class_gate(cyclic_h3, CriticalExponent(0.99, 0.01, 0.97, 1.01, 10))

    def test_class_flag(self):
        group = cyclic_group(Model.H3, 1.0)
        group.class_s = False
        with pytest.raises(ClassViolationError):
            class_gate(group)


class TestAutomorphicKernel:
    def test_trivial_group_is_the_kernel(self, trivial_h3):
        value = automorphic_kernel(trivial_h3, 1.0)
        assert abs(value.value) == pytest.approx((4 * math.pi) ** -1.5)
        assert value.tail_bound == 0.0
        assert value.certificate == "trivial"

    def test_cyclic_sum_against_direct_sum(self, cyclic_h3, h3):
        value = automorphic_kernel(cyclic_h3, 1.0)
        ks = np.arange(-200, 201)
        direct = np.sum(schrodinger_kernel_exact_complex(h3, 1.0, np.abs(ks).astype(float)))
        assert abs(value.value - direct) < 1e-9
        assert value.tail_bound <= 1e-10
        assert value.certificate == "cyclic"

    def test_default_epsilon_splits_the_gap(self, cyclic_h3):
        exponent = CriticalExponent(0.2, 0.0, 0.2, 0.2, 10)
        value = automorphic_kernel(cyclic_h3, 1.0, exponent=exponent)
        assert value.epsilon == pytest.approx(0.4)

    def test_rejects(self, cyclic_h3):
        with pytest.raises(DomainError):
            automorphic_kernel(cyclic_h3, 0.0)
        with pytest.raises(DomainError):
            automorphic_kernel(cyclic_h3, 1.0, epsilon=2.0)

    def test_kernel_values_on_h3(self):
        d = np.array([0.0, 1.0, 2.5])
        np.testing.assert_allclose(
            kernel_values(Model.H3, 2.0, d),
            schrodinger_kernel_exact_complex(Model.H3.space, 2.0, d),
        )


class TestMonteCarlo:
    def test_unfolding_trivial(self, trivial_h3):
        result = unfolding_check(trivial_h3, samples=20_000, seed=3)
        assert result.stderr > 0
        assert result.deviation <= 5.0

    def test_unfolding_cyclic(self, cyclic_h3):
        result = unfolding_check(cyclic_h3, samples=20_000, seed=5)
        assert result.deviation <= 5.0

    def test_quotient_norm_rejects(self, cyclic_h3):
        with pytest.raises(DomainError):
            quotient_Lq_norm(cyclic_h3, 1.0, 2.0)
        with pytest.raises(DomainError):
            quotient_Lq_norm(cyclic_h3, 0.0, 4.0)

    def test_custom_group_has_no_domain(self):
        m = np.array([[1.0, 1.0], [0.0, 1.0]])
        parabolic = DiscreteGroup(Model.H3, [m], label="parabolic", kind="custom")
        with pytest.raises(UnsupportedGroupError):
            unfolding_check(parabolic, samples=100)

    def test_quotient_norm_same_seed_same_value(self, trivial_h3):
        a = quotient_Lq_norm(trivial_h3, 1.0, 4.0, samples=5_000, seed=11)
        b = quotient_Lq_norm(trivial_h3, 1.0, 4.0, samples=5_000, seed=11)
        assert a.value == b.value
        assert a.accepted == 5_000

    def test_deviation_without_error_bar(self):
        assert UnfoldingResult(1.0, 0.0, 1.0, 1.0).deviation == 0.0
        assert UnfoldingResult(1.0, 0.0, 2.0, 1.0).deviation == math.inf
