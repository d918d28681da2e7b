import json
import math

import numpy as np
import pytest

from disperse_lab.groups.catalog import (
    catalog_groups,
    cyclic_group,
    dump_group,
    group_from_name,
    in_fundamental_domain,
    load_group,
    ping_pong_holds,
    schottky_group,
)
from disperse_lab.groups.discrete_group import (
    DiscreteGroup,
    Model,
    apply,
    enumerate_orbit,
    hyperbolic_distance,
    translation_length,
)
from disperse_lab.groups.poincare import (
    critical_exponent_estimate,
    growth_function,
    poincare_series,
)
from disperse_lab.utils.errors import ConfigError, DomainError


class TestGeometry:
    def test_h2_distance(self):
        assert hyperbolic_distance(Model.H2, 1j, 2j) == pytest.approx(math.log(2.0))

    def test_h3_distance(self):
        assert hyperbolic_distance(Model.H3, (0j, 1.0), (0j, math.e)) == pytest.approx(1.0)

    def test_boundary_points_rejected(self):
        with pytest.raises(DomainError):
            hyperbolic_distance(Model.H2, 1j, 1.0 + 0j)
        with pytest.raises(DomainError):
            hyperbolic_distance(Model.H3, (0j, 1.0), (0j, 0.0))

    def test_diagonal_element_translates_the_axis(self, cyclic_h3):
        z, h = apply(Model.H3, cyclic_h3.generators[0], (0j, 1.0))
        assert abs(z) < 1e-15
        assert h == pytest.approx(math.e)
        assert translation_length(cyclic_h3.generators[0]) == pytest.approx(1.0)

    def test_isometry(self, schottky_h2):
        a = schottky_h2.generators[0]
        x, y = 0.3 + 1.2j, -0.5 + 0.7j
        assert hyperbolic_distance(Model.H2, apply(Model.H2, a, x), apply(Model.H2, a, y)) == (
            pytest.approx(hyperbolic_distance(Model.H2, x, y), rel=1e-10)
        )


class TestDiscreteGroup:
    def test_determinant_checked(self):
        with pytest.raises(DomainError):
            DiscreteGroup(Model.H3, [np.array([[2.0, 0.0], [0.0, 1.0]])])

    def test_h2_generators_are_real(self):
        with pytest.raises(DomainError):
            DiscreteGroup(Model.H2, [np.array([[1j, 0], [0, -1j]])])

    def test_symbols_hold_inverses(self, schottky_h2):
        symbols = schottky_h2.symbols()
        assert len(symbols) == 4
        for g, inverse in zip(symbols[::2], symbols[1::2]):
            np.testing.assert_allclose(g @ inverse, np.eye(2), atol=1e-12)

    def test_to_dict_model(self, cyclic_h3):
        assert cyclic_h3.to_dict()["model"] == "upper_half_space_H3"


class TestOrbit:
    def test_cyclic_orbit_in_ball(self, cyclic_h3):
        orbit = enumerate_orbit(cyclic_h3, radius=5.5)
        assert len(orbit) == 11
        assert orbit.complete
        assert orbit.certificate == "cyclic"
        np.testing.assert_allclose(orbit.distances(), sorted([abs(k) for k in range(-5, 6)]))

    def test_free_group_word_ball(self, schottky_h2):
        assert len(enumerate_orbit(schottky_h2, max_length=2)) == 17

    def test_needs_radius_or_length(self, cyclic_h3):
        with pytest.raises(DomainError):
            enumerate_orbit(cyclic_h3)
        with pytest.raises(DomainError):
            enumerate_orbit(cyclic_h3, radius=-1.0)

    def test_budget_marks_incomplete(self, schottky_h2):
        orbit = enumerate_orbit(schottky_h2, max_length=4, budget=10)
        assert not orbit.complete
        assert orbit.certificate == "incomplete"


class TestCatalog:
    def test_cyclic_needs_positive_length(self):
        with pytest.raises(DomainError):
            cyclic_group(Model.H3, 0.0)

    def test_ping_pong(self):
        assert ping_pong_holds(6.0, 6.0)
        assert not ping_pong_holds(1.0, 1.0)
        with pytest.raises(DomainError):
            schottky_group(Model.H2, 1.0, 1.0)

    def test_group_from_name(self):
        assert group_from_name("trivial").rank == 0
        assert group_from_name("cyclic-2").params == {"ell": 2.0}
        schottky = group_from_name("schottky", Model.H2)
        assert schottky.params == {"ell_a": 3.0, "ell_b": 3.0}

    @pytest.mark.parametrize("name", ["bogus", "cyclic-x", "schottky-1-1", "trivial-3"])
    def test_group_from_name_rejects(self, name):
        with pytest.raises(ConfigError):
            group_from_name(name)

    def test_catalog_families(self):
        assert [g.kind for g in catalog_groups(Model.H2)] == ["trivial", "cyclic", "schottky"]

    def test_fundamental_domain(self, schottky_h2):
        inside = in_fundamental_domain(
            schottky_h2, np.array([0j, 0j]), np.array([1.0, 0.01])
        )
        assert inside.tolist() == [True, False]

    def test_file_round_trip(self, tmp_path, schottky_h2):
        loaded = load_group(dump_group(schottky_h2, tmp_path / "g.json"))
        assert loaded.kind == "schottky"
        assert loaded.params["ell_a"] == pytest.approx(6.0)
        assert loaded.params["ell_b"] == pytest.approx(6.0)

    def test_kind_inferred_from_generators(self, tmp_path):
        e = math.exp(1.0)
        path = tmp_path / "g.json"
        path.write_text(
            json.dumps(
                {
                    "model": "upper_half_space_H3",
                    "generators": [[[e, 0.0], [0.0, 1.0 / e]]],
                }
            )
        )
        group = load_group(path)
        assert group.kind == "cyclic"
        assert group.params["ell"] == pytest.approx(2.0)

    def test_malformed_json_names_line(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{\n  "model": "upper_half_plane_H2",\n  "generators": [\n')
        with pytest.raises(ConfigError, match="line"):
            load_group(path)

    @pytest.mark.parametrize(
        "payload, fragment",
        [
            ({"model": "upper_half_plane_H2", "generators": [], "colour": 1}, "colour"),
            ({"generators": []}, "model"),
            ({"model": "disc", "generators": []}, "model"),
            ({"model": "upper_half_plane_H2", "generators": [[[2, 0], [0, 1]]]}, "det"),
            ({"model": "upper_half_plane_H2", "generators": [[[1, "a"], [0, 1]]]}, r"\[0\]\[1\]"),
        ],
    )
    def test_schema_errors(self, tmp_path, payload, fragment):
        path = tmp_path / "g.json"
        path.write_text(json.dumps(payload))
        with pytest.raises(ConfigError, match=fragment):
            load_group(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_group(tmp_path / "nope.json")


class TestPoincare:
    @pytest.mark.parametrize("s", [0.5, 2.0])
    def test_cyclic_closed_form(self, cyclic_h3, s):
        result = poincare_series(cyclic_h3, s)
        assert result.exact_tail
        assert result.partial_sum == pytest.approx(1.0 / math.tanh(s / 2.0), abs=1e-10)
        assert result.tail_bound <= 1e-12

    def test_trivial_group(self, trivial_h3):
        result = poincare_series(trivial_h3, 1.0)
        assert result.partial_sum == 1.0
        assert result.terms_used == 1

    def test_rejects_nonpositive_s(self, cyclic_h3):
        with pytest.raises(DomainError):
            poincare_series(cyclic_h3, 0.0)

    def test_schottky_diverges_at_small_s(self, schottky_h2):
        assert poincare_series(schottky_h2, 0.01).divergent

    def test_cyclic_exponent_is_zero(self, cyclic_h3):
        exponent = critical_exponent_estimate(cyclic_h3)
        assert abs(exponent.estimate) < 0.05
        assert exponent.admits(1.0)

    def test_trivial_exponent(self, trivial_h3):
        assert critical_exponent_estimate(trivial_h3).estimate == 0.0

    def test_schottky_exponent_in_range(self, schottky_h2):
        exponent = critical_exponent_estimate(schottky_h2)
        assert 0.0 < exponent.estimate < 1.0


class TestGrowth:
    def test_cyclic(self, cyclic_h3):
        assert growth_function(cyclic_h3, 3).counts == [1, 3, 5, 7]

    def test_free_group(self, schottky_h2):
        result = growth_function(schottky_h2, 3)
        assert result.counts == [1, 5, 17, 53]
        assert result.value == 53

    def test_cyclic_growth_is_subexponential(self, cyclic_h3):
        assert growth_function(cyclic_h3, 8).subexponential

    def test_negative_n(self, cyclic_h3):
        with pytest.raises(DomainError):
            growth_function(cyclic_h3, -1)


def _random_point(model: Model, rng: np.random.Generator):
    z = complex(rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0))
    h = math.exp(rng.uniform(-2.0, 2.0))
    if model is Model.H2:
        return complex(z.real, h)
    return (z, h)


class TestInvariants:
    @pytest.mark.parametrize("model", [Model.H2, Model.H3])
    def test_triangle_inequality(self, model):
        rng = np.random.default_rng(20240601)
        for _ in range(1000):
            x, y, z = (_random_point(model, rng) for _ in range(3))
            dxy = hyperbolic_distance(model, x, y)
            dyz = hyperbolic_distance(model, y, z)
            dxz = hyperbolic_distance(model, x, z)
            assert dxz <= dxy + dyz + 1e-12 * (1.0 + dxy + dyz)
            assert dxy == pytest.approx(hyperbolic_distance(model, y, x), rel=1e-12, abs=1e-15)

    @pytest.mark.parametrize(
        "group, kwargs",
        [
            (schottky_group(Model.H2, 6.0, 6.0), {"max_length": 3}),
            (schottky_group(Model.H3, 6.0, 6.0), {"max_length": 2}),
            (cyclic_group(Model.H3, 1.0), {"radius": 6.5}),
        ],
        ids=["schottky-h2", "schottky-h3", "cyclic-h3"],
    )
    def test_orbit_has_no_duplicate_elements(self, group, kwargs):
        orbit = enumerate_orbit(group, **kwargs)
        matrices = [e.matrix for e in orbit.entries]
        for i, a in enumerate(matrices):
            for b in matrices[i + 1:]:
                gap = min(np.max(np.abs(a - b)), np.max(np.abs(a + b)))
                assert gap > 1e-9

    @pytest.mark.parametrize(
        "group", [schottky_group(Model.H2, 6.0, 6.0), cyclic_group(Model.H3, 1.0)]
    )
    def test_growth_is_submultiplicative(self, group):
        counts = growth_function(group, 4).counts
        for m in range(len(counts)):
            for n in range(len(counts) - m):
                assert counts[m + n] <= counts[m] * counts[n]
