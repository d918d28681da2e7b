"""Test families (trivial, cyclic, Schottky) and the JSON group file format.

Group file::

    {"model": "upper_half_space_H3",
     "label": "cyclic-1",
     "generators": [[[[a_re, a_im], [b_re, b_im]], [[c_re, c_im], [d_re, d_im]]]],
     "kind": "cyclic"}            # optional: trivial | cyclic | schottky | custom
"""

import json
import logging
import math
from pathlib import Path
from typing import Any, List, Tuple, Union

import numpy as np

from disperse_lab.groups.discrete_group import DiscreteGroup, Model, cyclic_diagonal_length
from disperse_lab.utils.errors import ConfigError, DomainError

logger = logging.getLogger(__name__)

_FILE_FIELDS = {"model", "label", "generators", "kind", "class_s"}


def trivial_group(model: Union[Model, str] = Model.H3) -> DiscreteGroup:
    return DiscreteGroup(Model(model), [], label="trivial", kind="trivial")


def cyclic_group(model: Union[Model, str] = Model.H3, ell: float = 1.0) -> DiscreteGroup:
    """<g> with g = diag(e^{ell/2}, e^{-ell/2}): translation by ell along the vertical axis."""
    if ell <= 0:
        raise DomainError(f"translation length must be positive, got {ell}")
    g = np.diag([math.exp(ell / 2.0), math.exp(-ell / 2.0)])
    return DiscreteGroup(
        Model(model), [g], label=f"cyclic-{ell:g}", kind="cyclic", params={"ell": ell}
    )


def ping_pong_holds(ell_a: float, ell_b: float) -> bool:
    """A's isometric discs sit strictly inside B's annulus e^{-m/2} < |z| < e^{m/2}.

    Equivalent to ell_b > 2 log coth(ell_a / 4).
    """
    return ell_b > 2.0 * math.log(1.0 / math.tanh(ell_a / 4.0))


def schottky_group(
    model: Union[Model, str] = Model.H2, ell_a: float = 3.0, ell_b: float = 3.0
) -> DiscreteGroup:
    """Two-generator Schottky group with certified ping-pong discs.

    A = [[cosh(l/2), sinh(l/2)], [sinh(l/2), cosh(l/2)]] (isometric discs centred at
    -+coth(l/2) with radius 1/sinh(l/2)) and B = diag(e^{m/2}, e^{-m/2}).

    Raises:
        DomainError: Translation lengths too short for ping-pong
    """
    if ell_a <= 0 or ell_b <= 0:
        raise DomainError("Schottky translation lengths must be positive")
    if not ping_pong_holds(ell_a, ell_b):
        raise DomainError(
            f"ping-pong fails for ell_a={ell_a}, ell_b={ell_b}: need ell_b > 2 log coth(ell_a/4)"
        )
    ch, sh = math.cosh(ell_a / 2.0), math.sinh(ell_a / 2.0)
    a = np.array([[ch, sh], [sh, ch]])
    b = np.diag([math.exp(ell_b / 2.0), math.exp(-ell_b / 2.0)])
    return DiscreteGroup(
        Model(model),
        [a, b],
        label=f"schottky-{ell_a:g}-{ell_b:g}",
        kind="schottky",
        params={"ell_a": ell_a, "ell_b": ell_b},
    )


def schottky_discs(group: DiscreteGroup) -> List[Tuple[complex, float, bool]]:
    """(centre, radius, excluded_inside) for the ping-pong circles of a catalog Schottky group.

    The fundamental domain is the complement of the three inner discs and of the
    exterior of the outer circle (hemispheres in H^3).
    """
    ell_a, ell_b = group.params["ell_a"], group.params["ell_b"]
    centre = 1.0 / math.tanh(ell_a / 2.0)
    rad = 1.0 / math.sinh(ell_a / 2.0)
    return [
        (complex(centre), rad, True),
        (complex(-centre), rad, True),
        (0j, math.exp(-ell_b / 2.0), True),
        (0j, math.exp(ell_b / 2.0), False),
    ]


def in_fundamental_domain(group: DiscreteGroup, zs: np.ndarray, hs: np.ndarray) -> np.ndarray:
    """Indicator of the fundamental domain for trivial and Schottky groups."""
    if group.kind == "trivial":
        return np.ones(np.shape(hs), dtype=bool)
    if group.kind != "schottky":
        raise DomainError(f"{group.label}: no disc description of the fundamental domain")
    inside = np.ones(np.shape(hs), dtype=bool)
    for centre, rad, excluded_inside in schottky_discs(group):
        sq = np.abs(zs - centre) ** 2 + hs**2
        inside &= sq > rad * rad if excluded_inside else sq < rad * rad
    return inside


def _parse_entry(value: Any, path: str) -> complex:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(value)
    if (
        isinstance(value, list)
        and len(value) == 2
        and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)
    ):
        return complex(value[0], value[1])
    raise ConfigError(f"{path}: expected a number or a [re, im] pair, got {value!r}")


def group_from_dict(data: Any, source: str = "<group>") -> DiscreteGroup:
    """Build a group from the file schema; errors name the offending field path."""
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: top level must be an object")
    unknown = sorted(set(data) - _FILE_FIELDS)
    if unknown:
        raise ConfigError(f"{source}: unknown field(s) {', '.join(unknown)}")
    for required in ("model", "generators"):
        if required not in data:
            raise ConfigError(f"{source}: missing required field '{required}'")
    try:
        model = Model(data["model"])
    except ValueError as e:
        raise ConfigError(
            f"{source}: model: expected one of {[m.value for m in Model]}, got {data['model']!r}"
        ) from e

    gens_raw = data["generators"]
    if not isinstance(gens_raw, list):
        raise ConfigError(f"{source}: generators: expected a list of 2x2 matrices")
    generators = []
    for i, g in enumerate(gens_raw):
        path = f"{source}: generators[{i}]"
        rows_ok = isinstance(g, list) and len(g) == 2
        if not (rows_ok and all(isinstance(row, list) and len(row) == 2 for row in g)):
            raise ConfigError(f"{path}: expected [[a, b], [c, d]]")
        generators.append(
            np.array(
                [[_parse_entry(g[r][c], f"{path}[{r}][{c}]") for c in range(2)] for r in range(2)]
            )
        )

    kind = data.get("kind")
    try:
        group = DiscreteGroup(model, generators, label=str(data.get("label", "group")))
    except DomainError as e:
        raise ConfigError(f"{source}: {e}") from e
    group.class_s = bool(data.get("class_s", True))
    _classify(group, kind, source)
    return group


def _classify(group: DiscreteGroup, kind: Any, source: str) -> None:
    if kind is None:
        if not group.generators:
            kind = "trivial"
        elif cyclic_diagonal_length(group) is not None:
            kind = "cyclic"
        else:
            kind = "custom"
    if kind not in ("trivial", "cyclic", "schottky", "custom"):
        raise ConfigError(f"{source}: kind: unknown group kind {kind!r}")

    if kind == "cyclic":
        ell = cyclic_diagonal_length(group)
        if ell is None:
            raise ConfigError(f"{source}: kind: 'cyclic' needs one diagonal hyperbolic generator")
        group.params = {"ell": ell}
    elif kind == "schottky":
        if group.rank != 2:
            raise ConfigError(f"{source}: kind: 'schottky' needs exactly two generators")
        a, b = group.generators
        ell_a = 2.0 * math.acosh(abs(a[0, 0].real))
        ell_b = 2.0 * math.log(abs(b[0, 0]))
        if not ping_pong_holds(ell_a, abs(ell_b)):
            raise ConfigError(f"{source}: generators: ping-pong condition fails")
        group.params = {"ell_a": ell_a, "ell_b": abs(ell_b)}
    group.kind = kind


def load_group(path: Union[str, Path]) -> DiscreteGroup:
    """Read a group file.

    Raises:
        ConfigError: Missing file, malformed JSON or schema violation (with field path)
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"group file not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: line {e.lineno} column {e.colno}: {e.msg}") from e
    group = group_from_dict(data, str(path))
    logger.info(f"Loaded group {group.label} ({group.kind}, {group.rank} generators) from {path}")
    return group


def dump_group(group: DiscreteGroup, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = group.to_dict()
    data["kind"] = group.kind
    with open(path, "w", encoding="utf-8") as f:
        json.dump(data, f, indent=2)
    return path


def catalog_groups(model: Union[Model, str] = Model.H3) -> List[DiscreteGroup]:
    """The three test families on one model."""
    return [trivial_group(model), cyclic_group(model, 1.0), schottky_group(model, 6.0, 6.0)]


def group_from_name(name: str, model: Union[Model, str] = Model.H3) -> DiscreteGroup:
    """Catalog group from its label: ``trivial``, ``cyclic-<ell>`` or ``schottky-<a>-<b>``.

    Raises:
        ConfigError: Unknown label or unparsable lengths
    """
    head, *lengths = name.strip().split("-")
    try:
        values = [float(v) for v in lengths]
    except ValueError as e:
        raise ConfigError(f"group {name!r}: translation lengths must be numbers") from e
    try:
        if head == "trivial" and not values:
            return trivial_group(model)
        if head == "cyclic" and len(values) <= 1:
            return cyclic_group(model, *values)
        if head == "schottky" and len(values) in (0, 2):
            return schottky_group(model, *values)
    except DomainError as e:
        raise ConfigError(f"group {name!r}: {e}") from e
    raise ConfigError(
        f"group {name!r}: expected a group file or one of trivial, cyclic-<ell>, schottky-<a>-<b>"
    )
