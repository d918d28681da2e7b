"""Shared fixtures."""

import pytest

from disperse_lab.evolution.schrodinger_flow import RadialFlow
from disperse_lab.geometry.lie_data import make_complex_group_space, make_rank_one_space
from disperse_lab.groups.catalog import cyclic_group, schottky_group, trivial_group
from disperse_lab.groups.discrete_group import Model
from disperse_lab.utils.config import Settings


@pytest.fixture(scope="session")
def h2():
    return make_rank_one_space("R", 2)


@pytest.fixture(scope="session")
def h3():
    return make_rank_one_space("R", 3)


@pytest.fixture(scope="session")
def sl2c():
    return make_complex_group_space("SL", 2)


@pytest.fixture(scope="session")
def sl3c():
    return make_complex_group_space("SL", 3)


@pytest.fixture
def trivial_h3():
    return trivial_group(Model.H3)


@pytest.fixture
def cyclic_h3():
    return cyclic_group(Model.H3, 1.0)


@pytest.fixture
def schottky_h2():
    return schottky_group(Model.H2, 6.0, 6.0)


@pytest.fixture(scope="session")
def small_flow():
    """Coarser DST grid than the default; wide enough for T <= 4 with sigma = 0.5 data."""
    return RadialFlow(length=200.0, points=2048)


@pytest.fixture
def settings_file(tmp_path):
    path = tmp_path / "config.yaml"
    path.write_text(
        "numerics:\n"
        "  grid_points: 512\n"
        "monte_carlo:\n"
        "  samples: 20000\n"
        "  seed: 7\n"
        "output:\n"
        f"  directory: {tmp_path / 'results'}\n"
        "database:\n"
        f"  path: {tmp_path / 'ledger.db'}\n"
        "logging:\n"
        "  level: WARNING\n",
        encoding="utf-8",
    )
    return path


@pytest.fixture
def settings(settings_file, monkeypatch):
    for name in (
        "DISPERSE_LAB_THREADS",
        "DISPERSE_LAB_LOG_LEVEL",
        "DISPERSE_LAB_OUTPUT_DIR",
        "DISPERSE_LAB_SEED",
    ):
        monkeypatch.delenv(name, raising=False)
    return Settings(str(settings_file))
