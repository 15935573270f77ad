import shutil
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

from planbench import bundled_config

settings.register_profile("default", deadline=None, max_examples=50)
settings.load_profile("default")

CONFIGS = Path(bundled_config("."))


@pytest.fixture
def configs() -> Path:
    return CONFIGS


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def pm2d_text() -> str:
    return (CONFIGS / "pm2d.yaml").read_text()


class Counter:
    """Deterministic stand-in for a wall clock: each call advances by ``tick``.

    The default tick is a power of two so every difference is exact.
    """

    def __init__(self, tick: float = 2.0**-10):
        self.t = 0.0
        self.tick = tick

    def __call__(self) -> float:
        self.t += self.tick
        return self.t


@pytest.fixture
def counter_clock():
    return Counter


@pytest.fixture
def workdir(tmp_path):
    """A temp dir holding copies of the bundled configs."""
    for f in CONFIGS.glob("*.yaml"):
        shutil.copy(f, tmp_path / f.name)
    shutil.copytree(CONFIGS / "urdf", tmp_path / "urdf")
    return tmp_path


def pm_dict(**overrides) -> dict:
    """A small 2D point-mass problem as a config mapping."""
    data = {
        "robot": {"builtin": "point_mass_2d", "sphere_radius": 0.1},
        "control_mode": "velocity",
        "dt": 0.1,
        "max_steps": 50,
        "q0": [0.0, 0.0],
        "limits": {"position": [[-5.0, 5.0], [-5.0, 5.0]], "velocity": [2.0, 2.0], "acceleration": [5.0, 5.0]},
        "goal": [{"link": "mass", "desired_position": [3.0, 0.0, 0.0], "epsilon": 0.05, "dims": [0, 1]}],
        "obstacles": [],
    }
    data.update(overrides)
    return data


def make_pf(**overrides):
    from planbench.problem import problem_from_dict

    return problem_from_dict(pm_dict(**overrides))


# one line per acceptance criterion, filled by test_acceptance.py
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
