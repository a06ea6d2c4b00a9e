import copy
import json
import math
from pathlib import Path

import pytest

from app.core.diagnostics import get_diagnostics
from app.core.scene import scene_from_dict

FIXTURES = Path(__file__).resolve().parents[1] / "fixtures"

STICK_SCENE = {
    "surface": {"origin": [0.0, 0.0], "height": 0.0, "extent_x": 1.0, "extent_y": 1.2},
    "object": {"name": "stick", "shape": "stick", "mass": 0.28, "length": 0.656, "diameter": 0.032},
    "gripper": {
        "ee_length": 0.17,
        "jaw_max_open": 0.08,
        "pad_friction_torque_limit": 0.04,
        "grip_force": 20.0,
        "pad_torsion_coefficient": 0.01,
        "body_box": [0.04, 0.08, 0.10],
    },
    "robot": {
        "base": [0.5, 0.5, 0.3],
        "reach_min": 0.0,
        "reach_max": 3.0,
        "z_min": -1.0,
        "z_max": 3.0,
        "payload": 10.0,
    },
}


def fixture_path(name: str) -> Path:
    return FIXTURES / name


def load_fixture(name: str):
    return json.loads(fixture_path(name).read_text(encoding="utf-8"))


def stick_scene_dict(**robot):
    """Stick scene with a workspace that reaches everywhere unless overridden"""
    data = copy.deepcopy(STICK_SCENE)
    data["robot"].update(robot)
    return data


def deg(values):
    return tuple(math.radians(v) for v in values)


@pytest.fixture
def stick_scene():
    return scene_from_dict(stick_scene_dict())


@pytest.fixture(autouse=True)
def _isolated(monkeypatch, tmp_path):
    """Fresh warnings and a private cache directory for every test"""
    get_diagnostics().reset()
    monkeypatch.setattr("app.cli.run_config.DATA_DIR", tmp_path / "cache")
    yield
    get_diagnostics().reset()
