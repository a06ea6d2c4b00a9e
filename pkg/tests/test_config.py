import math

import pytest

from app.cli.parser import build_parser, resolve_config
from app.cli.run_config import load_run_config, parse_block, parse_pose, run_config_from_dict
from app.core.errors import StepOutOfRange, ValidationError
from app.core.scene import load_scene, scene_from_dict, scene_to_dict, task_from_dict

from conftest import fixture_path, load_fixture, stick_scene_dict


@pytest.mark.parametrize("name", ["stick_scene.json", "duckboard_scene.json"])
def test_scene_survives_a_round_trip(name):
    scene = load_scene(fixture_path(name))
    again = scene_from_dict(scene_to_dict(scene))
    assert scene_to_dict(again) == scene_to_dict(scene)


def test_board_weight_and_shape():
    scene = load_scene(fixture_path("duckboard_scene.json"))
    assert scene.object.kind == "board"
    assert scene.weight == pytest.approx(0.92 * 9.81)
    assert scene.object.length == 0.75 and scene.object.shape.width == 0.33 and scene.object.shape.thickness == 0.035


@pytest.mark.parametrize(
    "section, key, value",
    [
        ("object", "mass", 0.0),
        ("object", "length", -1.0),
        ("gripper", "ee_length", 0.0),
        ("gripper", "body_box", [0.04, 0.08]),
        ("robot", "reach_min", 5.0),
        ("robot", "payload", 0.0),
        ("surface", "extent_x", "wide"),
    ],
)
def test_bad_scene_values_are_rejected(section, key, value):
    data = stick_scene_dict()
    data[section][key] = value
    with pytest.raises(ValidationError):
        scene_from_dict(data)


def test_unknown_scene_keys_are_rejected():
    data = stick_scene_dict()
    data["object"]["width"] = 0.2
    with pytest.raises(ValidationError, match="width"):
        scene_from_dict(data)
    data = stick_scene_dict()
    data["colour"] = "red"
    with pytest.raises(ValidationError):
        scene_from_dict(data)


def test_task_poses_are_checked(stick_scene):
    with pytest.raises(ValidationError):
        task_from_dict(stick_scene, {"start": {"placement": [0.5, 0.2], "tilt_deg": 95}, "goal": {"placement": [0.5, 0.2]}})
    with pytest.raises(ValidationError):
        task_from_dict(stick_scene, {"start": {"placement": [2.0, 0.2]}, "goal": {"placement": [0.5, 0.2]}})
    with pytest.raises(ValidationError):
        task_from_dict(stick_scene, {"start": {"placement": [0.5, 0.2]}})
    task = task_from_dict(stick_scene, load_fixture("task2.json") | {"start": {"placement": [0.5, 0.2]}})
    assert len(task.blocked) == 2


def test_run_file_paths_resolve_next_to_it():
    config = load_run_config(fixture_path("task2_run.json"))
    assert config.scene == fixture_path("stick_scene_blocked.json")
    assert config.grasps == fixture_path("stick_grasps_blocked.json")
    assert config.discretization.x_steps == tuple(math.radians(v) for v in (15, 30, 45, 60))
    assert config.costs == {"translation": 1.0, "grasp_transition": 3.0, "regrasp": 5.0}


def test_run_file_rejects_unknown_and_out_of_range_values():
    with pytest.raises(ValidationError):
        run_config_from_dict({"scen": "x.json"})
    with pytest.raises(StepOutOfRange):
        run_config_from_dict({"discretization": {"z_steps_deg": [0, 360]}})
    with pytest.raises(ValidationError):
        run_config_from_dict({"costs": {"regrasp": -2}})
    with pytest.raises(ValidationError):
        run_config_from_dict({"graph": {"edge_check_samples": 0}})
    config = run_config_from_dict({"discretization": {"x_steps_deg": [90]}, "costs": {"regrasp": 8}})
    assert config.discretization.x_steps == (math.pi / 2,)
    assert config.costs["regrasp"] == 8.0 and config.costs["translation"] == 1.0


def test_flags_override_the_run_file(tmp_path):
    args = build_parser().parse_args(
        [
            "plan",
            "--config",
            str(fixture_path("task1_run.json")),
            "--output",
            str(tmp_path),
            "--x-steps",
            "15,30,60",
            "--cost",
            "translation=2",
            "--block",
            "0.7,0.2,15,0;0.7,0.2,60,0",
            "--frames",
        ]
    )
    config = resolve_config(args)
    assert config.output == tmp_path
    assert config.discretization.x_steps == tuple(math.radians(v) for v in (15, 30, 60))
    assert config.discretization.placements == ((0.7, 0.2),)
    assert config.costs["translation"] == 2.0
    assert len(config.blocked) == 1
    assert config.frames is True and config.json is False


def test_pose_and_block_text():
    pose = parse_pose("0.5,0.2,30", "--pose")
    assert pose.placement == (0.5, 0.2) and pose.tilt == pytest.approx(math.radians(30)) and pose.yaw == 0.0
    with pytest.raises(ValidationError):
        parse_pose("0.5", "--pose")
    with pytest.raises(ValidationError):
        parse_pose("0.5,0.2,120", "--pose")
    with pytest.raises(ValidationError):
        parse_block("0.5,0.2,15")
