import math

import numpy as np
import pytest

from app.constants import DEFAULT_X_STEPS_DEG, DEFAULT_Z_STEPS_DEG
from app.core.errors import StepOutOfRange, ValidationError
from app.core.geometry import Transform, compose, discretize_surface, placement_pose
from app.core.sampling import (
    NodeKind,
    RejectReason,
    annotate_grasps,
    candidate_load,
    default_grasp_set,
    evaluate_candidate,
    fan_grasp,
    filter_feasible,
    generate_bouquet,
    grasp_set_from_dict,
    gripper_body_min_z,
    load_grasp_set,
    sample_stable_placements,
)
from app.core.scene import contact_gap, load_scene, object_pivot, scene_from_dict

from conftest import deg, fixture_path, load_fixture, stick_scene_dict

X_STEPS = [0, 15, 30, 45, 60, 75, 90]
Z_STEPS = list(range(0, 360, 30))


def test_bouquet_keeps_pivot_and_stays_above_surface():
    scene = load_scene(fixture_path("stick_scene.json"))
    point = scene.placement(0.7, 0.2)
    bouquet = generate_bouquet(scene, point, deg(X_STEPS), deg(Z_STEPS))
    assert len(bouquet.poses) == len(X_STEPS) * len(Z_STEPS)
    for pose in bouquet.poses:
        drift = np.linalg.norm(object_pivot(scene.object, pose.transform) - point.world_point)
        assert drift <= 1e-6
        assert contact_gap(scene, pose.transform) >= -1e-6


def test_bouquet_for_board_touches_at_the_pivot_edge():
    scene = load_scene(fixture_path("duckboard_scene.json"))
    bouquet = generate_bouquet(scene, scene.placement(0.5, 0.2), deg([0, 15, 60]), deg([0, 90]))
    assert len(bouquet.poses) == 6
    for pose in bouquet.poses:
        assert abs(contact_gap(scene, pose.transform)) <= 1e-9


def test_bouquet_rejects_steps_outside_their_range(stick_scene):
    point = stick_scene.placement(0.5, 0.2)
    with pytest.raises(StepOutOfRange):
        generate_bouquet(stick_scene, point, deg([0, 95]), deg([0]))
    with pytest.raises(StepOutOfRange):
        generate_bouquet(stick_scene, point, deg([0]), deg([360]))


def test_stable_placements_keep_the_footprint_on_the_surface(stick_scene):
    poses = sample_stable_placements(stick_scene, [stick_scene.placement(0.7, 0.2)], deg([0, 90, 180, 270]))
    # yaw 180 runs off the near edge, yaw 270 off the far side
    assert len(poses) == 2
    for pose in poses:
        assert abs(contact_gap(stick_scene, pose)) <= 1e-9


def test_fan_grasp_geometry(stick_scene):
    grasp = fan_grasp(stick_scene, 3, math.radians(135))
    assert grasp.psi == pytest.approx(math.radians(135))
    assert grasp.phi == pytest.approx(math.radians(135))
    assert np.allclose(grasp.tcp, [0.0, 0.656, 0.0], atol=1e-12)
    ee = stick_scene.gripper.ee_length
    flange = grasp.grasp_in_object.translation
    assert np.allclose(flange, [0.0, 0.656 + ee * math.cos(math.radians(135)), ee * math.sin(math.radians(135))])
    assert grasp.in_plane


def test_default_grasp_set_is_a_fan_of_five(stick_scene):
    grasps = default_grasp_set(stick_scene)
    assert [g.id for g in grasps] == [0, 1, 2, 3, 4]
    assert [round(math.degrees(g.psi)) for g in grasps] == [0, 45, 90, 135, 180]


def test_grasp_file_matches_fan_grasps():
    scene = load_scene(fixture_path("duckboard_scene.json"))
    grasps = load_grasp_set(scene, fixture_path("duckboard_grasps.json"))
    assert [round(math.degrees(g.psi), 6) for g in grasps] == [45.0, 90.0, 135.0, 90.0]
    assert np.allclose(grasps[0].tcp, [0.0, 0.75, 0.0175], atol=1e-9)
    assert np.allclose(grasps[3].tcp, [0.0, 0.6, 0.0175], atol=1e-9)
    for g in grasps:
        assert g.jaw_width == 0.035


def test_grasp_file_rejects_duplicates_and_wide_jaws(stick_scene):
    record = {"id": 0, "position": [0.0, 0.656, 0.17], "axis": [1, 0, 0], "angle_deg": 180.0, "jaw_width": 0.03}
    with pytest.raises(ValidationError):
        grasp_set_from_dict(stick_scene, {"grasps": [record, dict(record)]})
    with pytest.raises(ValidationError):
        grasp_set_from_dict(stick_scene, {"grasps": [dict(record, jaw_width=0.5)]})
    with pytest.raises(ValidationError):
        grasp_set_from_dict(stick_scene, {"grasps": [dict(record, position=[0.0, 2.0, 0.17])]})


def test_vertical_gripper_body_clears_a_flat_stick(stick_scene):
    grasp = fan_grasp(stick_scene, 0, math.radians(90))
    (candidate,) = annotate_grasps(stick_scene, Transform.identity(), [grasp])
    # flange at ee height, box hanging down towards the TCP
    assert gripper_body_min_z(stick_scene, candidate.gripper_world) == pytest.approx(0.17 - 0.10)
    assert evaluate_candidate(stick_scene, candidate) is None


def test_feasibility_reasons():
    scene = scene_from_dict(stick_scene_dict())
    flat = Transform.from_translation(0.5, 0.2, 0.0)
    grasps = [fan_grasp(scene, 0, 0.0), fan_grasp(scene, 1, math.radians(90))]
    marked = filter_feasible(scene, annotate_grasps(scene, flat, grasps, NodeKind.REGRASP))
    assert marked[0].reject_reason is RejectReason.COLLISION
    assert marked[1].feasible

    far = scene_from_dict(stick_scene_dict(reach_max=0.1))
    (c,) = filter_feasible(far, annotate_grasps(far, flat, grasps[1:]))
    assert c.reject_reason is RejectReason.UNREACHABLE

    weak = scene_from_dict(stick_scene_dict(payload=0.5))
    (c,) = filter_feasible(weak, annotate_grasps(weak, flat, grasps[1:]))
    assert c.reject_reason is RejectReason.PAYLOAD
    # the surface carries the object while the hand is open
    (c,) = filter_feasible(weak, annotate_grasps(weak, flat, grasps[1:], NodeKind.REGRASP))
    assert c.feasible


def test_annotate_requires_grasps(stick_scene):
    with pytest.raises(ValidationError):
        annotate_grasps(stick_scene, Transform.identity(), [])


def test_stable_placements_on_a_small_grid_match_a_footprint_count():
    data = stick_scene_dict()
    data["surface"].update(extent_x=0.5, extent_y=0.3)
    data["object"]["length"] = 0.2
    scene = scene_from_dict(data)
    points = discretize_surface(scene.surface, 0.05)
    assert len(points) == 77
    poses = sample_stable_placements(scene, points, deg([0, 90, 180, 270]))
    # +Y and -Y fit from three rows each, -X and +X from seven columns each
    assert len(poses) == 33 + 33 + 49 + 49
    assert all(isinstance(pose, Transform) for pose in poses)
    for pose in poses:
        for point in pose.apply(scene.object.shape.contact_points()):
            assert scene.surface.contains_world(point)


def test_default_bouquet_and_grasp_counts(stick_scene):
    bouquet = generate_bouquet(stick_scene, stick_scene.placement(0.5, 0.5), deg(DEFAULT_X_STEPS_DEG), deg(DEFAULT_Z_STEPS_DEG))
    assert len(bouquet.poses) == 84
    grasps = default_grasp_set(stick_scene)
    candidates = [c for pose in bouquet.poses for c in annotate_grasps(stick_scene, pose.transform, grasps)]
    assert len(candidates) == 420


def test_filter_feasible_is_idempotent_and_keeps_order():
    scene = scene_from_dict(stick_scene_dict(reach_max=0.6))
    point = scene.placement(0.5, 0.2)
    bouquet = generate_bouquet(scene, point, deg([0, 30, 60]), deg([0, 90, 180]))
    candidates = [c for pose in bouquet.poses for c in annotate_grasps(scene, pose.transform, default_grasp_set(scene))]
    once = filter_feasible(scene, candidates)
    twice = filter_feasible(scene, once)
    assert [(c.pose_key, c.grasp.id) for c in once] == [(c.pose_key, c.grasp.id) for c in candidates]
    assert [(c.feasible, c.reject_reason) for c in twice] == [(c.feasible, c.reject_reason) for c in once]
    assert any(c.feasible for c in once) and not all(c.feasible for c in once)


def test_annotated_grippers_follow_the_object_pose(stick_scene):
    rng = np.random.default_rng(5)
    grasps = default_grasp_set(stick_scene)
    pose = placement_pose(stick_scene.placement(0.5, 0.2), math.radians(30), math.radians(60))
    for _ in range(20):
        axis = rng.normal(size=3)
        move = Transform.from_axis_angle(axis / np.linalg.norm(axis), rng.uniform(-math.pi, math.pi), rng.uniform(-1, 1, size=3))
        before = annotate_grasps(stick_scene, pose, grasps)
        after = annotate_grasps(stick_scene, compose(move, pose), grasps)
        for b, a in zip(before, after):
            assert a.gripper_world.almost_equal(compose(move, b.gripper_world), tol=1e-9)


def _board_scene(payload):
    data = load_fixture("duckboard_scene.json")
    data["robot"] = dict(stick_scene_dict()["robot"], payload=payload)
    return scene_from_dict(data)


@pytest.mark.parametrize("payload, reason", [(4.4, RejectReason.PAYLOAD), (4.6, None)])
def test_board_end_grasp_needs_half_the_weight_of_payload(payload, reason):
    scene = _board_scene(payload)
    flat = placement_pose(scene.placement(0.5, 0.2), 0.0, 0.0)
    (candidate,) = filter_feasible(scene, annotate_grasps(scene, flat, [fan_grasp(scene, 0, math.radians(90))]))
    # 0.92 kg held at the far end of a flat board: 4.51 N on the gripper
    assert candidate_load(scene, candidate) == pytest.approx(0.92 * 9.81 / 2.0)
    assert candidate.reject_reason is reason
    assert candidate.feasible is (reason is None)
