import math

import numpy as np

from app.core.geometry import placement_pose
from app.core.graph import EdgeKind, GraphEdge, GraphNode, PlanPath
from app.core.sampling import NodeKind, annotate_grasps, fan_grasp
from app.core.scene import load_scene, object_lowest_point
from app.services.frames import draw_frame, frame_svg, plan_layout, render_frames

from conftest import fixture_path


def _node(scene, node_id, tilt_deg, psi_deg):
    pose = placement_pose(scene.placement(0.5, 0.2), math.radians(tilt_deg), 0.0)
    grasp = fan_grasp(scene, node_id, math.radians(psi_deg))
    return GraphNode(node_id, annotate_grasps(scene, pose, [grasp])[0], NodeKind.DROOPING)


def test_contact_point_lands_where_the_layout_says(stick_scene):
    nodes = [_node(stick_scene, 0, 30, 90), _node(stick_scene, 1, 75, 45)]
    layout = plan_layout(stick_scene, nodes)
    for node in nodes:
        fig = draw_frame(stick_scene, node, layout)
        ax = fig.axes[0]
        contact = object_lowest_point(stick_scene.object, node.candidate.object_pose)
        drawn = ax.transData.transform((contact[0], contact[2]))
        assert np.allclose(drawn, layout.to_display(contact[0], contact[2]), atol=1.0)
        width, height = fig.get_size_inches() * fig.dpi
        assert 0 <= drawn[0] <= width and 0 <= drawn[1] <= height


def test_layout_covers_surface_and_gripper(stick_scene):
    node = _node(stick_scene, 0, 75, 45)
    layout = plan_layout(stick_scene, [node])
    flange = node.candidate.gripper_world.translation
    assert layout.x0 < 0.0 and layout.x1 > 1.0
    assert layout.z0 < stick_scene.surface.height < layout.z1
    assert layout.z0 < flange[2] < layout.z1


def test_frames_are_svg_and_repeatable(stick_scene):
    a, b = _node(stick_scene, 0, 30, 90), _node(stick_scene, 1, 75, 45)
    path = PlanPath(nodes=(a, b), edges=(GraphEdge(0, 1, EdgeKind.TRANSLATION, 1.0),), cost=1.0)
    first = render_frames(stick_scene, path)
    second = render_frames(stick_scene, path)
    assert sorted(first) == ["frame_000.svg", "frame_001.svg"]
    assert first == second
    for text in first.values():
        assert text.lstrip().startswith("<?xml")
        assert 'id="contact' in text
        assert "<dc:date>" not in text


def test_board_frames_draw_a_polygon():
    scene = load_scene(fixture_path("duckboard_scene.json"))
    node = _node(scene, 1, 15, 90)
    svg = frame_svg(draw_frame(scene, node, plan_layout(scene, [node]), "board"))
    assert 'id="object' in svg and 'id="gripper' in svg
