import math

import networkx as nx
import numpy as np
import pytest

from app.cli.run_config import load_run_config
from app.core.errors import NoPath, UnresolvedSelector, ValidationError
from app.core.geometry import Transform, placement_pose, pose_key
from app.core.graph import (
    EdgeKind,
    GraphEdge,
    GraphNode,
    GraphSettings,
    ManipulationGraph,
    block_edges,
    build_drooping_graph,
    expand_with_regrasp,
    query_edges,
    query_nodes,
    search_path,
)
from app.core.interpolation import inclination
from app.core.mechanics import TransitionDirection
from app.core.planner import Discretization, build_graph
from app.core.sampling import NodeKind, annotate_grasps, default_grasp_set, fan_grasp, filter_feasible, load_grasp_set
from app.core.scene import load_scene, scene_from_dict

from conftest import deg, fixture_path, load_fixture, stick_scene_dict


def _pose(i: int) -> Transform:
    return Transform.from_translation(0.01 * i, 0.0, 0.0)


def _graph(scene, count: int, edges, kind=EdgeKind.TRANSLATION) -> ManipulationGraph:
    grasp = fan_grasp(scene, 0, math.radians(90))
    nodes = [
        GraphNode(i, annotate_grasps(scene, _pose(i), [grasp])[0], NodeKind.DROOPING) for i in range(count)
    ]
    graph = ManipulationGraph(nodes)
    for u, v, cost in edges:
        graph.add_edge(GraphEdge(u, v, kind, cost))
    return graph


def _key(i: int):
    return pose_key(_pose(i))


def test_toy_chain_prefers_the_cheaper_route(stick_scene):
    graph = _graph(
        stick_scene,
        4,
        [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (0, 2, 5.0), (2, 0, 5.0), (1, 3, 4.0)],
    )
    path = search_path(graph, _key(0), _key(3))
    assert [n.id for n in path.nodes] == [0, 1, 2, 3]
    assert path.cost == 3.0
    assert path.counts["translation"] == 3


def test_ties_resolve_to_the_smallest_predecessor(stick_scene):
    graph = _graph(stick_scene, 4, [(0, 2, 1.0), (0, 1, 1.0), (1, 3, 1.0), (2, 3, 1.0)])
    path = search_path(graph, _key(0), _key(3))
    assert [n.id for n in path.nodes] == [0, 1, 3]


def test_start_equal_to_goal_gives_an_empty_plan(stick_scene):
    graph = _graph(stick_scene, 2, [(0, 1, 1.0)])
    path = search_path(graph, _key(1), _key(1))
    assert path.edges == ()
    assert path.cost == 0.0


def test_unknown_pose_is_an_unresolved_selector(stick_scene):
    graph = _graph(stick_scene, 2, [(0, 1, 1.0)])
    with pytest.raises(UnresolvedSelector):
        search_path(graph, _key(0), _key(9))


def test_disconnected_goal_raises_no_path(stick_scene):
    graph = _graph(stick_scene, 3, [(0, 1, 1.0), (1, 0, 1.0)])
    with pytest.raises(NoPath):
        search_path(graph, _key(0), _key(2))


def _oracle_cost(graph: ManipulationGraph, source: int, target: int) -> float:
    check = nx.DiGraph()
    check.add_nodes_from(n.id for n in graph.nodes)
    for e in graph.edges():
        if not graph.is_blocked(e.source, e.target):
            check.add_edge(e.source, e.target, weight=e.cost)
    try:
        return nx.bellman_ford_path_length(check, source, target, weight="weight")
    except nx.NetworkXNoPath:
        return math.inf


def test_search_matches_brute_force_on_random_graphs(stick_scene):
    rng = np.random.default_rng(2024)
    for _ in range(50):
        count = int(rng.integers(2, 201))
        edges = []
        for _ in range(int(rng.integers(count, 4 * count))):
            u, v = (int(x) for x in rng.integers(0, count, size=2))
            if u != v:
                edges.append((u, v, float(rng.choice([1.0, 3.0, 5.0, rng.uniform(0, 10)]))))
        graph = _graph(stick_scene, count, edges)
        source, target = (int(x) for x in rng.integers(0, count, size=2))
        expected = _oracle_cost(graph, source, target)
        if math.isinf(expected):
            with pytest.raises(NoPath):
                search_path(graph, _key(source), _key(target))
            continue
        path = search_path(graph, _key(source), _key(target))
        assert path.cost == pytest.approx(expected, abs=1e-9)
        for a, b in zip(path.nodes, path.nodes[1:]):
            assert graph.has_edge(a.id, b.id)
            assert not graph.is_blocked(a.id, b.id)


def test_blocking_a_cut_leaves_no_path(stick_scene):
    rng = np.random.default_rng(9)
    count = 30
    edges = [(u, v, 1.0) for u in range(count) for v in range(count) if u != v and rng.random() < 0.2]
    graph = _graph(stick_scene, count, edges)
    side = {0} | {i for i in range(1, count - 1) if rng.random() < 0.5}
    crossing = {(e.source, e.target) for e in graph.edges() if (e.source in side) != (e.target in side)}
    blocked = block_edges(graph, [(_key(u), _key(v)) for u, v in crossing])
    with pytest.raises(NoPath):
        search_path(blocked, _key(0), _key(count - 1))
    # the original graph is left alone
    assert not graph.blocked


def test_block_edges_covers_both_directions(stick_scene):
    graph = _graph(stick_scene, 3, [(0, 1, 1.0), (1, 0, 1.0), (0, 2, 5.0), (2, 1, 1.0)])
    blocked = block_edges(graph, [(_key(0), _key(1))])
    assert blocked.is_blocked(0, 1) and blocked.is_blocked(1, 0)
    assert len(blocked.edges()) == len(graph.edges())
    path = search_path(blocked, _key(0), _key(1))
    assert [n.id for n in path.nodes] == [0, 2, 1]
    assert path.cost == 6.0


def test_block_edges_rejects_unknown_poses(stick_scene):
    graph = _graph(stick_scene, 2, [(0, 1, 1.0)])
    with pytest.raises(UnresolvedSelector):
        block_edges(graph, [(_key(0), _key(7))])


def test_settings_reject_unknown_costs():
    with pytest.raises(ValidationError):
        GraphSettings(costs={"teleport": 1.0})
    with pytest.raises(ValidationError):
        GraphSettings(costs={"regrasp": -1.0})
    assert GraphSettings(costs={"regrasp": 9.0}).cost(EdgeKind.REGRASP) == 9.0


def test_only_grasp_transitions_carry_commands(stick_scene):
    with pytest.raises(ValidationError):
        _graph(stick_scene, 2, [(0, 1, 1.0)], kind=EdgeKind.GRASP_TRANSITION)


@pytest.fixture(scope="module")
def task1_build():
    config = load_run_config(fixture_path("task1_run.json"))
    scene = load_scene(config.scene)
    return scene, build_graph(scene, default_grasp_set(scene), config.discretization, config.graph_settings())


def test_transition_commands_match_gripper_height_change(task1_build):
    _, result = task1_build
    graph = result.graph
    transitions = [e for e in graph.edges() if e.kind is EdgeKind.GRASP_TRANSITION]
    assert transitions
    for edge in transitions:
        a = graph.node(edge.source).candidate.gripper_world.translation
        b = graph.node(edge.target).candidate.gripper_world.translation
        rise = b[2] - a[2]
        sign = 1.0 if edge.command.direction is TransitionDirection.UP else -1.0
        assert rise == pytest.approx(sign * edge.command.distance, abs=1e-9)
        back = graph.edge(edge.target, edge.source)
        assert back.command.distance == pytest.approx(edge.command.distance, abs=1e-12)


def test_edges_are_symmetric_and_typed(task1_build):
    _, result = task1_build
    graph = result.graph
    for edge in graph.edges():
        back = graph.edge(edge.target, edge.source)
        assert back.kind is edge.kind and back.cost == edge.cost
        a, b = graph.node(edge.source), graph.node(edge.target)
        if edge.kind is EdgeKind.TRANSLATION:
            assert a.grasp_id == b.grasp_id
        if edge.kind is EdgeKind.REGRASP:
            assert a.pose_key == b.pose_key and a.grasp_id != b.grasp_id
            assert a.regrasp_side and b.regrasp_side
        if edge.kind is EdgeKind.GRASP_TRANSITION:
            assert a.drooping_side and b.drooping_side


def test_query_helpers(task1_build):
    scene, result = task1_build
    graph = result.graph
    start = scene.placement(0.7, 0.2)
    nodes = query_nodes(graph, kind=NodeKind.DROOPING, grasp_id=3)
    assert nodes and all(n.grasp_id == 3 for n in nodes)
    ids = [n.id for n in nodes]
    for edge in query_edges(graph, ids, EdgeKind.GRASP_TRANSITION):
        assert edge.kind is EdgeKind.GRASP_TRANSITION
        assert edge.source in ids or edge.target in ids
    assert query_nodes(graph, kind=NodeKind.CONNECTING) == []
    regrasp = query_nodes(graph, kind=NodeKind.REGRASP)
    assert all(np.allclose(n.candidate.object_pose.translation, start.world_point) for n in regrasp)


def _flat_and_tilted(scene):
    grasps = [fan_grasp(scene, i, math.radians(psi)) for i, psi in enumerate((45, 90, 135))]
    point = scene.placement(0.5, 0.2)
    return grasps, placement_pose(point, 0.0, 0.0), placement_pose(point, math.radians(30), 0.0)


def _expanded(scene, flat_grasps, tilted_grasps):
    """Drooping nodes at the flat and the 30 deg pose, regrasp nodes for every grasp lying flat"""
    grasps, flat, tilted = _flat_and_tilted(scene)
    drooping = annotate_grasps(scene, flat, grasps[:flat_grasps]) if flat_grasps else []
    drooping += annotate_grasps(scene, tilted, grasps[:tilted_grasps], x_rotation=math.radians(30))
    graph = build_drooping_graph(scene, [GraphNode(i, c, NodeKind.DROOPING) for i, c in enumerate(drooping)])
    stable = filter_feasible(scene, annotate_grasps(scene, flat, grasps, NodeKind.REGRASP))
    assert all(c.feasible for c in stable)
    return graph, expand_with_regrasp(scene, graph, stable), flat, tilted


def test_regrasp_expansion_links_every_grasp_pair(stick_scene):
    graph, expanded, flat, tilted = _expanded(stick_scene, 2, 1)
    assert expanded.node_counts() == {"drooping": 1, "regrasp": 1, "connecting": 2}
    kinds = [n.kind for n in expanded.nodes]
    assert kinds == [NodeKind.CONNECTING, NodeKind.CONNECTING, NodeKind.DROOPING, NodeKind.REGRASP]
    regrasps = {frozenset((e.source, e.target)) for e in expanded.edges() if e.kind is EdgeKind.REGRASP}
    assert regrasps == {frozenset((0, 1)), frozenset((0, 3)), frozenset((1, 3))}
    # the drooping graph itself is left alone
    assert not any(e.kind is EdgeKind.REGRASP for e in graph.edges())

    path = search_path(expanded, pose_key(tilted), pose_key(flat))
    assert path.kinds == [EdgeKind.TRANSLATION]
    assert nx.has_path(expanded.digraph, 2, 3)


def test_connecting_nodes_are_the_only_way_across(stick_scene):
    _, expanded, _, _ = _expanded(stick_scene, 2, 1)
    cut = expanded.digraph.copy()
    cut.remove_nodes_from(n.id for n in expanded.nodes if n.kind is NodeKind.CONNECTING)
    for a in (n.id for n in expanded.nodes if n.kind is NodeKind.DROOPING):
        for b in (n.id for n in expanded.nodes if n.kind is NodeKind.REGRASP):
            assert not nx.has_path(cut, a, b)


def test_regrasp_nodes_without_overlap_stay_unreachable(stick_scene):
    _, expanded, flat, tilted = _expanded(stick_scene, 0, 3)
    assert expanded.node_counts()["connecting"] == 0
    with pytest.raises(NoPath):
        search_path(expanded, pose_key(tilted), pose_key(flat))



def _board_reaching_everywhere():
    data = load_fixture("duckboard_scene.json")
    data["robot"] = stick_scene_dict()["robot"]
    return scene_from_dict(data)


@pytest.mark.parametrize("source", ["default", "file"])
def test_board_transitions_stay_inside_the_quarter_turn(source):
    scene = _board_reaching_everywhere()
    if source == "default":
        grasps = default_grasp_set(scene)
    else:
        grasps = load_grasp_set(scene, fixture_path("duckboard_grasps.json"))
    disc = Discretization(placements=((0.5, 0.2),), x_steps=deg([0, 15, 45, 60, 90]), z_steps=deg([0]), stable_yaws=deg([0]))
    result = build_graph(scene, grasps, disc)
    transitions = [e for e in result.graph.edges() if e.kind is EdgeKind.GRASP_TRANSITION]
    assert transitions
    for edge in transitions:
        cmd = edge.command
        assert -1e-9 <= cmd.theta_init <= math.pi / 2.0 + 1e-9
        assert -1e-9 <= cmd.theta_final <= math.pi / 2.0 + 1e-9
        # the upright pose lies past the quarter turn once the grasp sits above the axis
        assert round(math.degrees(inclination(result.graph.node(edge.target).candidate.object_pose))) != 90


def _one_step_apart(a, b) -> bool:
    ca, cb = a.candidate, b.candidate
    if np.allclose(ca.object_pose.translation, cb.object_pose.translation, atol=1e-6):
        dz = abs(math.degrees(ca.z_rotation - cb.z_rotation)) % 360.0
        dx = abs(math.degrees(ca.x_rotation - cb.x_rotation))
        turn = min(dz, 360.0 - dz)
        if dz < 1e-6:
            return abs(dx - 15.0) < 1e-6
        # flat poses on the regrasp side turn between the stable yaws
        steps = (30.0, 90.0) if a.regrasp_side and b.regrasp_side else (30.0,)
        return dx < 1e-6 and any(abs(turn - step) < 1e-6 for step in steps)
    shift = np.abs(ca.object_pose.translation - cb.object_pose.translation)
    return a.pose_key[3:] == b.pose_key[3:] and sorted(np.round(shift, 6).tolist()) == [0.0, 0.0, 0.05]


@pytest.fixture(scope="module")
def default_build():
    scene = load_scene(fixture_path("stick_scene.json"))
    return scene, build_graph(scene, default_grasp_set(scene))


def test_default_build_completes_with_the_expected_candidate_count(default_build):
    _, result = default_build
    # 21 x 25 grid points, 7 tilts x 12 turns, five grasps
    drooping = 525 * 84 * 5
    # yaw 0 and 180 fit on 11 rows, yaw 90 and 270 on 7 columns
    stable = (2 * 11 * 21 + 2 * 7 * 25) * 5
    assert result.candidates == drooping + stable == 224_560
    counts = result.graph.node_counts()
    feasible = counts["drooping"] + 2 * counts["connecting"] + counts["regrasp"]
    assert len(result.rejected) + feasible == result.candidates
    assert counts["drooping"] > 0


def test_default_build_only_translates_between_neighbours(default_build):
    _, result = default_build
    graph = result.graph
    translations = [e for e in graph.edges() if e.kind is EdgeKind.TRANSLATION]
    assert translations
    for edge in translations:
        assert _one_step_apart(graph.node(edge.source), graph.node(edge.target))
    for edge in graph.edges():
        kinds = {graph.node(edge.source).kind, graph.node(edge.target).kind}
        assert kinds != {NodeKind.DROOPING, NodeKind.REGRASP}
