"""
Commands Module for DroopPlan
The plan, build-graph and inspect commands. Each returns an exit status and
writes its artifacts only after every stage succeeded.
"""

import logging
import math
import sys
from dataclasses import dataclass
from typing import List, Optional, Sequence, TextIO, Tuple

from app.cli.run_config import RunConfig
from app.constants import (
    EXIT_OK,
    PLAN_FILE,
    PLAN_JSON_FILE,
    REPORT_FILE,
    TRAJECTORY_FILE,
)
from app.core.diagnostics import get_diagnostics
from app.core.digest import canonical_json
from app.core.geometry import pose_key
from app.core.graph import EdgeKind, ManipulationGraph, block_edges, query_edges, query_nodes
from app.core.motion import assemble_trajectory, verify_trajectory
from app.core.planner import BuildResult, blocked_keys, build_graph, plan_task
from app.core.sampling import GraspAnnotation, NodeKind, default_grasp_set, load_grasp_set
from app.core.scene import PoseSpec, Scene, load_scene, load_task
from app.core.storage import write_all
from app.services.frames import render_frames
from app.services.graph_cache import build_hash, load_cache, save_cache
from app.services.trajectory_writer import (
    describe_command,
    fmt,
    plan_to_dict,
    render_plan,
    render_report,
    render_trajectory,
)

logger = logging.getLogger(__name__)


def load_inputs(config: RunConfig) -> Tuple[Scene, List[GraspAnnotation]]:
    scene = load_scene(config.require_scene())
    if config.grasps is not None:
        grasps = load_grasp_set(scene, config.grasps)
    else:
        grasps = default_grasp_set(scene)
    return scene, grasps


def obtain_graph(config: RunConfig, scene: Scene, grasps: Sequence[GraspAnnotation]) -> BuildResult:
    """Reuse a matching cache when one exists, otherwise build in memory"""
    settings = config.graph_settings()
    digest = build_hash(scene, grasps, config.discretization, settings)
    path = config.cache_path(digest)
    if path.exists():
        return load_cache(path, grasps, digest)
    if config.cache is not None:
        get_diagnostics().warn_once("cache-missing", f"graph cache {path} not found, building the graph")
    return build_graph(scene, grasps, config.discretization, settings)


def _blocked_pairs(config: RunConfig, scene: Scene) -> List:
    return [(pose_key(a.to_transform(scene)), pose_key(b.to_transform(scene))) for a, b in config.blocked]


def _count_line(counts) -> str:
    return " ".join(f"{k}={v}" for k, v in sorted(counts.items()))


# plan


def cmd_plan(config: RunConfig, out: Optional[TextIO] = None) -> int:
    out = out or sys.stdout
    scene, grasps = load_inputs(config)
    task = load_task(scene, config.require_task())
    result = obtain_graph(config, scene, grasps)
    path = plan_task(scene, result.graph, task, _blocked_pairs(config, scene))
    trajectory = assemble_trajectory(scene, path, config.motion)
    report = verify_trajectory(scene, trajectory, config.motion)
    warnings = get_diagnostics().get_warnings()

    files = {
        PLAN_FILE: render_plan(path, trajectory, warnings),
        TRAJECTORY_FILE: render_trajectory(trajectory),
        REPORT_FILE: render_report(report),
    }
    if config.json:
        files[PLAN_JSON_FILE] = canonical_json(plan_to_dict(path, trajectory, warnings)) + "\n"
    if config.frames:
        files.update(render_frames(scene, path))
    write_all(config.output, files)

    kinds = ", ".join(edge.kind.value for edge in path.edges) or "none"
    out.write(f"plan: {len(path.nodes)} critical poses, cost {fmt(path.cost, 3)}\n")
    out.write(f"edges: {kinds}\n")
    out.write(f"waypoints: {trajectory.total_waypoints}\n")
    out.write(f"written to {config.output}\n")
    return EXIT_OK


# build-graph


def cmd_build_graph(config: RunConfig, out: Optional[TextIO] = None) -> int:
    out = out or sys.stdout
    scene, grasps = load_inputs(config)
    settings = config.graph_settings()
    result = build_graph(scene, grasps, config.discretization, settings)
    digest = build_hash(scene, grasps, config.discretization, settings)
    target = config.cache_path(digest)
    save_cache(target, result, digest)

    graph = result.graph
    out.write(f"candidates: {result.candidates} ({len(result.rejected)} rejected)\n")
    out.write(f"nodes: {_count_line(graph.node_counts())}\n")
    out.write(f"edges: {_count_line(graph.edge_counts())}\n")
    out.write(f"components: {graph.components()}\n")
    out.write(f"cache: {target}\n")
    return EXIT_OK


# inspect


@dataclass(frozen=True)
class InspectQuery:
    kind: Optional[NodeKind] = None
    grasp_id: Optional[int] = None
    pose: Optional[PoseSpec] = None
    edges: bool = False
    edge_kind: Optional[EdgeKind] = None
    rejected: bool = False


def _searchable(config: RunConfig, scene: Scene, graph: ManipulationGraph) -> ManipulationGraph:
    pairs = _blocked_pairs(config, scene)
    if config.task is not None:
        pairs = blocked_keys(load_task(scene, config.task), scene) + pairs
    return block_edges(graph, pairs)


def cmd_inspect(config: RunConfig, query: InspectQuery, out: Optional[TextIO] = None) -> int:
    out = out or sys.stdout
    scene, grasps = load_inputs(config)
    settings = config.graph_settings()
    digest = build_hash(scene, grasps, config.discretization, settings)
    result = load_cache(config.cache_path(digest), grasps, digest)
    graph = _searchable(config, scene, result.graph)

    key = pose_key(query.pose.to_transform(scene)) if query.pose is not None else None
    nodes = query_nodes(graph, kind=query.kind, grasp_id=query.grasp_id, pose=key)
    lines = [
        f"graph: {len(graph.nodes)} nodes, {len(graph.edges())} edges, {graph.components()} components",
        f"nodes: {_count_line(graph.node_counts())}",
        f"edges: {_count_line(graph.edge_counts())}",
        f"matched nodes: {len(nodes)}",
    ]
    for node in nodes:
        c = node.candidate
        pivot = ",".join(fmt(v, 4) for v in c.object_pose.translation)
        lines.append(
            f"node {node.id} kind={node.kind.value} grasp={node.grasp_id} pivot={pivot}"
            f" x_deg={fmt(math.degrees(c.x_rotation), 1)} z_deg={fmt(math.degrees(c.z_rotation), 1)}"
            f" degree={graph.digraph.out_degree(node.id)}"
        )
    if query.edges:
        edges = query_edges(graph, (n.id for n in nodes), query.edge_kind)
        lines.append(f"matched edges: {len(edges)}")
        for edge in sorted(edges, key=lambda e: (e.source, e.target)):
            flag = " blocked" if graph.is_blocked(edge.source, edge.target) else ""
            lines.append(
                f"edge {edge.source}->{edge.target} kind={edge.kind.value} cost={fmt(edge.cost, 3)}{flag}"
                + describe_command(edge.command)
            )
    if query.rejected:
        rejected = [
            c
            for c in result.rejected
            if (query.grasp_id is None or c.grasp.id == query.grasp_id) and (key is None or c.pose_key == key)
        ]
        lines.append(f"rejected candidates: {len(rejected)}")
        for c in rejected:
            pivot = ",".join(fmt(v, 4) for v in c.object_pose.translation)
            lines.append(
                f"rejected grasp={c.grasp.id} pivot={pivot} x_deg={fmt(math.degrees(c.x_rotation), 1)}"
                f" z_deg={fmt(math.degrees(c.z_rotation), 1)} reason={c.reject_reason.value}"
            )
    out.write("\n".join(lines) + "\n")
    return EXIT_OK
