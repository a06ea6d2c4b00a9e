"""
Graph Cache Service for DroopPlan
Stores built manipulation graphs as versioned JSON keyed by the hash of every
build input, so a stale cache is rejected instead of silently reused
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Sequence, Union

from app.constants import CACHE_FORMAT, CACHE_VERSION
from app.core.digest import canonical_json, content_hash
from app.core.errors import CacheMismatch, ParseError
from app.core.geometry import Transform, compose
from app.core.graph import EdgeKind, GraphEdge, GraphNode, GraphSettings, ManipulationGraph
from app.core.mechanics import TransitionCommand, TransitionDirection
from app.core.planner import BuildResult, Discretization
from app.core.sampling import CandidateNode, GraspAnnotation, NodeKind, RejectReason, grasp_set_to_dict
from app.core.scene import Scene, scene_to_dict
from app.core.storage import atomic_write, read_text

logger = logging.getLogger(__name__)


def build_hash(scene: Scene, grasps: Sequence[GraspAnnotation], disc: Discretization, settings: GraphSettings) -> str:
    """Hash of everything the graph depends on"""
    return content_hash(
        {
            "scene": scene_to_dict(scene),
            "grasps": grasp_set_to_dict(grasps),
            "discretization": disc.to_dict(),
            "graph": settings.to_dict(),
        }
    )


def _pose(t: Transform) -> Dict[str, List[float]]:
    return {
        "rotation": [float(v) for v in t.rotation.reshape(-1)],
        "translation": [float(v) for v in t.translation],
    }


def _candidate_record(c: CandidateNode) -> Dict[str, Any]:
    record = {
        "pose": _pose(c.object_pose),
        "grasp": c.grasp.id,
        "candidate_kind": c.kind.value,
        "placement_index": c.placement_index,
        "x_rotation": c.x_rotation,
        "z_rotation": c.z_rotation,
    }
    if c.reject_reason is not None:
        record["reject_reason"] = c.reject_reason.value
    return record


def _command_record(cmd: TransitionCommand) -> Dict[str, Any]:
    return {
        "direction": cmd.direction.value,
        "distance": cmd.distance,
        "theta_init": cmd.theta_init,
        "theta_target": cmd.theta_target,
        "lever": cmd.lever,
    }


def cache_to_dict(result: BuildResult, digest: str) -> Dict[str, Any]:
    graph = result.graph
    nodes = []
    for node in graph.nodes:
        record = _candidate_record(node.candidate)
        record["id"] = node.id
        record["kind"] = node.kind.value
        nodes.append(record)
    edges = []
    for edge in sorted(graph.edges(), key=lambda e: (e.source, e.target)):
        record = {
            "source": edge.source,
            "target": edge.target,
            "kind": edge.kind.value,
            "cost": edge.cost,
        }
        if edge.command is not None:
            record["command"] = _command_record(edge.command)
        edges.append(record)
    return {
        "format": CACHE_FORMAT,
        "version": CACHE_VERSION,
        "scene_hash": digest,
        "candidates": result.candidates,
        "counts": {"nodes": graph.node_counts(), "edges": graph.edge_counts()},
        "nodes": nodes,
        "edges": edges,
        "rejected": [_candidate_record(c) for c in result.rejected],
    }


def save_cache(path: Union[str, Path], result: BuildResult, digest: str):
    atomic_write(path, canonical_json(cache_to_dict(result, digest)) + "\n")
    logger.info("graph cache written to %s", path)


def _candidate_from_record(record: Dict[str, Any], grasps: Dict[int, GraspAnnotation]) -> CandidateNode:
    pose = Transform(record["pose"]["rotation"], record["pose"]["translation"])
    grasp = grasps[record["grasp"]]
    reason = record.get("reject_reason")
    return CandidateNode(
        object_pose=pose,
        grasp=grasp,
        gripper_world=compose(pose, grasp.grasp_in_object),
        kind=NodeKind(record["candidate_kind"]),
        feasible=reason is None,
        reject_reason=RejectReason(reason) if reason else None,
        placement_index=record["placement_index"],
        x_rotation=record["x_rotation"],
        z_rotation=record["z_rotation"],
    )


def cache_from_dict(data: Dict[str, Any], grasps: Sequence[GraspAnnotation], digest: str) -> BuildResult:
    if not isinstance(data, dict) or data.get("format") != CACHE_FORMAT:
        raise ParseError("not a graph cache file", field="cache")
    if data.get("version") != CACHE_VERSION:
        raise CacheMismatch(f"cache version {data.get('version')} is not {CACHE_VERSION}")
    if data.get("scene_hash") != digest:
        raise CacheMismatch("cache was built from a different scene, grasp set or discretization")

    by_id = {g.id: g for g in grasps}
    try:
        nodes = [
            GraphNode(record["id"], _candidate_from_record(record, by_id), NodeKind(record["kind"]))
            for record in data["nodes"]
        ]
        graph = ManipulationGraph(nodes)
        for record in data["edges"]:
            command = record.get("command")
            if command is not None:
                command = TransitionCommand(
                    direction=TransitionDirection(command["direction"]),
                    distance=command["distance"],
                    theta_init=command["theta_init"],
                    theta_target=command["theta_target"],
                    lever=command["lever"],
                )
            graph.add_edge(
                GraphEdge(record["source"], record["target"], EdgeKind(record["kind"]), record["cost"], command)
            )
        rejected = [_candidate_from_record(record, by_id) for record in data["rejected"]]
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, CacheMismatch):
            raise
        raise ParseError(f"malformed graph cache: {e}", field="cache") from e
    return BuildResult(graph=graph, rejected=rejected, candidates=int(data.get("candidates", 0)))


def load_cache(path: Union[str, Path], grasps: Sequence[GraspAnnotation], digest: str) -> BuildResult:
    """Load a cache and reject it when its build hash differs from digest"""
    text = read_text(path, "graph cache")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"graph cache is not valid JSON: {e.msg}", field="cache") from e
    result = cache_from_dict(data, grasps, digest)
    logger.info("graph cache loaded from %s (%d nodes)", path, len(result.graph.nodes))
    return result
