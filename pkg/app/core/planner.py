"""
Planner Module for DroopPlan
Runs the build pipeline (placements, bouquets, grasps, feasibility, graph) and
answers start/goal queries against a built graph
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from app.constants import (
    DEFAULT_GRID_SPACING,
    DEFAULT_STABLE_YAWS_DEG,
    DEFAULT_X_STEPS_DEG,
    DEFAULT_Z_STEPS_DEG,
)
from app.core.diagnostics import get_diagnostics
from app.core.errors import ValidationError
from app.core.geometry import PlacementPoint, PoseKey, discretize_surface, pose_key
from app.core.graph import (
    GraphNode,
    GraphSettings,
    ManipulationGraph,
    PlanPath,
    block_edges,
    build_drooping_graph,
    expand_with_regrasp,
    search_path,
)
from app.core.sampling import (
    CandidateNode,
    GraspAnnotation,
    NodeKind,
    annotate_grasps,
    filter_feasible,
    generate_bouquet,
    tag_stable_placements,
)
from app.core.scene import Scene, TaskSpec

logger = logging.getLogger(__name__)


def _radians(values: Sequence[float]) -> Tuple[float, ...]:
    return tuple(math.radians(v) for v in values)


@dataclass(frozen=True)
class Discretization:
    """Sampling grid; placements are surface-local (x, y), None means a full grid"""

    placements: Optional[Tuple[Tuple[float, float], ...]] = None
    stable_placements: Optional[Tuple[Tuple[float, float], ...]] = None
    grid_spacing: float = DEFAULT_GRID_SPACING
    x_steps: Tuple[float, ...] = field(default_factory=lambda: _radians(DEFAULT_X_STEPS_DEG))
    z_steps: Tuple[float, ...] = field(default_factory=lambda: _radians(DEFAULT_Z_STEPS_DEG))
    stable_yaws: Tuple[float, ...] = field(default_factory=lambda: _radians(DEFAULT_STABLE_YAWS_DEG))

    def __post_init__(self):
        if not self.x_steps or not self.z_steps:
            raise ValidationError("bouquet step lists must not be empty", field="discretization")

    def bouquet_points(self, scene: Scene) -> List[PlacementPoint]:
        if self.placements is None:
            return discretize_surface(scene.surface, self.grid_spacing)
        return [scene.placement(x, y) for x, y in self.placements]

    def stable_points(self, scene: Scene) -> List[PlacementPoint]:
        if self.stable_placements is None:
            return self.bouquet_points(scene)
        return [scene.placement(x, y) for x, y in self.stable_placements]

    def to_dict(self) -> Dict:
        def points(values):
            return None if values is None else [[x, y] for x, y in values]

        return {
            "placements": points(self.placements),
            "stable_placements": points(self.stable_placements),
            "grid_spacing": self.grid_spacing,
            "x_steps_deg": [round(math.degrees(v), 9) for v in self.x_steps],
            "z_steps_deg": [round(math.degrees(v), 9) for v in self.z_steps],
            "stable_yaws_deg": [round(math.degrees(v), 9) for v in self.stable_yaws],
        }


@dataclass
class BuildResult:
    graph: ManipulationGraph
    rejected: List[CandidateNode]
    candidates: int


def bouquet_candidates(scene: Scene, grasps: Sequence[GraspAnnotation], disc: Discretization) -> List[CandidateNode]:
    """All (bouquet pose, grasp) candidates in placement, x, z, grasp order"""
    candidates = []
    for index, point in enumerate(disc.bouquet_points(scene)):
        bouquet = generate_bouquet(scene, point, disc.x_steps, disc.z_steps)
        for pose in bouquet.poses:
            candidates.extend(
                annotate_grasps(
                    scene,
                    pose.transform,
                    grasps,
                    NodeKind.DROOPING,
                    placement_index=index,
                    x_rotation=pose.x_rotation,
                    z_rotation=pose.z_rotation,
                )
            )
    return candidates


def stable_candidates(scene: Scene, grasps: Sequence[GraspAnnotation], disc: Discretization) -> List[CandidateNode]:
    candidates = []
    for index, pose in tag_stable_placements(scene, disc.stable_points(scene), disc.stable_yaws):
        candidates.extend(
            annotate_grasps(
                scene,
                pose.transform,
                grasps,
                NodeKind.REGRASP,
                placement_index=index,
                z_rotation=pose.z_rotation,
            )
        )
    return candidates


def _note_unused_grasps(graph: ManipulationGraph, grasps: Sequence[GraspAnnotation]):
    used = {node.grasp_id for node in graph.nodes}
    diagnostics = get_diagnostics()
    for grasp in grasps:
        if grasp.id not in used:
            diagnostics.warn_once(f"grasp-{grasp.id}", f"grasp {grasp.id} is not feasible at any sampled pose")


def build_graph(
    scene: Scene,
    grasps: Sequence[GraspAnnotation],
    disc: Optional[Discretization] = None,
    settings: Optional[GraphSettings] = None,
) -> BuildResult:
    """Sample, filter and connect every candidate into one manipulation graph"""
    disc = disc or Discretization()
    settings = settings or GraphSettings()
    drooping = filter_feasible(scene, bouquet_candidates(scene, grasps, disc))
    stable = filter_feasible(scene, stable_candidates(scene, grasps, disc))
    rejected = [c for c in drooping + stable if not c.feasible]

    nodes = [GraphNode(i, c, NodeKind.DROOPING) for i, c in enumerate(c for c in drooping if c.feasible)]
    graph = build_drooping_graph(scene, nodes, settings)
    graph = expand_with_regrasp(scene, graph, [c for c in stable if c.feasible], settings)
    _note_unused_grasps(graph, grasps)
    logger.info(
        "built graph: %d of %d candidates feasible, %d components",
        len(graph.nodes),
        len(drooping) + len(stable),
        graph.components(),
    )
    return BuildResult(graph=graph, rejected=rejected, candidates=len(drooping) + len(stable))


def blocked_keys(task: TaskSpec, scene: Scene) -> List[Tuple[PoseKey, PoseKey]]:
    return [(pose_key(a.to_transform(scene)), pose_key(b.to_transform(scene))) for a, b in task.blocked]


def plan_task(
    scene: Scene,
    graph: ManipulationGraph,
    task: TaskSpec,
    extra_blocked: Sequence[Tuple[PoseKey, PoseKey]] = (),
) -> PlanPath:
    """Block the configured pose pairs and search from the start pose to the goal pose"""
    pairs = blocked_keys(task, scene) + list(extra_blocked)
    searchable = block_edges(graph, pairs)
    path = search_path(searchable, pose_key(task.start_pose), pose_key(task.goal_pose))
    logger.info("plan: %d critical poses, cost %.1f, %s", len(path.nodes), path.cost, path.counts)
    return path
