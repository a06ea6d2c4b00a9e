"""
Sampling Module for DroopPlan
Handles pose bouquets, stable placements, grasp annotations and feasibility filtering
"""

import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from app.constants import DEFAULT_GRASP_ANGLES_DEG, PENETRATION_TOLERANCE, PIVOT_TOLERANCE
from app.core.errors import StepOutOfRange, ValidationError
from app.core.geometry import (
    PlacementPoint,
    PoseKey,
    Transform,
    compose,
    placement_pose,
    pose_key,
)
from app.core.mechanics import check_payload, gripper_load_share
from app.core.scene import Scene, check_keys, contact_gap, number, object_pivot, read_json, vector

logger = logging.getLogger(__name__)

IN_PLANE_TOLERANCE = 1e-9


class NodeKind(str, Enum):
    DROOPING = "drooping"
    REGRASP = "regrasp"
    CONNECTING = "connecting"


class RejectReason(str, Enum):
    UNREACHABLE = "unreachable"
    COLLISION = "collision"
    PAYLOAD = "payload"


@dataclass(frozen=True)
class GraspAnnotation:
    """Gripper pose in the object frame; gripper Z is the approach axis, X the jaw axis"""

    id: int
    grasp_in_object: Transform
    phi: float
    grasp_point_offset: float
    jaw_width: float
    tcp: Tuple[float, float, float]

    @property
    def approach(self) -> np.ndarray:
        return self.grasp_in_object.axis(2)

    @property
    def in_plane(self) -> bool:
        """Approach in the object's YZ plane with the jaw along object X"""
        approach = self.approach
        jaw = self.grasp_in_object.axis(0)
        return abs(approach[0]) < IN_PLANE_TOLERANCE and abs(abs(jaw[0]) - 1.0) < IN_PLANE_TOLERANCE

    @property
    def psi(self) -> float:
        """Signed in-plane approach angle, measured from -Y towards -Z"""
        a = self.approach
        return math.atan2(-a[2], -a[1])


def make_grasp(scene: Scene, grasp_id: int, grasp_in_object: Transform, jaw_width: float) -> GraspAnnotation:
    """Derive phi, grasp offset and TCP for a gripper pose given in the object frame"""
    prefix = f"grasps[{grasp_id}]"
    if not 0 < jaw_width <= scene.gripper.jaw_max_open + 1e-12:
        raise ValidationError(
            f"jaw width {jaw_width} outside (0, {scene.gripper.jaw_max_open}]", field=f"{prefix}.jaw_width"
        )
    tcp = grasp_in_object.apply([0.0, 0.0, scene.gripper.ee_length])
    offset = float(tcp[1])
    if not -1e-9 <= offset <= scene.object.length + 1e-9:
        raise ValidationError(
            f"grasp point {offset:.4f} m lies off the object", field=f"{prefix}.position"
        )
    approach = grasp_in_object.axis(2)
    phi = math.acos(max(-1.0, min(1.0, -float(approach[1]))))
    return GraspAnnotation(
        id=grasp_id,
        grasp_in_object=grasp_in_object,
        phi=phi,
        grasp_point_offset=min(max(offset, 0.0), scene.object.length),
        jaw_width=jaw_width,
        tcp=(float(tcp[0]), float(tcp[1]), float(tcp[2])),
    )


def default_grasp_point(scene: Scene) -> np.ndarray:
    obj = scene.object
    if obj.kind == "board":
        # pinch the far-end slat at mid thickness
        return np.array([0.0, obj.length, obj.shape.thickness / 2.0])
    return np.array([0.0, obj.length, 0.0])


def default_jaw_width(scene: Scene) -> float:
    obj = scene.object
    width = obj.shape.thickness if obj.kind == "board" else obj.shape.diameter
    return min(width, scene.gripper.jaw_max_open)


def fan_grasp(scene: Scene, grasp_id: int, psi: float, tcp=None, jaw_width: Optional[float] = None) -> GraspAnnotation:
    """In-plane grasp approaching the TCP point at angle psi from the object's -Y axis"""
    tcp = default_grasp_point(scene) if tcp is None else np.asarray(tcp, dtype=float)
    ee = scene.gripper.ee_length
    grasp = compose(
        compose(Transform.from_translation(*tcp), Transform.rot_x(psi + math.pi / 2.0)),
        Transform.from_translation(0.0, 0.0, -ee),
    )
    return make_grasp(scene, grasp_id, grasp, default_jaw_width(scene) if jaw_width is None else jaw_width)


def default_grasp_set(scene: Scene, angles_deg: Sequence[float] = DEFAULT_GRASP_ANGLES_DEG) -> List[GraspAnnotation]:
    return [fan_grasp(scene, i, math.radians(a)) for i, a in enumerate(angles_deg)]


def grasp_set_from_dict(scene: Scene, data) -> List[GraspAnnotation]:
    """Parse {"grasps": [{id, position, axis, angle_deg, jaw_width}]}; position is the gripper origin"""
    check_keys(data, "grasp_file", {"grasps"}, set())
    records = data["grasps"]
    if not isinstance(records, list) or not records:
        raise ValidationError("must be a non-empty list", field="grasps")
    grasps = []
    seen = set()
    for i, record in enumerate(records):
        prefix = f"grasps[{i}]"
        check_keys(record, prefix, {"id", "position", "axis", "angle_deg", "jaw_width"}, set())
        grasp_id = record["id"]
        if isinstance(grasp_id, bool) or not isinstance(grasp_id, int) or grasp_id < 0:
            raise ValidationError("must be a non-negative integer", field=f"{prefix}.id")
        if grasp_id in seen:
            raise ValidationError(f"duplicate grasp id {grasp_id}", field=f"{prefix}.id")
        seen.add(grasp_id)
        axis = np.array(vector(record, "axis", prefix, 3))
        norm = float(np.linalg.norm(axis))
        if norm <= 1e-12:
            raise ValidationError("must be non-zero", field=f"{prefix}.axis")
        angle = math.radians(number(record, "angle_deg", prefix))
        pose = Transform.from_axis_angle(axis / norm, angle, vector(record, "position", prefix, 3))
        grasps.append(make_grasp(scene, grasp_id, pose, number(record, "jaw_width", prefix)))
    return grasps


def load_grasp_set(scene: Scene, path: Union[str, Path]) -> List[GraspAnnotation]:
    grasps = grasp_set_from_dict(scene, read_json(path, "grasp file"))
    logger.debug("loaded %d grasps from %s", len(grasps), path)
    return grasps


def grasp_set_to_dict(grasps: Sequence[GraspAnnotation]) -> dict:
    records = []
    for g in grasps:
        rotvec = g.grasp_in_object.rotvec()
        angle = float(np.linalg.norm(rotvec))
        axis = rotvec / angle if angle > 1e-12 else np.array([1.0, 0.0, 0.0])
        records.append(
            {
                "id": g.id,
                "position": [float(v) for v in g.grasp_in_object.translation],
                "axis": [float(v) for v in axis],
                "angle_deg": math.degrees(angle),
                "jaw_width": g.jaw_width,
            }
        )
    return {"grasps": records}


# Poses


@dataclass(frozen=True)
class BouquetPose:
    transform: Transform
    x_rotation: float
    z_rotation: float


@dataclass(frozen=True)
class Bouquet:
    placement: PlacementPoint
    poses: Tuple[BouquetPose, ...]


@dataclass(frozen=True)
class CandidateNode:
    object_pose: Transform
    grasp: GraspAnnotation
    gripper_world: Transform
    kind: NodeKind = NodeKind.DROOPING
    feasible: bool = True
    reject_reason: Optional[RejectReason] = None
    placement_index: int = -1
    x_rotation: float = 0.0
    z_rotation: float = 0.0

    @property
    def pose_key(self) -> PoseKey:
        return pose_key(self.object_pose)

    @property
    def tcp_world(self) -> np.ndarray:
        return self.object_pose.apply(self.grasp.tcp)


def _check_steps(steps: Sequence[float], low: float, high: float, closed: bool, name: str):
    for step in steps:
        upper_ok = step <= high + 1e-12 if closed else step < high - 1e-12
        if not (step >= low - 1e-12 and upper_ok):
            raise StepOutOfRange(f"{name} step {math.degrees(step):.3f} deg out of range")


def generate_bouquet(scene: Scene, placement: PlacementPoint, x_steps: Sequence[float], z_steps: Sequence[float]) -> Bouquet:
    """Poses sharing one contact point: tilt about the placement X axis, then turn about Z"""
    _check_steps(x_steps, 0.0, math.pi / 2.0, True, "x")
    _check_steps(z_steps, 0.0, 2.0 * math.pi, False, "z")
    poses = []
    for x in x_steps:
        for z in z_steps:
            poses.append(BouquetPose(placement_pose(placement, x, z), float(x), float(z)))
    bouquet = Bouquet(placement=placement, poses=tuple(poses))
    _check_bouquet(scene, bouquet)
    return bouquet


def _check_bouquet(scene: Scene, bouquet: Bouquet):
    target = bouquet.placement.world_point
    for pose in bouquet.poses:
        drift = float(np.linalg.norm(object_pivot(scene.object, pose.transform) - target))
        if drift > PIVOT_TOLERANCE:
            raise ValidationError(f"bouquet pose moved the pivot by {drift:.2e} m")
        if contact_gap(scene, pose.transform) < -PENETRATION_TOLERANCE:
            raise ValidationError("bouquet pose penetrates the surface")


def footprint_inside(scene: Scene, pose: Transform) -> bool:
    points = pose.apply(scene.object.shape.contact_points())
    return all(scene.surface.contains_world(p, tol=1e-9) for p in points)


def sample_stable_placements(scene: Scene, placements: Sequence[PlacementPoint], yaw_steps: Sequence[float]) -> List[Transform]:
    """Flat poses at each placement and yaw whose footprint stays on the surface"""
    _check_steps(yaw_steps, 0.0, 2.0 * math.pi, False, "yaw")
    return [pose.transform for _, pose in tag_stable_placements(scene, placements, yaw_steps)]


def tag_stable_placements(scene: Scene, placements: Sequence[PlacementPoint], yaw_steps: Sequence[float]) -> List[Tuple[int, BouquetPose]]:
    tagged = []
    for index, placement in enumerate(placements):
        for yaw in yaw_steps:
            pose = placement_pose(placement, 0.0, yaw)
            if footprint_inside(scene, pose):
                tagged.append((index, BouquetPose(pose, 0.0, float(yaw))))
    return tagged


def annotate_grasps(
    scene: Scene,
    object_pose: Transform,
    grasp_set: Sequence[GraspAnnotation],
    kind: NodeKind = NodeKind.DROOPING,
    placement_index: int = -1,
    x_rotation: float = 0.0,
    z_rotation: float = 0.0,
) -> List[CandidateNode]:
    if not grasp_set:
        raise ValidationError("grasp set is empty", field="grasps")
    return [
        CandidateNode(
            object_pose=object_pose,
            grasp=grasp,
            gripper_world=compose(object_pose, grasp.grasp_in_object),
            kind=kind,
            placement_index=placement_index,
            x_rotation=x_rotation,
            z_rotation=z_rotation,
        )
        for grasp in grasp_set
    ]


# Feasibility


def gripper_body_min_z(scene: Scene, gripper_world: Transform) -> float:
    """Lowest Z of the gripper body box, which spans from the flange towards the TCP"""
    bx, by, bz = scene.gripper.body_box
    rot = gripper_world.rotation
    center_z = gripper_world.translation[2] + bz / 2.0 * rot[2, 2]
    return float(center_z - bx / 2.0 * abs(rot[2, 0]) - by / 2.0 * abs(rot[2, 1]) - bz / 2.0 * abs(rot[2, 2]))


def gripper_collides(scene: Scene, gripper_world: Transform) -> bool:
    return gripper_body_min_z(scene, gripper_world) < scene.surface.height - 1e-9


def candidate_load(scene: Scene, candidate: CandidateNode) -> float:
    return gripper_load_share(
        scene,
        candidate.object_pose,
        candidate.grasp.grasp_point_offset,
        regrasp_phase=candidate.kind is NodeKind.REGRASP,
    )


def evaluate_candidate(scene: Scene, candidate: CandidateNode) -> Optional[RejectReason]:
    flange = candidate.gripper_world.translation
    if not scene.robot.in_reach(flange):
        return RejectReason.UNREACHABLE
    if gripper_collides(scene, candidate.gripper_world):
        return RejectReason.COLLISION
    if not check_payload(scene, candidate_load(scene, candidate)):
        return RejectReason.PAYLOAD
    return None


def filter_feasible(scene: Scene, candidates: Sequence[CandidateNode]) -> List[CandidateNode]:
    """Mark each candidate feasible or not; infeasible ones are kept with a reason"""
    marked = []
    for candidate in candidates:
        reason = evaluate_candidate(scene, candidate)
        marked.append(replace(candidate, feasible=reason is None, reject_reason=reason))
    return marked
