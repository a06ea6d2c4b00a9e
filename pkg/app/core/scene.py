"""
Scene Module for DroopPlan
Handles object, gripper and robot models and their JSON configuration files
"""

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np

from app.constants import DEFAULT_GRAVITY, PENETRATION_TOLERANCE
from app.core.errors import IoError, ParseError, ValidationError
from app.core.geometry import (
    PlacementPoint,
    SupportSurface,
    Transform,
    compose,
    placement_pose,
)

logger = logging.getLogger(__name__)


# Object shapes. Object frame: pivot end at the origin, long axis along +Y.


@dataclass(frozen=True)
class StickShape:
    length: float
    diameter: float
    kind: str = field(default="stick", init=False)

    def bounds(self) -> Tuple[np.ndarray, np.ndarray]:
        r = self.diameter / 2.0
        return np.array([-r, 0.0, -r]), np.array([r, self.length, r])

    def contact_points(self) -> np.ndarray:
        # end-cap model: the stick touches the surface only at its axis ends
        return np.array([[0.0, 0.0, 0.0], [0.0, self.length, 0.0]])

    def default_com(self) -> Tuple[float, float, float]:
        return (0.0, self.length / 2.0, 0.0)


@dataclass(frozen=True)
class BoardShape:
    length: float
    width: float
    thickness: float
    kind: str = field(default="board", init=False)

    def bounds(self) -> Tuple[np.ndarray, np.ndarray]:
        w = self.width / 2.0
        return np.array([-w, 0.0, 0.0]), np.array([w, self.length, self.thickness])

    def contact_points(self) -> np.ndarray:
        lo, hi = self.bounds()
        corners = []
        for z in (lo[2], hi[2]):
            for y in (lo[1], hi[1]):
                for x in (lo[0], hi[0]):
                    corners.append((x, y, z))
        return np.array(corners)

    def default_com(self) -> Tuple[float, float, float]:
        return (0.0, self.length / 2.0, self.thickness / 2.0)


Shape = Union[StickShape, BoardShape]


@dataclass(frozen=True)
class ObjectModel:
    name: str
    shape: Shape
    mass: float
    com_offset: Tuple[float, float, float]

    def __post_init__(self):
        if not self.mass > 0:
            raise ValidationError("must be > 0", field="object.mass")
        dims = {k: v for k, v in vars(self.shape).items() if k != "kind"}
        for key, value in dims.items():
            if not value > 0:
                raise ValidationError("must be > 0", field=f"object.{key}")
        com = tuple(float(v) for v in self.com_offset)
        object.__setattr__(self, "com_offset", com)
        lo, hi = self.shape.bounds()
        if np.any(np.array(com) < lo - 1e-12) or np.any(np.array(com) > hi + 1e-12):
            raise ValidationError("lies outside the object bounds", field="object.com_offset")

    @property
    def length(self) -> float:
        return self.shape.length

    @property
    def kind(self) -> str:
        return self.shape.kind

    def weight(self, gravity: float) -> float:
        return self.mass * gravity


@dataclass(frozen=True)
class GripperModel:
    ee_length: float
    jaw_max_open: float
    pad_friction_torque_limit: float
    grip_force: float
    pad_torsion_coefficient: float
    body_box: Tuple[float, float, float]

    def __post_init__(self):
        if not self.ee_length > 0:
            raise ValidationError("must be > 0", field="gripper.ee_length")
        if not self.jaw_max_open > 0:
            raise ValidationError("must be > 0", field="gripper.jaw_max_open")
        if not self.pad_friction_torque_limit >= 0:
            raise ValidationError("must be >= 0", field="gripper.pad_friction_torque_limit")
        if not self.grip_force >= 0:
            raise ValidationError("must be >= 0", field="gripper.grip_force")
        if not self.pad_torsion_coefficient >= 0:
            raise ValidationError("must be >= 0", field="gripper.pad_torsion_coefficient")
        box = tuple(float(v) for v in self.body_box)
        if len(box) != 3 or any(not v > 0 for v in box):
            raise ValidationError("needs three positive extents", field="gripper.body_box")
        object.__setattr__(self, "body_box", box)


@dataclass(frozen=True)
class RobotModel:
    base_pose: Transform
    reach_min: float
    reach_max: float
    z_min: float
    z_max: float
    payload: float

    def __post_init__(self):
        if not 0 <= self.reach_min < self.reach_max:
            raise ValidationError("needs 0 <= reach_min < reach_max", field="robot.reach_min")
        if not self.z_min < self.z_max:
            raise ValidationError("needs z_min < z_max", field="robot.z_min")
        if not self.payload > 0:
            raise ValidationError("must be > 0", field="robot.payload")

    def reach_distance(self, point) -> float:
        return float(np.linalg.norm(np.asarray(point, dtype=float) - self.base_pose.translation))

    def in_reach(self, point, tol: float = 1e-9) -> bool:
        """Reach-shell and height-band membership of a gripper origin"""
        dist = self.reach_distance(point)
        z = float(point[2])
        return (
            self.reach_min - tol <= dist <= self.reach_max + tol
            and self.z_min - tol <= z <= self.z_max + tol
        )

    def all_in_reach(self, points, tol: float = 1e-9) -> bool:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        dist = np.linalg.norm(points - self.base_pose.translation, axis=1)
        z = points[:, 2]
        return bool(
            np.all((dist >= self.reach_min - tol) & (dist <= self.reach_max + tol))
            and np.all((z >= self.z_min - tol) & (z <= self.z_max + tol))
        )


@dataclass(frozen=True)
class Scene:
    surface: SupportSurface
    object: ObjectModel
    gripper: GripperModel
    robot: RobotModel
    gravity: float = DEFAULT_GRAVITY

    def __post_init__(self):
        if not self.gravity > 0:
            raise ValidationError("must be > 0", field="gravity")

    @property
    def weight(self) -> float:
        return self.object.weight(self.gravity)

    def placement(self, x: float, y: float) -> PlacementPoint:
        if not self.surface.contains((x, y)):
            raise ValidationError(f"placement ({x}, {y}) lies outside the surface")
        return self.surface.placement(x, y)


@dataclass(frozen=True)
class PoseSpec:
    """Object pose named by placement point, tilt about its X axis and yaw about Z"""

    placement: Tuple[float, float]
    tilt: float = 0.0
    yaw: float = 0.0

    def to_transform(self, scene: Scene) -> Transform:
        point = scene.placement(*self.placement)
        return placement_pose(point, self.tilt, self.yaw)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "placement": [self.placement[0], self.placement[1]],
            "tilt_deg": math.degrees(self.tilt),
            "yaw_deg": math.degrees(self.yaw),
        }

    def describe(self) -> str:
        return (
            f"({self.placement[0]:.3f}, {self.placement[1]:.3f}) "
            f"tilt {math.degrees(self.tilt):.1f} yaw {math.degrees(self.yaw):.1f}"
        )


@dataclass(frozen=True)
class TaskSpec:
    start_pose: Transform
    goal_pose: Transform
    start: Optional[PoseSpec] = None
    goal: Optional[PoseSpec] = None
    blocked: Tuple[Tuple[PoseSpec, PoseSpec], ...] = ()


def object_points(obj: ObjectModel, pose: Transform) -> np.ndarray:
    return pose.apply(obj.shape.contact_points())


def object_pivot(obj: ObjectModel, pose: Transform) -> np.ndarray:
    return pose.apply(np.zeros(3))


def object_lowest_point(obj: ObjectModel, pose: Transform) -> np.ndarray:
    """World point of minimal Z; ties go to smaller world Y, then smaller X, then the pivot"""
    points = object_points(obj, pose)
    zmin = points[:, 2].min()
    tied = [i for i in range(len(points)) if points[i, 2] <= zmin + 1e-9]
    best = min(tied, key=lambda i: (round(points[i, 1], 9), round(points[i, 0], 9), i))
    return np.array(points[best])


def contact_gap(scene: Scene, pose: Transform) -> float:
    return float(object_lowest_point(scene.object, pose)[2] - scene.surface.height)


def validate_task(scene: Scene, task: TaskSpec) -> None:
    for name, pose in (("task.start", task.start_pose), ("task.goal", task.goal_pose)):
        pivot = object_pivot(scene.object, pose)
        if not scene.surface.contains_world(pivot, tol=1e-6):
            raise ValidationError("contact point lies outside the surface", field=name)
        if contact_gap(scene, pose) < -PENETRATION_TOLERANCE:
            raise ValidationError("object penetrates the surface", field=name)


# Configuration files

SCENE_KEYS = {
    "surface": ({"extent_x", "extent_y"}, {"origin", "height", "yaw_deg"}),
    "object": ({"shape", "mass", "length"}, {"name", "diameter", "width", "thickness", "com_offset"}),
    "gripper": (
        {"ee_length", "jaw_max_open", "pad_friction_torque_limit", "grip_force", "pad_torsion_coefficient", "body_box"},
        set(),
    ),
    "robot": ({"reach_min", "reach_max", "z_min", "z_max", "payload"}, {"base", "base_yaw_deg"}),
}


def read_json(path: Union[str, Path], what: str = "file") -> Any:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise IoError(f"cannot read {what} {path}: {e.strerror or e}") from e
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"{what} {path} is not valid JSON: {e.msg} (line {e.lineno})") from e


def check_keys(data: Any, prefix: str, required: set, optional: set) -> Dict[str, Any]:
    if not isinstance(data, dict):
        raise ValidationError("must be an object", field=prefix)
    unknown = sorted(set(data) - required - optional)
    if unknown:
        raise ValidationError(f"unknown key '{unknown[0]}'", field=prefix)
    missing = sorted(required - set(data))
    if missing:
        raise ValidationError("is required", field=f"{prefix}.{missing[0]}")
    return data


def number(data: Dict[str, Any], key: str, prefix: str, default: Optional[float] = None) -> float:
    value = data.get(key, default)
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ValidationError("must be a finite number", field=f"{prefix}.{key}")
    return float(value)


def vector(data: Dict[str, Any], key: str, prefix: str, size: int, default=None) -> Tuple[float, ...]:
    value = data.get(key, default)
    if not isinstance(value, (list, tuple)) or len(value) != size:
        raise ValidationError(f"must be a list of {size} numbers", field=f"{prefix}.{key}")
    out = []
    for v in value:
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise ValidationError(f"must be a list of {size} numbers", field=f"{prefix}.{key}")
        out.append(float(v))
    return tuple(out)


def _surface_from_dict(data: Dict[str, Any]) -> SupportSurface:
    check_keys(data, "surface", *SCENE_KEYS["surface"])
    ox, oy = vector(data, "origin", "surface", 2, default=[0.0, 0.0])
    height = number(data, "height", "surface", default=0.0)
    yaw = math.radians(number(data, "yaw_deg", "surface", default=0.0))
    origin = compose(Transform.from_translation(ox, oy, height), Transform.rot_z(yaw))
    return SupportSurface(
        origin=origin,
        extent_x=number(data, "extent_x", "surface"),
        extent_y=number(data, "extent_y", "surface"),
    )


def _object_from_dict(data: Dict[str, Any]) -> ObjectModel:
    check_keys(data, "object", *SCENE_KEYS["object"])
    kind = data["shape"]
    if kind == "stick":
        for extra in ("width", "thickness"):
            if extra in data:
                raise ValidationError(f"unknown key '{extra}' for a stick", field="object")
        shape: Shape = StickShape(
            length=number(data, "length", "object"),
            diameter=number(data, "diameter", "object"),
        )
    elif kind == "board":
        if "diameter" in data:
            raise ValidationError("unknown key 'diameter' for a board", field="object")
        shape = BoardShape(
            length=number(data, "length", "object"),
            width=number(data, "width", "object"),
            thickness=number(data, "thickness", "object"),
        )
    else:
        raise ValidationError(f"unknown shape '{kind}'", field="object.shape")
    name = data.get("name", kind)
    if not isinstance(name, str) or not name:
        raise ValidationError("must be a non-empty string", field="object.name")
    com = vector(data, "com_offset", "object", 3, default=list(shape.default_com()))
    return ObjectModel(name=name, shape=shape, mass=number(data, "mass", "object"), com_offset=com)


def _gripper_from_dict(data: Dict[str, Any]) -> GripperModel:
    check_keys(data, "gripper", *SCENE_KEYS["gripper"])
    return GripperModel(
        ee_length=number(data, "ee_length", "gripper"),
        jaw_max_open=number(data, "jaw_max_open", "gripper"),
        pad_friction_torque_limit=number(data, "pad_friction_torque_limit", "gripper"),
        grip_force=number(data, "grip_force", "gripper"),
        pad_torsion_coefficient=number(data, "pad_torsion_coefficient", "gripper"),
        body_box=vector(data, "body_box", "gripper", 3),
    )


def _robot_from_dict(data: Dict[str, Any]) -> RobotModel:
    check_keys(data, "robot", *SCENE_KEYS["robot"])
    bx, by, bz = vector(data, "base", "robot", 3, default=[0.0, 0.0, 0.0])
    yaw = math.radians(number(data, "base_yaw_deg", "robot", default=0.0))
    base = compose(Transform.from_translation(bx, by, bz), Transform.rot_z(yaw))
    return RobotModel(
        base_pose=base,
        reach_min=number(data, "reach_min", "robot"),
        reach_max=number(data, "reach_max", "robot"),
        z_min=number(data, "z_min", "robot"),
        z_max=number(data, "z_max", "robot"),
        payload=number(data, "payload", "robot"),
    )


def scene_from_dict(data: Any) -> Scene:
    check_keys(data, "scene", {"surface", "object", "gripper", "robot"}, {"gravity"})
    return Scene(
        surface=_surface_from_dict(data["surface"]),
        object=_object_from_dict(data["object"]),
        gripper=_gripper_from_dict(data["gripper"]),
        robot=_robot_from_dict(data["robot"]),
        gravity=number(data, "gravity", "scene", default=DEFAULT_GRAVITY),
    )


def _yaw_deg(t: Transform) -> float:
    return math.degrees(math.atan2(t.rotation[1, 0], t.rotation[0, 0]))


def scene_to_dict(scene: Scene) -> Dict[str, Any]:
    """Inverse of scene_from_dict; reparses to an identical Scene"""
    surface = scene.surface
    obj = scene.object
    shape = {k: v for k, v in vars(obj.shape).items() if k != "kind"}
    robot = scene.robot
    return {
        "surface": {
            "origin": [float(surface.origin.translation[0]), float(surface.origin.translation[1])],
            "height": surface.height,
            "yaw_deg": _yaw_deg(surface.origin),
            "extent_x": surface.extent_x,
            "extent_y": surface.extent_y,
        },
        "object": {
            "name": obj.name,
            "shape": obj.kind,
            "mass": obj.mass,
            **shape,
            "com_offset": list(obj.com_offset),
        },
        "gripper": {
            "ee_length": scene.gripper.ee_length,
            "jaw_max_open": scene.gripper.jaw_max_open,
            "pad_friction_torque_limit": scene.gripper.pad_friction_torque_limit,
            "grip_force": scene.gripper.grip_force,
            "pad_torsion_coefficient": scene.gripper.pad_torsion_coefficient,
            "body_box": list(scene.gripper.body_box),
        },
        "robot": {
            "base": [float(v) for v in robot.base_pose.translation],
            "base_yaw_deg": _yaw_deg(robot.base_pose),
            "reach_min": robot.reach_min,
            "reach_max": robot.reach_max,
            "z_min": robot.z_min,
            "z_max": robot.z_max,
            "payload": robot.payload,
        },
        "gravity": scene.gravity,
    }


def load_scene(path: Union[str, Path]) -> Scene:
    """Load and validate a scene configuration file"""
    scene = scene_from_dict(read_json(path, "scene file"))
    logger.debug("loaded scene %s (%s, %.3f kg)", path, scene.object.name, scene.object.mass)
    return scene


def pose_spec_from_dict(data: Any, prefix: str) -> PoseSpec:
    check_keys(data, prefix, {"placement"}, {"tilt_deg", "yaw_deg"})
    x, y = vector(data, "placement", prefix, 2)
    tilt = number(data, "tilt_deg", prefix, default=0.0)
    yaw = number(data, "yaw_deg", prefix, default=0.0)
    if not 0.0 <= tilt <= 90.0:
        raise ValidationError("must lie in [0, 90]", field=f"{prefix}.tilt_deg")
    return PoseSpec(placement=(x, y), tilt=math.radians(tilt), yaw=math.radians(yaw))


def blocked_pairs_from_list(data: Any, prefix: str) -> List[Tuple[PoseSpec, PoseSpec]]:
    if not isinstance(data, list):
        raise ValidationError("must be a list of pose pairs", field=prefix)
    pairs = []
    for i, pair in enumerate(data):
        if not isinstance(pair, list) or len(pair) != 2:
            raise ValidationError("must be a pair of poses", field=f"{prefix}[{i}]")
        pairs.append(
            (
                pose_spec_from_dict(pair[0], f"{prefix}[{i}][0]"),
                pose_spec_from_dict(pair[1], f"{prefix}[{i}][1]"),
            )
        )
    return pairs


def task_from_dict(scene: Scene, data: Any) -> TaskSpec:
    check_keys(data, "task", {"start", "goal"}, {"blocked"})
    start = pose_spec_from_dict(data["start"], "task.start")
    goal = pose_spec_from_dict(data["goal"], "task.goal")
    blocked = blocked_pairs_from_list(data.get("blocked", []), "task.blocked")
    task = TaskSpec(
        start_pose=start.to_transform(scene),
        goal_pose=goal.to_transform(scene),
        start=start,
        goal=goal,
        blocked=tuple(blocked),
    )
    validate_task(scene, task)
    return task


def load_task(scene: Scene, path: Union[str, Path]) -> TaskSpec:
    return task_from_dict(scene, read_json(path, "task file"))
