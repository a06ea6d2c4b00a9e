"""
Geometry Module for DroopPlan
Handles rigid transforms, rotations about arbitrary axes and support-surface grids
"""

import math
from dataclasses import dataclass, field
from typing import Iterable, List, Sequence, Tuple

import numpy as np
from scipy.spatial.transform import Rotation

from app.constants import (
    ORTHONORMAL_TOLERANCE,
    POSE_KEY_ROTATION_QUANTUM,
    POSE_KEY_TRANSLATION_QUANTUM,
)
from app.core.errors import InvalidSpacing, NonUnitAxis, ValidationError

AXIS_TOLERANCE = 1e-6

PoseKey = Tuple[int, ...]


def _frozen(values, shape) -> np.ndarray:
    arr = np.array(values, dtype=float).reshape(shape)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Transform:
    """Rigid pose: p_world = rotation @ p_local + translation"""

    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        rotation = _frozen(self.rotation, (3, 3))
        translation = _frozen(self.translation, (3,))
        if not np.all(np.isfinite(rotation)) or not np.all(np.isfinite(translation)):
            raise ValidationError("transform contains non-finite values")
        gram = rotation.T @ rotation
        if np.max(np.abs(gram - np.eye(3))) > ORTHONORMAL_TOLERANCE:
            raise ValidationError("rotation is not orthonormal")
        if abs(np.linalg.det(rotation) - 1.0) > ORTHONORMAL_TOLERANCE:
            raise ValidationError("rotation determinant is not +1")
        object.__setattr__(self, "rotation", rotation)
        object.__setattr__(self, "translation", translation)

    # Constructors

    @classmethod
    def identity(cls) -> "Transform":
        return cls()

    @classmethod
    def from_translation(cls, x: float, y: float = 0.0, z: float = 0.0) -> "Transform":
        return cls(np.eye(3), np.array([x, y, z], dtype=float))

    @classmethod
    def from_rotation(cls, rotation: Rotation, translation=(0.0, 0.0, 0.0)) -> "Transform":
        return cls(_clean_rotation(rotation.as_matrix()), np.asarray(translation, dtype=float))

    @classmethod
    def from_axis_angle(cls, axis: Sequence[float], angle: float, translation=(0.0, 0.0, 0.0)) -> "Transform":
        axis = np.asarray(axis, dtype=float)
        return cls.from_rotation(Rotation.from_rotvec(axis * angle), translation)

    @classmethod
    def rot_x(cls, angle: float) -> "Transform":
        return cls.from_axis_angle((1.0, 0.0, 0.0), angle)

    @classmethod
    def rot_y(cls, angle: float) -> "Transform":
        return cls.from_axis_angle((0.0, 1.0, 0.0), angle)

    @classmethod
    def rot_z(cls, angle: float) -> "Transform":
        return cls.from_axis_angle((0.0, 0.0, 1.0), angle)

    @classmethod
    def from_matrix(cls, matrix) -> "Transform":
        matrix = np.asarray(matrix, dtype=float)
        return cls(matrix[:3, :3], matrix[:3, 3])

    @classmethod
    def _trusted(cls, rotation: np.ndarray, translation: np.ndarray) -> "Transform":
        """Build from a product of already validated rotations without re-checking"""
        t = object.__new__(cls)
        object.__setattr__(t, "rotation", _frozen(rotation, (3, 3)))
        object.__setattr__(t, "translation", _frozen(translation, (3,)))
        return t

    # Algebra

    def compose(self, other: "Transform") -> "Transform":
        """Apply `other` first, then self"""
        return compose(self, other)

    def inverse(self) -> "Transform":
        return invert(self)

    def apply(self, points) -> np.ndarray:
        """Map a point (3,) or an array of points (n, 3) into the outer frame"""
        pts = np.asarray(points, dtype=float)
        return pts @ self.rotation.T + self.translation

    def apply_vector(self, vectors) -> np.ndarray:
        return np.asarray(vectors, dtype=float) @ self.rotation.T

    def as_matrix(self) -> np.ndarray:
        matrix = np.eye(4)
        matrix[:3, :3] = self.rotation
        matrix[:3, 3] = self.translation
        return matrix

    def as_rotation(self) -> Rotation:
        return Rotation.from_matrix(self.rotation)

    def rotvec(self) -> np.ndarray:
        return self.as_rotation().as_rotvec()

    def axis(self, index: int) -> np.ndarray:
        return np.array(self.rotation[:, index])

    def key(self) -> PoseKey:
        return pose_key(self)

    def almost_equal(self, other: "Transform", tol: float = 1e-9) -> bool:
        return bool(
            np.max(np.abs(self.rotation - other.rotation)) <= tol
            and np.max(np.abs(self.translation - other.translation)) <= tol
        )

    def __repr__(self) -> str:
        t = ", ".join(f"{v:.6f}" for v in self.translation)
        r = ", ".join(f"{v:.6f}" for v in self.rotvec())
        return f"Transform(t=({t}), rotvec=({r}))"


def _clean_rotation(matrix: np.ndarray) -> np.ndarray:
    # re-orthonormalize so long chains stay inside the validation tolerance
    u, _, vt = np.linalg.svd(np.asarray(matrix, dtype=float))
    rotation = u @ vt
    if np.linalg.det(rotation) < 0:
        u[:, -1] *= -1
        rotation = u @ vt
    return rotation


def compose(a: Transform, b: Transform) -> Transform:
    """Rigid motion "apply b, then a" """
    rotation = a.rotation @ b.rotation
    translation = a.rotation @ b.translation + a.translation
    return Transform._trusted(rotation, translation)


def compose_all(transforms: Iterable[Transform]) -> Transform:
    result = Transform.identity()
    for t in transforms:
        result = compose(result, t)
    return Transform(_clean_rotation(result.rotation), result.translation)


def invert(t: Transform) -> Transform:
    rotation = t.rotation.T
    return Transform._trusted(rotation, -rotation @ t.translation)


def relative(a: Transform, b: Transform) -> Transform:
    """Transform taking frame a to frame b, expressed in a"""
    return compose(invert(a), b)


def rotation_angle(a: Transform, b: Transform) -> float:
    """Geodesic angle between the orientations of a and b"""
    rel = a.rotation.T @ b.rotation
    cos = (np.trace(rel) - 1.0) / 2.0
    return float(math.acos(max(-1.0, min(1.0, cos))))


def normalize_axis(axis) -> np.ndarray:
    axis = np.asarray(axis, dtype=float).reshape(3)
    norm = float(np.linalg.norm(axis))
    if abs(norm - 1.0) > AXIS_TOLERANCE:
        raise NonUnitAxis(f"axis norm {norm:.9f} is not 1")
    return axis / norm


def rotate_about_point(pose: Transform, point, axis, angle: float) -> Transform:
    """Rotate `pose` rigidly about the line through `point` along `axis`"""
    axis = normalize_axis(axis)
    point = np.asarray(point, dtype=float).reshape(3)
    spin = Transform.from_axis_angle(axis, angle)
    about = Transform(spin.rotation, point - spin.rotation @ point)
    return compose(about, pose)


def pose_key(t: Transform) -> PoseKey:
    """Quantized identity used to bucket poses built in different orders"""
    translation = np.rint(t.translation / POSE_KEY_TRANSLATION_QUANTUM).astype(int)
    rotation = np.rint(t.rotation.reshape(-1) / POSE_KEY_ROTATION_QUANTUM).astype(int)
    # avoid distinct keys for -0
    return tuple(int(v) + 0 for v in translation) + tuple(int(v) + 0 for v in rotation)


# Support surface


@dataclass(frozen=True, eq=False)
class SupportSurface:
    """Horizontal rectangle; the origin frame sits at one corner, Z up"""

    origin: Transform
    extent_x: float
    extent_y: float

    def __post_init__(self):
        if not self.extent_x > 0:
            raise ValidationError("must be > 0", field="surface.extent_x")
        if not self.extent_y > 0:
            raise ValidationError("must be > 0", field="surface.extent_y")
        if np.max(np.abs(self.origin.axis(2) - np.array([0.0, 0.0, 1.0]))) > 1e-9:
            raise ValidationError("surface frame Z must point up", field="surface.origin")

    @property
    def height(self) -> float:
        return float(self.origin.translation[2])

    def contains(self, local_xy, tol: float = 1e-9) -> bool:
        x, y = float(local_xy[0]), float(local_xy[1])
        return -tol <= x <= self.extent_x + tol and -tol <= y <= self.extent_y + tol

    def to_local(self, world_point) -> np.ndarray:
        return invert(self.origin).apply(world_point)

    def contains_world(self, world_point, tol: float = 1e-9) -> bool:
        return self.contains(self.to_local(world_point)[:2], tol)

    def placement(self, x: float, y: float) -> "PlacementPoint":
        return PlacementPoint(
            position=(x, y),
            world_transform=compose(self.origin, Transform.from_translation(x, y, 0.0)),
        )


@dataclass(frozen=True, eq=False)
class PlacementPoint:
    position: Tuple[float, float]
    world_transform: Transform

    def __post_init__(self):
        object.__setattr__(self, "position", (float(self.position[0]), float(self.position[1])))

    @property
    def world_point(self) -> np.ndarray:
        return np.array(self.world_transform.translation)


def placement_pose(placement: PlacementPoint, x_rotation: float, z_rotation: float) -> Transform:
    """Flat placement rotated about its X axis by x_rotation, then about its Z axis"""
    frame = placement.world_transform
    point = frame.translation
    tilted = rotate_about_point(frame, point, frame.axis(0), x_rotation)
    return rotate_about_point(tilted, point, frame.axis(2), z_rotation)


def _grid_count(extent: float, spacing: float) -> int:
    return int(math.floor(extent / spacing + 1e-9)) + 1


def discretize_surface(surface: SupportSurface, spacing: float) -> List[PlacementPoint]:
    """Regular grid anchored at the surface origin corner, rows along Y, X inside"""
    if not spacing > 0:
        raise InvalidSpacing(f"spacing {spacing} must be > 0")
    if spacing > min(surface.extent_x, surface.extent_y) + 1e-12:
        raise InvalidSpacing(
            f"spacing {spacing} exceeds the smaller surface extent "
            f"{min(surface.extent_x, surface.extent_y)}"
        )
    nx = _grid_count(surface.extent_x, spacing)
    ny = _grid_count(surface.extent_y, spacing)
    points = []
    for j in range(ny):
        for i in range(nx):
            points.append(surface.placement(i * spacing, j * spacing))
    return points
