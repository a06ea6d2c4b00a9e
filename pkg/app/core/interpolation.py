"""
Interpolation Module for DroopPlan
Pose kernels shared by graph edge checks and trajectory generation
"""

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial.transform import Rotation, Slerp

from app.constants import TRANSITION_ANGLE_TOLERANCE
from app.core.geometry import Transform, compose, invert, rotate_about_point, rotation_angle
from app.core.mechanics import GraspState, TransitionCommand, transition_command
from app.core.sampling import CandidateNode, GraspAnnotation
from app.core.scene import Scene, contact_gap


@dataclass(frozen=True)
class MotionSample:
    object_pose: Transform
    gripper_world: Transform
    grasp_in_object: Transform
    correction: float = 0.0


def inclination(pose: Transform) -> float:
    """Angle of the object's long axis above the horizontal"""
    return math.asin(max(-1.0, min(1.0, float(pose.rotation[2, 1]))))


def lever_geometry(grasp: GraspAnnotation) -> Tuple[float, float]:
    """Pivot-to-TCP distance and its angular offset inside the object's YZ plane"""
    _, y, z = grasp.tcp
    return math.hypot(y, z), math.atan2(z, y)


def r_com(scene: Scene, grasp: GraspAnnotation) -> float:
    return abs(scene.object.com_offset[1] - grasp.grasp_point_offset)


def grasp_state(scene: Scene, object_pose: Transform, grasp_in_object: Transform, grasp: GraspAnnotation) -> GraspState:
    approach = grasp_in_object.axis(2)
    phi = math.acos(max(-1.0, min(1.0, -float(approach[1]))))
    theta = min(max(inclination(object_pose), 0.0), math.pi / 2.0)
    return GraspState(theta=theta, phi=phi, r_com=r_com(scene, grasp))


def candidate_state(scene: Scene, node: CandidateNode) -> GraspState:
    return grasp_state(scene, node.object_pose, node.grasp.grasp_in_object, node.grasp)


# Grasp transitions


def grasp_line_angle(pose: Transform, grasp: GraspAnnotation) -> float:
    """Inclination of the pivot-to-TCP line; equals the object's for on-axis grasps"""
    _, offset = lever_geometry(grasp)
    return inclination(pose) + offset


def _in_quarter_turn(angle: float) -> bool:
    return -TRANSITION_ANGLE_TOLERANCE <= angle <= math.pi / 2.0 + TRANSITION_ANGLE_TOLERANCE


def transition_angle(a: CandidateNode, b: CandidateNode) -> Optional[float]:
    """Object rotation about its own X axis turning `a` into `b` with the gripper
    orientation held fixed; None when the pair is not a grasp transition"""
    if a.grasp.id == b.grasp.id or not (a.grasp.in_plane and b.grasp.in_plane):
        return None
    if np.max(np.abs(np.subtract(a.grasp.tcp, b.grasp.tcp))) > 1e-6:
        return None
    if np.max(np.abs(a.object_pose.translation - b.object_pose.translation)) > 1e-6:
        return None
    if np.max(np.abs(a.gripper_world.rotation - b.gripper_world.rotation)) > 1e-6:
        return None
    # jaw axis must stay horizontal so the inclination changes one-for-one
    if abs(a.object_pose.rotation[2, 0]) > 1e-6:
        return None
    delta = inclination(b.object_pose) - inclination(a.object_pose)
    if abs(delta) <= TRANSITION_ANGLE_TOLERANCE:
        return None
    expected = a.grasp.psi - b.grasp.psi
    if abs(delta - expected) > TRANSITION_ANGLE_TOLERANCE:
        return None
    # the TCP height only fixes the grasp line while it stays within [0, 90] deg
    if not (_in_quarter_turn(grasp_line_angle(a.object_pose, a.grasp)) and _in_quarter_turn(grasp_line_angle(b.object_pose, b.grasp))):
        return None
    return delta


def _clamped(angle: float) -> float:
    return min(max(angle, 0.0), math.pi / 2.0)


def command_for(a: CandidateNode, b: CandidateNode) -> TransitionCommand:
    lever, _ = lever_geometry(a.grasp)
    return transition_command(
        lever,
        _clamped(grasp_line_angle(a.object_pose, a.grasp)),
        _clamped(grasp_line_angle(b.object_pose, b.grasp)),
    )


def _tcp_heights(a: CandidateNode, delta: float) -> Tuple[float, float, float]:
    lever, _ = lever_geometry(a.grasp)
    start = _clamped(grasp_line_angle(a.object_pose, a.grasp))
    return lever, lever * math.sin(start), lever * math.sin(_clamped(start + delta))


def transition_rise(a: CandidateNode, delta: float) -> float:
    """Signed height change of the TCP, and of the gripper with it"""
    _, h_from, h_to = _tcp_heights(a, delta)
    return h_to - h_from


def transition_sample(a: CandidateNode, delta: float, s: float) -> MotionSample:
    """State after the fraction s of the gripper's height change, gripper orientation fixed

    The TCP height h above the pivot sets the grasp line to asin(h / lever);
    the object turns about the fixed pivot to match it."""
    lever, h_from, h_to = _tcp_heights(a, delta)
    h = h_from + s * (h_to - h_from)
    start = _clamped(grasp_line_angle(a.object_pose, a.grasp))
    turn = math.asin(max(-1.0, min(1.0, h / lever))) - start
    pose = rotate_about_point(a.object_pose, a.object_pose.translation, a.object_pose.axis(0), turn)
    tcp_world = pose.apply(a.grasp.tcp)
    rotation = a.gripper_world.rotation
    ee = float(np.linalg.norm(a.grasp.grasp_in_object.translation - np.array(a.grasp.tcp)))
    gripper = Transform(rotation, tcp_world - ee * rotation[:, 2])
    return MotionSample(pose, gripper, compose(invert(pose), gripper))


def transition_steps(a: CandidateNode, delta: float, step_translation: float, step_rotation: float) -> int:
    """Equal height steps of at most step_translation, refined until the object
    turns no more than step_rotation per step"""
    lever, h_from, h_to = _tcp_heights(a, delta)
    rise = abs(h_to - h_from)
    if rise <= 1e-12:
        return 1
    by_height = math.ceil(rise / step_translation - 1e-9)
    # asin is convex on [0, 1]: the step nearest the top height turns the most
    top = max(h_from, h_to)
    top_angle = math.asin(min(top / lever, 1.0))
    low_angle = math.asin(min(min(h_from, h_to) / lever, 1.0))
    if top_angle - step_rotation <= low_angle:
        return max(by_height, 1)
    allowed = top - lever * math.sin(top_angle - step_rotation)
    by_rotation = math.ceil(rise / allowed - 1e-9)
    return max(by_height, by_rotation, 1)


# Contact-preserving translations


class PosePath:
    """Object origin on a straight line, orientation along one spherical interpolant"""

    def __init__(self, a: Transform, b: Transform):
        self.a = a
        self.b = b
        self._slerp = Slerp([0.0, 1.0], Rotation.from_matrix(np.stack([a.rotation, b.rotation])))

    def _between(self, rotation: np.ndarray, s: float) -> Transform:
        return Transform(rotation, (1.0 - s) * self.a.translation + s * self.b.translation)

    def at(self, s: float) -> Transform:
        if s <= 0.0:
            return self.a
        if s >= 1.0:
            return self.b
        return self._between(self._slerp([s]).as_matrix()[0], s)

    def rotations(self, values: Sequence[float]) -> np.ndarray:
        return self._slerp(np.clip(np.asarray(values, dtype=float), 0.0, 1.0)).as_matrix()

    def sample(self, values: Sequence[float]) -> List[Transform]:
        values = [float(s) for s in values]
        rotations = self.rotations(values)
        out = []
        for s, rotation in zip(values, rotations):
            if s <= 0.0:
                out.append(self.a)
            elif s >= 1.0:
                out.append(self.b)
            else:
                out.append(self._between(rotation, s))
        return out


def reproject(scene: Scene, pose: Transform) -> Tuple[Transform, float]:
    """Snap the object along world Z so its lowest point touches the surface"""
    gap = contact_gap(scene, pose)
    if abs(gap) <= 1e-12:
        return pose, 0.0
    return Transform(pose.rotation, pose.translation - np.array([0.0, 0.0, gap])), gap


def _carried(scene: Scene, a: CandidateNode, pose: Transform) -> MotionSample:
    pose, correction = reproject(scene, pose)
    grasp = a.grasp.grasp_in_object
    return MotionSample(pose, compose(pose, grasp), grasp, correction)


def translation_samples(scene: Scene, a: CandidateNode, b: CandidateNode, values: Sequence[float]) -> List[MotionSample]:
    """Carried object and gripper at every s along one interpolant"""
    path = PosePath(a.object_pose, b.object_pose)
    return [_carried(scene, a, pose) for pose in path.sample(values)]


def translation_track(scene: Scene, a: CandidateNode, b: CandidateNode, values: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    """Re-projection corrections and gripper origins at every s, computed as arrays"""
    path = PosePath(a.object_pose, b.object_pose)
    s = np.clip(np.asarray(values, dtype=float), 0.0, 1.0)
    rotations = path.rotations(s)
    origins = (1.0 - s)[:, None] * a.object_pose.translation + s[:, None] * b.object_pose.translation
    points = np.einsum("nij,kj->nki", rotations, scene.object.shape.contact_points()) + origins[:, None, :]
    corrections = points[:, :, 2].min(axis=1) - scene.surface.height
    corrections[np.abs(corrections) <= 1e-12] = 0.0
    origins[:, 2] -= corrections
    grippers = rotations @ a.grasp.grasp_in_object.translation + origins
    return corrections, grippers


def translation_steps(a: CandidateNode, b: CandidateNode, step_translation: float, step_rotation: float) -> int:
    shift = float(np.linalg.norm(b.object_pose.translation - a.object_pose.translation))
    angle = rotation_angle(a.object_pose, b.object_pose)
    arm = float(np.linalg.norm(a.grasp.grasp_in_object.translation))
    counts = (
        math.ceil(shift / step_translation - 1e-9),
        math.ceil(angle / step_rotation - 1e-9),
        math.ceil((shift + angle * arm) / step_translation - 1e-9),
    )
    return max(max(counts), 0)


# Regrasp gripper-only motion


def retreat_pose(gripper_world: Transform, distance: float) -> Transform:
    """Gripper withdrawn along its approach axis"""
    return Transform(gripper_world.rotation, gripper_world.translation - distance * gripper_world.axis(2))


def gripper_steps(a: Transform, b: Transform, step_translation: float, step_rotation: float) -> int:
    shift = float(np.linalg.norm(b.translation - a.translation))
    angle = rotation_angle(a, b)
    return max(
        math.ceil(shift / step_translation - 1e-9),
        math.ceil(angle / step_rotation - 1e-9),
        0,
    )
