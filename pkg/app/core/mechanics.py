"""
Mechanics Module for DroopPlan
Handles the quasi-static gravity torque, droop predicate, grasp-transition
distances and the gripper/surface load split
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from app.core.errors import AngleOutOfRange, DegenerateGrasp, ValidationError
from app.core.geometry import Transform
from app.core.scene import GripperModel, Scene

ANGLE_SLACK = 1e-9
HALF_PI = math.pi / 2.0


@dataclass(frozen=True)
class GraspState:
    """Inclination theta, in-hand angle phi and CoM lever r_com of one grasp"""

    theta: float
    phi: float
    r_com: float

    def __post_init__(self):
        if not -ANGLE_SLACK <= self.theta <= HALF_PI + ANGLE_SLACK:
            raise ValidationError(f"theta {self.theta} outside [0, pi/2]", field="grasp_state.theta")
        if not -ANGLE_SLACK <= self.phi <= math.pi + ANGLE_SLACK:
            raise ValidationError(f"phi {self.phi} outside [0, pi]", field="grasp_state.phi")
        if self.r_com < 0:
            raise ValidationError("must be >= 0", field="grasp_state.r_com")


class TransitionDirection(str, Enum):
    UP = "up"
    DOWN = "down"


@dataclass(frozen=True)
class TransitionCommand:
    direction: TransitionDirection
    distance: float
    theta_init: float
    theta_target: float
    lever: float

    def __post_init__(self):
        if self.distance < 0:
            raise ValidationError("must be >= 0", field="transition.distance")

    @property
    def theta_final(self) -> float:
        if self.direction is TransitionDirection.UP:
            return self.theta_init + self.theta_target
        return self.theta_init - self.theta_target

    def mirrored(self) -> "TransitionCommand":
        """The opposite command that undoes this one"""
        return transition_command(self.lever, self.theta_final, self.theta_init)

    def describe(self) -> str:
        return (
            f"{self.direction.value} {self.distance:.4f} m "
            f"(theta {math.degrees(self.theta_init):.1f} -> {math.degrees(self.theta_final):.1f} deg)"
        )


# Gravity torque


def gravity_torque(scene: Scene, gs: GraspState) -> float:
    """Gravity torque about the jaw axis while half the weight rests on the pivot"""
    half_weight = scene.weight / 2.0
    ee = scene.gripper.ee_length
    s_t = math.sin(gs.theta)
    s_p, c_p = math.sin(gs.phi), math.cos(gs.phi)
    return half_weight * s_t * s_p * (gs.r_com * s_p) + half_weight * s_t * c_p * (
        ee + gs.r_com * c_p
    )


def gravity_torque_dtheta(scene: Scene, gs: GraspState) -> float:
    """Analytic derivative of gravity_torque with respect to theta"""
    half_weight = scene.weight / 2.0
    ee = scene.gripper.ee_length
    return half_weight * math.cos(gs.theta) * (gs.r_com + ee * math.cos(gs.phi))


def friction_torque_limit(gripper: GripperModel) -> float:
    """Torque the soft pads can resist at the configured grip force"""
    return min(gripper.pad_torsion_coefficient * gripper.grip_force, gripper.pad_friction_torque_limit)


def droop_occurs(scene: Scene, gs: GraspState) -> bool:
    return gravity_torque(scene, gs) > friction_torque_limit(scene.gripper)


def droop_threshold(scene: Scene, phi: float, r_com: float) -> Optional[float]:
    """Inclination where gravity torque meets the friction limit, None if never reached"""
    lever = scene.weight / 2.0 * (r_com + scene.gripper.ee_length * math.cos(phi))
    limit = friction_torque_limit(scene.gripper)
    if lever <= 0.0:
        return None
    ratio = limit / lever
    if ratio >= 1.0:
        return None
    return math.asin(ratio)


# Grasp transitions


def _check_angle(value: float, name: str):
    if not -ANGLE_SLACK <= value <= HALF_PI + ANGLE_SLACK:
        raise AngleOutOfRange(f"{name} {math.degrees(value):.4f} deg outside [0, 90]")


def transition_distance_up(l_stick: float, theta_init: float, theta_target: float) -> float:
    """Gripper rise that rotates the object from theta_init up by theta_target"""
    _check_angle(theta_init, "theta_init")
    if theta_target < -ANGLE_SLACK:
        raise AngleOutOfRange("theta_target must be >= 0")
    _check_angle(theta_init + theta_target, "post-transition inclination")
    return l_stick * (math.sin(theta_init + theta_target) - math.sin(theta_init))


def transition_distance_down(l_stick: float, theta_init: float, theta_target: float) -> float:
    """Gripper descent that rotates the object from theta_init down by theta_target"""
    _check_angle(theta_init, "theta_init")
    if theta_target < -ANGLE_SLACK:
        raise AngleOutOfRange("theta_target must be >= 0")
    _check_angle(theta_init - theta_target, "post-transition inclination")
    return l_stick * (math.sin(theta_init) - math.sin(theta_init - theta_target))


def transition_command(lever: float, theta_from: float, theta_to: float) -> TransitionCommand:
    """Build the up or down command moving the grasp line from theta_from to theta_to"""
    delta = theta_to - theta_from
    if delta >= 0:
        distance = transition_distance_up(lever, theta_from, delta)
        direction = TransitionDirection.UP
    else:
        distance = transition_distance_down(lever, theta_from, -delta)
        direction = TransitionDirection.DOWN
    return TransitionCommand(
        direction=direction,
        distance=distance,
        theta_init=theta_from,
        theta_target=abs(delta),
        lever=lever,
    )


# Load split


def gripper_load_share(
    scene: Scene,
    object_pose: Transform,
    grasp_point_on_object: float,
    regrasp_phase: bool = False,
) -> float:
    """Vertical force on the gripper from a rigid-lever moment balance about the pivot"""
    if grasp_point_on_object <= 1e-6:
        raise DegenerateGrasp(f"grasp point {grasp_point_on_object} m is at the pivot")
    if regrasp_phase:
        return 0.0
    weight = scene.weight
    com = np.array(scene.object.com_offset)
    pivot = object_pose.translation
    axis = object_pose.axis(1)
    horizontal = np.array([axis[0], axis[1], 0.0])
    norm = float(np.linalg.norm(horizontal))
    if norm <= 1e-9:
        # vertical object: both lever arms vanish, use arc lengths along the object
        ratio = com[1] / grasp_point_on_object
    else:
        horizontal /= norm
        com_arm = float((object_pose.apply(com) - pivot) @ horizontal)
        grasp_arm = float((object_pose.apply([0.0, grasp_point_on_object, 0.0]) - pivot) @ horizontal)
        ratio = com_arm / grasp_arm
    return float(min(max(weight * ratio, 0.0), weight))


def check_payload(scene: Scene, f_grip: float) -> bool:
    return f_grip <= scene.robot.payload
