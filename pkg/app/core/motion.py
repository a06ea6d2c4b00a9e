"""
Motion Module for DroopPlan
Interpolates contact-preserving Cartesian waypoints between critical poses and
verifies contact, droop, payload, reach and step bounds along them
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from app.constants import (
    CONTACT_TOLERANCE,
    MAX_REPROJECTION,
    PENETRATION_TOLERANCE,
    RETREAT_CLEARANCE,
    STEP_ROTATION_DEG,
    STEP_TRANSLATION,
)
from app.core.errors import (
    CollisionInTransit,
    ContactLost,
    DroopConditionViolated,
    InvalidEdge,
    MotionError,
    ReachExceeded,
    ValidationError,
    VerificationFailed,
)
from app.core.geometry import Transform, rotation_angle
from app.core.graph import EdgeKind, GraphNode, PlanPath
from app.core.interpolation import (
    PosePath,
    gripper_steps,
    grasp_state,
    inclination,
    retreat_pose,
    transition_angle,
    transition_rise,
    transition_sample,
    transition_steps,
    translation_samples,
    translation_steps,
)
from app.core.mechanics import TransitionCommand, check_payload, droop_occurs, gripper_load_share
from app.core.sampling import GraspAnnotation, gripper_collides
from app.core.scene import Scene, contact_gap

logger = logging.getLogger(__name__)

STEP_SLACK = 1e-9


@dataclass(frozen=True)
class MotionSettings:
    step_translation: float = STEP_TRANSLATION
    step_rotation: float = math.radians(STEP_ROTATION_DEG)
    contact_tolerance: float = CONTACT_TOLERANCE
    retreat_clearance: float = RETREAT_CLEARANCE
    max_reprojection: float = MAX_REPROJECTION

    def __post_init__(self):
        for name in ("step_translation", "step_rotation", "contact_tolerance"):
            if not getattr(self, name) > 0:
                raise ValidationError("must be > 0", field=f"motion.{name}")
        if not self.retreat_clearance >= 0:
            raise ValidationError("must be >= 0", field="motion.retreat_clearance")
        if not self.max_reprojection >= 0:
            raise ValidationError("must be >= 0", field="motion.max_reprojection")


@dataclass(frozen=True)
class Waypoint:
    gripper_pose: Transform
    object_pose: Transform
    grasp: GraspAnnotation
    contact_gap: float
    theta: float
    f_grip: float
    phase: str = ""


@dataclass(frozen=True)
class Segment:
    kind: EdgeKind
    source: int
    target: int
    waypoints: Tuple[Waypoint, ...]
    command: Optional[TransitionCommand] = None


@dataclass(frozen=True)
class Trajectory:
    segments: Tuple[Segment, ...] = ()

    @property
    def total_waypoints(self) -> int:
        return sum(len(s.waypoints) for s in self.segments)

    def waypoints(self) -> List[Waypoint]:
        return [w for s in self.segments for w in s.waypoints]

    def indexed(self) -> List[Tuple[int, int, Waypoint]]:
        """(global index, segment index, waypoint) triples in order"""
        out = []
        for seg_index, segment in enumerate(self.segments):
            for w in segment.waypoints:
                out.append((len(out), seg_index, w))
        return out


@dataclass(frozen=True)
class ReportEntry:
    index: int
    segment: int
    check: str
    value: float
    limit: float
    message: str


@dataclass(frozen=True)
class VerificationReport:
    entries: Tuple[ReportEntry, ...]
    waypoints: int
    max_gap: float
    min_gap: float

    @property
    def passed(self) -> bool:
        return not self.entries

    def counts(self) -> Dict[str, int]:
        counts: Dict[str, int] = {}
        for e in self.entries:
            counts[e.check] = counts.get(e.check, 0) + 1
        return counts


# Waypoint helpers


def _waypoint(scene: Scene, gripper: Transform, pose: Transform, grasp: GraspAnnotation, f_grip: float, phase: str = "") -> Waypoint:
    return Waypoint(
        gripper_pose=gripper,
        object_pose=pose,
        grasp=grasp,
        contact_gap=contact_gap(scene, pose),
        theta=min(max(inclination(pose), 0.0), math.pi / 2.0),
        f_grip=f_grip,
        phase=phase,
    )


def _check_contact(w: Waypoint, settings: MotionSettings, index: int):
    if not -PENETRATION_TOLERANCE <= w.contact_gap <= settings.contact_tolerance:
        raise ContactLost(
            f"contact gap {w.contact_gap * 1000:.3f} mm at waypoint {index}",
            waypoint_index=index,
        )


def _check_reach(scene: Scene, w: Waypoint, index: int):
    if not scene.robot.in_reach(w.gripper_pose.translation):
        raise ReachExceeded(
            f"gripper at {scene.robot.reach_distance(w.gripper_pose.translation):.4f} m "
            f"from the base leaves the workspace at waypoint {index}",
            waypoint_index=index,
        )


def _rederived_grasp(scene: Scene, base: GraspAnnotation, grasp_in_object: Transform) -> GraspAnnotation:
    """Grasp read back from the relative gripper pose while the object slips in hand"""
    approach = grasp_in_object.axis(2)
    phi = math.acos(max(-1.0, min(1.0, -float(approach[1]))))
    tcp = grasp_in_object.apply([0.0, 0.0, scene.gripper.ee_length])
    return replace(
        base,
        grasp_in_object=grasp_in_object,
        phi=phi,
        grasp_point_offset=min(max(float(tcp[1]), 0.0), scene.object.length),
        tcp=(float(tcp[0]), float(tcp[1]), float(tcp[2])),
    )


# Edge interpolation


def interpolate_transition(
    scene: Scene,
    source: GraphNode,
    target: GraphNode,
    cmd: TransitionCommand,
    settings: Optional[MotionSettings] = None,
) -> List[Waypoint]:
    """Constrained droop: the gripper changes height in equal steps with its
    orientation fixed while the object turns about the fixed pivot"""
    settings = settings or MotionSettings()
    a, b = source.candidate, target.candidate
    start_state = grasp_state(scene, a.object_pose, a.grasp.grasp_in_object, a.grasp)
    if cmd.distance <= 1e-12:
        return [_waypoint(scene, a.gripper_world, a.object_pose, a.grasp, gripper_load_share(scene, a.object_pose, a.grasp.grasp_point_offset))]
    delta = transition_angle(a, b)
    if delta is None:
        raise InvalidEdge(f"nodes {source.id} and {target.id} are not a grasp-transition pair")
    if not droop_occurs(scene, start_state):
        raise DroopConditionViolated(
            f"no slip at node {source.id}: gravity torque below the pad friction limit",
            waypoint_index=0,
        )

    if abs(abs(transition_rise(a, delta)) - cmd.distance) > 1e-6:
        raise InvalidEdge(
            f"command distance {cmd.distance:.6f} m does not match the height change "
            f"between nodes {source.id} and {target.id}"
        )

    steps = transition_steps(a, delta, settings.step_translation, settings.step_rotation)
    waypoints = []
    for i in range(steps + 1):
        if i == steps:
            pose, gripper, grasp = b.object_pose, b.gripper_world, b.grasp
        else:
            sample = transition_sample(a, delta, i / steps)
            pose, gripper = sample.object_pose, sample.gripper_world
            grasp = _rederived_grasp(scene, a.grasp, sample.grasp_in_object)
        f_grip = gripper_load_share(scene, pose, grasp.grasp_point_offset)
        w = _waypoint(scene, gripper, pose, grasp, f_grip)
        state = grasp_state(scene, pose, grasp.grasp_in_object, grasp)
        if not droop_occurs(scene, state):
            raise DroopConditionViolated(
                f"inclination {math.degrees(w.theta):.2f} deg fell below the droop threshold",
                waypoint_index=i,
            )
        _check_contact(w, settings, i)
        _check_reach(scene, w, i)
        waypoints.append(w)
    return waypoints


def _sliding(source: GraphNode, target: GraphNode, pose: Transform) -> bool:
    return source.regrasp_side and target.regrasp_side and abs(inclination(pose)) <= 1e-9


def interpolate_translation(
    scene: Scene,
    source: GraphNode,
    target: GraphNode,
    settings: Optional[MotionSettings] = None,
) -> List[Waypoint]:
    """Same relative grasp; object pose interpolated and re-projected onto the surface"""
    settings = settings or MotionSettings()
    a, b = source.candidate, target.candidate
    if a.grasp.id != b.grasp.id:
        raise InvalidEdge(f"translation between different grasps {a.grasp.id} and {b.grasp.id}")
    steps = translation_steps(a, b, settings.step_translation, settings.step_rotation)
    samples = translation_samples(scene, a, b, [i / steps for i in range(1, steps)]) if steps > 1 else []
    waypoints = []
    for i in range(steps + 1):
        if steps == 0 or i == 0:
            pose, gripper = a.object_pose, a.gripper_world
        elif i == steps:
            pose, gripper = b.object_pose, b.gripper_world
        else:
            sample = samples[i - 1]
            if abs(sample.correction) > settings.max_reprojection:
                raise ContactLost(
                    f"re-projection of {sample.correction * 1000:.2f} mm at waypoint {i}",
                    waypoint_index=i,
                )
            pose, gripper = sample.object_pose, sample.gripper_world
        if _sliding(source, target, pose):
            f_grip = 0.0
        else:
            f_grip = gripper_load_share(scene, pose, a.grasp.grasp_point_offset)
        w = _waypoint(scene, gripper, pose, a.grasp, f_grip)
        _check_contact(w, settings, i)
        _check_reach(scene, w, i)
        waypoints.append(w)
    return waypoints


def interpolate_regrasp(
    scene: Scene,
    source: GraphNode,
    target: GraphNode,
    settings: Optional[MotionSettings] = None,
) -> List[Waypoint]:
    """Retreat, gripper-only transit and approach while the surface carries the object"""
    settings = settings or MotionSettings()
    a, b = source.candidate, target.candidate
    if a.grasp.id == b.grasp.id:
        raise InvalidEdge(f"regrasp needs two different grasps, got {a.grasp.id} twice")
    if a.pose_key != b.pose_key:
        raise InvalidEdge(f"regrasp between different object poses at nodes {source.id} and {target.id}")
    pose = a.object_pose
    clearance = settings.retreat_clearance
    up_a = retreat_pose(a.gripper_world, clearance)
    up_b = retreat_pose(b.gripper_world, clearance)

    poses: List[Tuple[Transform, GraspAnnotation, str]] = []
    n = gripper_steps(a.gripper_world, up_a, settings.step_translation, settings.step_rotation)
    for i in range(n + 1):
        poses.append((retreat_pose(a.gripper_world, clearance * i / max(n, 1)), a.grasp, "retreat"))
    n = gripper_steps(up_a, up_b, settings.step_translation, settings.step_rotation)
    transit = PosePath(up_a, up_b).sample([i / n for i in range(1, n + 1)]) if n else []
    for gripper in transit:
        poses.append((gripper, a.grasp, "transit"))
    n = gripper_steps(up_b, b.gripper_world, settings.step_translation, settings.step_rotation)
    for i in range(1, n + 1):
        poses.append((retreat_pose(b.gripper_world, clearance * (n - i) / n), b.grasp, "approach"))

    waypoints = []
    for i, (gripper, grasp, phase) in enumerate(poses):
        w = _waypoint(scene, gripper, pose, grasp, 0.0, phase)
        if gripper_collides(scene, gripper):
            raise CollisionInTransit(f"gripper body meets the surface at waypoint {i}", waypoint_index=i)
        _check_contact(w, settings, i)
        _check_reach(scene, w, i)
        waypoints.append(w)
    return waypoints


def interpolate_edge(scene: Scene, path: PlanPath, index: int, settings: MotionSettings) -> List[Waypoint]:
    edge = path.edges[index]
    source, target = path.nodes[index], path.nodes[index + 1]
    if edge.kind is EdgeKind.GRASP_TRANSITION:
        return interpolate_transition(scene, source, target, edge.command, settings)
    if edge.kind is EdgeKind.TRANSLATION:
        return interpolate_translation(scene, source, target, settings)
    return interpolate_regrasp(scene, source, target, settings)


def assemble_trajectory(scene: Scene, path: PlanPath, settings: Optional[MotionSettings] = None) -> Trajectory:
    """Interpolate every edge of the plan, join the segments and verify the result"""
    settings = settings or MotionSettings()
    segments = []
    for index, edge in enumerate(path.edges):
        try:
            waypoints = interpolate_edge(scene, path, index, settings)
        except MotionError as e:
            raise e.at_edge(index) from e
        if segments:
            # the first waypoint repeats the previous segment's last one
            waypoints = waypoints[1:]
        segments.append(Segment(edge.kind, edge.source, edge.target, tuple(waypoints), edge.command))
    trajectory = Trajectory(tuple(segments))
    report = verify_trajectory(scene, trajectory, settings)
    if not report.passed:
        first = report.entries[0]
        raise VerificationFailed(
            f"{len(report.entries)} verification failures, first at waypoint {first.index}: {first.message}",
            report=report,
        )
    logger.info("trajectory: %d segments, %d waypoints", len(segments), trajectory.total_waypoints)
    return trajectory


# Verification


def verify_trajectory(scene: Scene, traj: Trajectory, settings: Optional[MotionSettings] = None) -> VerificationReport:
    """Recompute every per-waypoint condition; failures become report entries"""
    settings = settings or MotionSettings()
    entries: List[ReportEntry] = []
    gaps = []
    previous: Optional[Waypoint] = None

    def fail(index, segment, check, value, limit, message):
        entries.append(ReportEntry(index, segment, check, float(value), float(limit), message))

    for index, seg_index, w in traj.indexed():
        segment = traj.segments[seg_index]
        gap = contact_gap(scene, w.object_pose)
        gaps.append(gap)
        if gap < -PENETRATION_TOLERANCE or gap > settings.contact_tolerance:
            fail(index, seg_index, ContactLost.code, gap, settings.contact_tolerance, f"contact gap {gap * 1000:.3f} mm")
        theta = inclination(w.object_pose)
        if not -1e-9 <= theta <= math.pi / 2.0 + 1e-9:
            fail(index, seg_index, "theta_range", theta, math.pi / 2.0, f"inclination {math.degrees(theta):.2f} deg")
        if segment.kind is EdgeKind.GRASP_TRANSITION:
            state = grasp_state(scene, w.object_pose, w.grasp.grasp_in_object, w.grasp)
            if not droop_occurs(scene, state):
                fail(index, seg_index, DroopConditionViolated.code, theta, 0.0, "gravity torque below the pad friction limit")
        if not check_payload(scene, w.f_grip):
            fail(index, seg_index, "payload", w.f_grip, scene.robot.payload, f"gripper load {w.f_grip:.3f} N")
        if not scene.robot.in_reach(w.gripper_pose.translation):
            fail(
                index,
                seg_index,
                ReachExceeded.code,
                scene.robot.reach_distance(w.gripper_pose.translation),
                scene.robot.reach_max,
                "gripper outside the reach shell",
            )
        if previous is not None:
            shift = w.gripper_pose.translation - previous.gripper_pose.translation
            if segment.kind is EdgeKind.GRASP_TRANSITION:
                # the step size bounds the height change; the grasp point may sweep
                # freely inside each height plane
                shift = shift[2:]
            moved = max(
                float(np.linalg.norm(shift)),
                float(np.linalg.norm(w.object_pose.translation - previous.object_pose.translation)),
            )
            turned = max(
                rotation_angle(previous.gripper_pose, w.gripper_pose),
                rotation_angle(previous.object_pose, w.object_pose),
            )
            if moved > settings.step_translation + STEP_SLACK:
                fail(index, seg_index, "step_translation", moved, settings.step_translation, f"step of {moved * 1000:.3f} mm")
            if turned > settings.step_rotation + STEP_SLACK:
                fail(index, seg_index, "step_rotation", turned, settings.step_rotation, f"step of {math.degrees(turned):.3f} deg")
        previous = w

    return VerificationReport(
        entries=tuple(entries),
        waypoints=traj.total_waypoints,
        max_gap=max(gaps) if gaps else 0.0,
        min_gap=min(gaps) if gaps else 0.0,
    )
