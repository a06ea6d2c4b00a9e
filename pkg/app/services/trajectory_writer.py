"""
Trajectory Writer Service for DroopPlan
Renders plans, trajectories and verification reports as line-oriented text
(plus a JSON variant of the plan). Every number has a fixed format so repeated
runs produce byte-identical files.

plan.txt
    # droopplan plan v1
    cost <float>
    critical_poses <int>
    edges grasp_transition=<n> regrasp=<n> translation=<n>
    waypoints <int>
    node <i> id=<id> kind=<kind> grasp=<id> pivot=<x>,<y>,<z> tilt_deg=<f> yaw_deg=<f> gripper_z=<f>
    edge <i> <source>-><target> kind=<kind> cost=<f> [command=<up|down> distance=<m> theta_deg=<from>-><to>]
    warning <text>

trajectory.txt
    segment <i> kind=<kind> <source>-><target> waypoints=<n> [command=...]
    <index> <segment> <phase> <gripper x y z qx qy qz qw> <object x y z qx qy qz qw> <grasp> <theta_deg> <gap_mm> <f_grip_N>
"""

import math
from typing import Any, Dict, List, Optional, Sequence

from scipy.spatial.transform import Rotation

from app.core.geometry import Transform
from app.core.graph import GraphNode, PlanPath
from app.core.interpolation import inclination
from app.core.mechanics import TransitionCommand
from app.core.motion import Trajectory, VerificationReport

PLAN_HEADER = "# droopplan plan v1"
TRAJECTORY_HEADER = (
    "# index segment phase gx gy gz gqx gqy gqz gqw ox oy oz oqx oqy oqz oqw grasp theta_deg gap_mm f_grip_n"
)
REPORT_HEADER = "# droopplan verification v1"


def fmt(value: float, digits: int = 6) -> str:
    text = f"{value:.{digits}f}"
    # no negative zero
    if float(text) == 0.0:
        return f"{0.0:.{digits}f}"
    return text


def _pose_fields(t: Transform) -> List[str]:
    quat = Rotation.from_matrix(t.rotation).as_quat()
    # canonical sign: qw >= 0
    if quat[3] < 0:
        quat = -quat
    return [fmt(v) for v in t.translation] + [fmt(v, 9) for v in quat]


def pose_yaw(t: Transform) -> float:
    """Heading of the object's jaw-side X axis, which stays horizontal for sampled poses"""
    return math.atan2(t.rotation[1, 0], t.rotation[0, 0])


def describe_command(cmd: Optional[TransitionCommand]) -> str:
    if cmd is None:
        return ""
    return (
        f" command={cmd.direction.value} distance={fmt(cmd.distance)}"
        f" theta_deg={fmt(math.degrees(cmd.theta_init), 3)}->{fmt(math.degrees(cmd.theta_final), 3)}"
    )


def _node_line(index: int, node: GraphNode) -> str:
    c = node.candidate
    pivot = ",".join(fmt(v) for v in c.object_pose.translation)
    return (
        f"node {index} id={node.id} kind={node.kind.value} grasp={node.grasp_id} pivot={pivot}"
        f" tilt_deg={fmt(math.degrees(inclination(c.object_pose)), 3)}"
        f" yaw_deg={fmt(math.degrees(pose_yaw(c.object_pose)), 3)}"
        f" gripper_z={fmt(c.gripper_world.translation[2])}"
    )


def render_plan(path: PlanPath, trajectory: Trajectory, warnings: Sequence[str] = ()) -> str:
    counts = " ".join(f"{k}={v}" for k, v in sorted(path.counts.items()))
    lines = [
        PLAN_HEADER,
        f"cost {fmt(path.cost, 3)}",
        f"critical_poses {len(path.nodes)}",
        f"edges {counts}",
        f"waypoints {trajectory.total_waypoints}",
    ]
    lines.extend(_node_line(i, node) for i, node in enumerate(path.nodes))
    for i, edge in enumerate(path.edges):
        lines.append(
            f"edge {i} {edge.source}->{edge.target} kind={edge.kind.value} cost={fmt(edge.cost, 3)}"
            + describe_command(edge.command)
        )
    lines.extend(f"warning {w}" for w in warnings)
    return "\n".join(lines) + "\n"


def _round(value: float, digits: int = 9) -> float:
    rounded = round(float(value), digits)
    return 0.0 if rounded == 0 else rounded


def plan_to_dict(path: PlanPath, trajectory: Trajectory, warnings: Sequence[str] = ()) -> Dict[str, Any]:
    nodes = []
    for node in path.nodes:
        c = node.candidate
        nodes.append(
            {
                "id": node.id,
                "kind": node.kind.value,
                "grasp": node.grasp_id,
                "pivot": [_round(v) for v in c.object_pose.translation],
                "tilt_deg": _round(math.degrees(inclination(c.object_pose))),
                "yaw_deg": _round(math.degrees(pose_yaw(c.object_pose))),
                "object_pose": [[_round(v) for v in row] for row in c.object_pose.as_matrix()],
                "gripper_pose": [[_round(v) for v in row] for row in c.gripper_world.as_matrix()],
            }
        )
    edges = []
    for edge in path.edges:
        record: Dict[str, Any] = {
            "source": edge.source,
            "target": edge.target,
            "kind": edge.kind.value,
            "cost": edge.cost,
        }
        if edge.command is not None:
            record["command"] = {
                "direction": edge.command.direction.value,
                "distance": _round(edge.command.distance),
                "theta_init_deg": _round(math.degrees(edge.command.theta_init)),
                "theta_final_deg": _round(math.degrees(edge.command.theta_final)),
            }
        edges.append(record)
    return {
        "cost": path.cost,
        "counts": dict(sorted(path.counts.items())),
        "nodes": nodes,
        "edges": edges,
        "segments": [
            {"kind": s.kind.value, "source": s.source, "target": s.target, "waypoints": len(s.waypoints)}
            for s in trajectory.segments
        ],
        "waypoints": trajectory.total_waypoints,
        "warnings": list(warnings),
    }


def render_trajectory(trajectory: Trajectory) -> str:
    lines = [TRAJECTORY_HEADER]
    index = 0
    for seg_index, segment in enumerate(trajectory.segments):
        lines.append(
            f"segment {seg_index} kind={segment.kind.value} {segment.source}->{segment.target}"
            f" waypoints={len(segment.waypoints)}" + describe_command(segment.command)
        )
        for w in segment.waypoints:
            fields = [str(index), str(seg_index), w.phase or "-"]
            fields += _pose_fields(w.gripper_pose)
            fields += _pose_fields(w.object_pose)
            fields += [
                str(w.grasp.id),
                fmt(math.degrees(w.theta), 4),
                fmt(w.contact_gap * 1000.0, 4),
                fmt(w.f_grip, 4),
            ]
            lines.append(" ".join(fields))
            index += 1
    return "\n".join(lines) + "\n"


def render_report(report: VerificationReport) -> str:
    lines = [
        REPORT_HEADER,
        f"status {'pass' if report.passed else 'fail'}",
        f"waypoints {report.waypoints}",
        f"max_gap_mm {fmt(report.max_gap * 1000.0, 4)}",
        f"min_gap_mm {fmt(report.min_gap * 1000.0, 4)}",
    ]
    for check, count in sorted(report.counts().items()):
        lines.append(f"failures {check}={count}")
    for e in report.entries:
        lines.append(
            f"entry {e.index} segment={e.segment} check={e.check} value={fmt(e.value)} limit={fmt(e.limit)} {e.message}"
        )
    return "\n".join(lines) + "\n"
