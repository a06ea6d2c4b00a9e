"""
Frames Service for DroopPlan
Draws one static side view (world XZ projection) per critical pose as SVG:
surface line, object outline, gripper body and fingers, and the contact point.

Scale: one metre is FRAME_SCALE points (SVG user units) and the axes fill the
whole figure, so world (x, z) maps to ((x - x0) * scale, (z - z0) * scale)
measured from the bottom-left corner.
"""

import io
import itertools
from dataclasses import dataclass
from typing import Dict, Iterable

import matplotlib

matplotlib.use("Agg")

import numpy as np
from matplotlib.figure import Figure
from matplotlib.patches import Polygon
from scipy.spatial import ConvexHull

from app.constants import FRAME_PATTERN
from app.core.geometry import Transform
from app.core.graph import GraphNode, PlanPath
from app.core.scene import Scene, object_lowest_point, object_points

FRAME_SCALE = 400.0  # points per metre
FRAME_DPI = 72.0
FRAME_MARGIN = 0.05  # metres

matplotlib.rcParams["svg.hashsalt"] = "droopplan"


@dataclass(frozen=True)
class FrameLayout:
    x0: float
    x1: float
    z0: float
    z1: float
    scale: float = FRAME_SCALE

    @property
    def size_inches(self):
        return ((self.x1 - self.x0) * self.scale / FRAME_DPI, (self.z1 - self.z0) * self.scale / FRAME_DPI)

    def to_display(self, x: float, z: float) -> np.ndarray:
        return np.array([(x - self.x0) * self.scale, (z - self.z0) * self.scale])


def gripper_outline(scene: Scene, gripper: Transform) -> np.ndarray:
    bx, by, bz = scene.gripper.body_box
    corners = [
        (x, y, z)
        for x, y, z in itertools.product((-bx / 2.0, bx / 2.0), (-by / 2.0, by / 2.0), (0.0, bz))
    ]
    return gripper.apply(np.array(corners))


def surface_span(scene: Scene) -> np.ndarray:
    s = scene.surface
    corners = [(0.0, 0.0), (s.extent_x, 0.0), (0.0, s.extent_y), (s.extent_x, s.extent_y)]
    return s.origin.apply(np.array([(x, y, 0.0) for x, y in corners]))


def _points(scene: Scene, node: GraphNode) -> np.ndarray:
    c = node.candidate
    tcp = c.gripper_world.apply([0.0, 0.0, scene.gripper.ee_length])
    return np.vstack(
        [
            object_points(scene.object, c.object_pose),
            gripper_outline(scene, c.gripper_world),
            tcp.reshape(1, 3),
        ]
    )


def plan_layout(scene: Scene, nodes: Iterable[GraphNode]) -> FrameLayout:
    """One layout for every frame of a plan so the views line up"""
    points = np.vstack([surface_span(scene)] + [_points(scene, n) for n in nodes])
    return FrameLayout(
        x0=float(points[:, 0].min()) - FRAME_MARGIN,
        x1=float(points[:, 0].max()) + FRAME_MARGIN,
        z0=min(float(points[:, 2].min()), scene.surface.height) - FRAME_MARGIN,
        z1=float(points[:, 2].max()) + FRAME_MARGIN,
    )


def _hull(points_xz: np.ndarray) -> np.ndarray:
    # joggle so flat outlines still produce a polygon
    hull = ConvexHull(points_xz, qhull_options="QJ")
    return points_xz[hull.vertices]


def draw_frame(scene: Scene, node: GraphNode, layout: FrameLayout, title: str = "") -> Figure:
    c = node.candidate
    fig = Figure(figsize=layout.size_inches, dpi=FRAME_DPI)
    ax = fig.add_axes([0.0, 0.0, 1.0, 1.0])
    ax.set_xlim(layout.x0, layout.x1)
    ax.set_ylim(layout.z0, layout.z1)
    ax.set_axis_off()

    span = surface_span(scene)
    height = scene.surface.height
    ax.plot([span[:, 0].min(), span[:, 0].max()], [height, height], color="0.35", linewidth=3, gid="surface")

    points = object_points(scene.object, c.object_pose)
    if scene.object.kind == "stick":
        ax.plot(points[:, 0], points[:, 2], color="tab:brown", linewidth=4, solid_capstyle="round", gid="object")
    else:
        ax.add_patch(Polygon(_hull(points[:, [0, 2]]), closed=True, color="tab:brown", alpha=0.8, gid="object"))

    body = gripper_outline(scene, c.gripper_world)
    ax.add_patch(Polygon(_hull(body[:, [0, 2]]), closed=True, color="tab:blue", alpha=0.6, gid="gripper"))
    flange = c.gripper_world.translation
    tcp = c.gripper_world.apply([0.0, 0.0, scene.gripper.ee_length])
    ax.plot([flange[0], tcp[0]], [flange[2], tcp[2]], color="tab:blue", linewidth=2, gid="fingers")

    contact = object_lowest_point(scene.object, c.object_pose)
    ax.scatter([contact[0]], [contact[2]], s=30, color="tab:red", zorder=5, gid="contact")
    if title:
        ax.text(layout.x0 + 0.01, layout.z1 - 0.01, title, fontsize=8, va="top", gid="title")
    return fig


def frame_svg(fig: Figure) -> str:
    buffer = io.StringIO()
    fig.savefig(buffer, format="svg", metadata={"Date": None})
    return buffer.getvalue()


def render_frames(scene: Scene, path: PlanPath) -> Dict[str, str]:
    """File name to SVG text, one frame per critical pose"""
    layout = plan_layout(scene, path.nodes)
    frames = {}
    for index, node in enumerate(path.nodes):
        title = f"{index}: node {node.id} ({node.kind.value}) grasp {node.grasp_id}"
        frames[FRAME_PATTERN.format(index=index)] = frame_svg(draw_frame(scene, node, layout, title))
    return frames
