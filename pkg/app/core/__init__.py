"""
DroopPlan Core Module
Exports all core functionality
"""

from app.core.errors import PlannerError
from app.core.geometry import SupportSurface, Transform, discretize_surface, placement_pose
from app.core.scene import Scene, TaskSpec, load_scene, load_task
from app.core.mechanics import (
    GraspState,
    TransitionCommand,
    droop_occurs,
    gravity_torque,
    gripper_load_share,
    transition_distance_down,
    transition_distance_up,
)
from app.core.sampling import annotate_grasps, filter_feasible, generate_bouquet, sample_stable_placements
from app.core.graph import ManipulationGraph, PlanPath, block_edges, build_drooping_graph, expand_with_regrasp, search_path
from app.core.motion import Trajectory, assemble_trajectory, verify_trajectory
from app.core.planner import Discretization, build_graph, plan_task

__all__ = [
    "PlannerError",
    "SupportSurface",
    "Transform",
    "discretize_surface",
    "placement_pose",
    "Scene",
    "TaskSpec",
    "load_scene",
    "load_task",
    "GraspState",
    "TransitionCommand",
    "droop_occurs",
    "gravity_torque",
    "gripper_load_share",
    "transition_distance_down",
    "transition_distance_up",
    "annotate_grasps",
    "filter_feasible",
    "generate_bouquet",
    "sample_stable_placements",
    "ManipulationGraph",
    "PlanPath",
    "block_edges",
    "build_drooping_graph",
    "expand_with_regrasp",
    "search_path",
    "Trajectory",
    "assemble_trajectory",
    "verify_trajectory",
    "Discretization",
    "build_graph",
    "plan_task",
]
