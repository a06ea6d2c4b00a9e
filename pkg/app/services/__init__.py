"""
DroopPlan Services Module
Graph cache, output writers and frame rendering
"""

from app.services.frames import render_frames
from app.services.graph_cache import build_hash, load_cache, save_cache
from app.services.trajectory_writer import render_plan, render_report, render_trajectory

__all__ = [
    "render_frames",
    "build_hash",
    "load_cache",
    "save_cache",
    "render_plan",
    "render_report",
    "render_trajectory",
]
