"""
Run Configuration Module for DroopPlan
Loads the JSON run file, applies command-line overrides and turns the result
into the settings objects the planner modules take
"""

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

from app.constants import (
    CACHE_SUFFIX,
    DATA_DIR,
    EDGE_CHECK_SAMPLES,
    EDGE_COSTS,
    REQUIRE_DROOP_ON_TRANSITIONS,
)
from app.core.errors import StepOutOfRange, ValidationError
from app.core.graph import GraphSettings
from app.core.motion import MotionSettings
from app.core.planner import Discretization
from app.core.scene import (
    PoseSpec,
    blocked_pairs_from_list,
    check_keys,
    number,
    read_json,
)

RUN_KEYS = {
    "scene",
    "task",
    "grasps",
    "cache",
    "discretization",
    "costs",
    "graph",
    "motion",
    "blocked",
    "output",
    "frames",
    "json",
}
DISCRETIZATION_KEYS = {
    "placements",
    "stable_placements",
    "grid_spacing",
    "x_steps_deg",
    "z_steps_deg",
    "stable_yaws_deg",
}
GRAPH_KEYS = {"edge_check_samples", "require_droop_on_transitions"}
MOTION_KEYS = {"step_translation", "step_rotation_deg", "contact_tolerance", "retreat_clearance", "max_reprojection"}


@dataclass(frozen=True)
class RunConfig:
    scene: Optional[Path] = None
    task: Optional[Path] = None
    grasps: Optional[Path] = None
    cache: Optional[Path] = None
    discretization: Discretization = field(default_factory=Discretization)
    costs: Dict[str, float] = field(default_factory=lambda: dict(EDGE_COSTS))
    edge_check_samples: int = EDGE_CHECK_SAMPLES
    require_droop_on_transitions: bool = REQUIRE_DROOP_ON_TRANSITIONS
    motion: MotionSettings = field(default_factory=MotionSettings)
    blocked: Tuple[Tuple[PoseSpec, PoseSpec], ...] = ()
    output: Path = Path("droopplan_out")
    frames: bool = False
    json: bool = False

    def graph_settings(self) -> GraphSettings:
        return GraphSettings(
            costs=dict(self.costs),
            edge_check_samples=self.edge_check_samples,
            require_droop_on_transitions=self.require_droop_on_transitions,
            retreat_clearance=self.motion.retreat_clearance,
            max_reprojection=self.motion.max_reprojection,
        )

    def cache_path(self, digest: str) -> Path:
        """Configured cache file, else one named by the build hash in the cache directory"""
        if self.cache is not None:
            return self.cache
        return DATA_DIR / f"{digest[:16]}{CACHE_SUFFIX}"

    def require_scene(self) -> Path:
        if self.scene is None:
            raise ValidationError("no scene file given", field="run.scene")
        return self.scene

    def require_task(self) -> Path:
        if self.task is None:
            raise ValidationError("no task file given", field="run.task")
        return self.task


# Value checks


def check_steps(values: Sequence[float], low: float, high: float, closed: bool, name: str) -> Tuple[float, ...]:
    """Degrees in, radians out; the upper bound is inclusive only when closed"""
    if not isinstance(values, (list, tuple)) or not values:
        raise ValidationError("must be a non-empty list of angles", field=name)
    steps = []
    for value in values:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValidationError("must be numbers", field=name)
        upper_ok = value <= high if closed else value < high
        if not (value >= low and upper_ok):
            raise StepOutOfRange(f"{value} deg outside [{low}, {high}{']' if closed else ')'}", field=name)
        steps.append(math.radians(value))
    return tuple(steps)


def parse_points(values: Any, name: str) -> Tuple[Tuple[float, float], ...]:
    if not isinstance(values, list) or not values:
        raise ValidationError("must be a non-empty list of [x, y] points", field=name)
    points = []
    for i, value in enumerate(values):
        if (
            not isinstance(value, list)
            or len(value) != 2
            or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in value)
        ):
            raise ValidationError("must be [x, y]", field=f"{name}[{i}]")
        points.append((float(value[0]), float(value[1])))
    return tuple(points)


def check_costs(costs: Any, base: Dict[str, float]) -> Dict[str, float]:
    if not isinstance(costs, dict):
        raise ValidationError("must be an object", field="run.costs")
    merged = dict(base)
    for key, value in costs.items():
        if key not in EDGE_COSTS:
            raise ValidationError(f"unknown edge kind '{key}'", field="run.costs")
        if isinstance(value, bool) or not isinstance(value, (int, float)) or value < 0:
            raise ValidationError("must be a number >= 0", field=f"run.costs.{key}")
        merged[key] = float(value)
    return merged


# Sections


def _discretization(data: Dict[str, Any], base: Discretization) -> Discretization:
    data = check_keys(data, "run.discretization", set(), DISCRETIZATION_KEYS)
    updates: Dict[str, Any] = {}
    if "placements" in data:
        updates["placements"] = parse_points(data["placements"], "run.discretization.placements")
    if "stable_placements" in data:
        updates["stable_placements"] = parse_points(data["stable_placements"], "run.discretization.stable_placements")
    if "grid_spacing" in data:
        spacing = number(data, "grid_spacing", "run.discretization")
        if not spacing > 0:
            raise ValidationError("must be > 0", field="run.discretization.grid_spacing")
        updates["grid_spacing"] = spacing
    if "x_steps_deg" in data:
        updates["x_steps"] = check_steps(data["x_steps_deg"], 0.0, 90.0, True, "run.discretization.x_steps_deg")
    if "z_steps_deg" in data:
        updates["z_steps"] = check_steps(data["z_steps_deg"], 0.0, 360.0, False, "run.discretization.z_steps_deg")
    if "stable_yaws_deg" in data:
        updates["stable_yaws"] = check_steps(
            data["stable_yaws_deg"], 0.0, 360.0, False, "run.discretization.stable_yaws_deg"
        )
    return replace(base, **updates)


def _motion(data: Dict[str, Any], base: MotionSettings) -> MotionSettings:
    data = check_keys(data, "run.motion", set(), MOTION_KEYS)
    updates: Dict[str, Any] = {}
    for key in ("step_translation", "contact_tolerance", "retreat_clearance", "max_reprojection"):
        if key in data:
            updates[key] = number(data, key, "run.motion")
    if "step_rotation_deg" in data:
        updates["step_rotation"] = math.radians(number(data, "step_rotation_deg", "run.motion"))
    return replace(base, **updates)


def _resolve(base_dir: Path, value: Any, name: str) -> Path:
    if not isinstance(value, str) or not value:
        raise ValidationError("must be a path", field=name)
    path = Path(value)
    return path if path.is_absolute() else base_dir / path


def run_config_from_dict(data: Any, base_dir: Path = Path(".")) -> RunConfig:
    data = check_keys(data, "run", set(), RUN_KEYS)
    config = RunConfig()
    updates: Dict[str, Any] = {}
    for key in ("scene", "task", "grasps", "cache", "output"):
        if key in data:
            updates[key] = _resolve(base_dir, data[key], f"run.{key}")
    if "discretization" in data:
        updates["discretization"] = _discretization(data["discretization"], config.discretization)
    if "costs" in data:
        updates["costs"] = check_costs(data["costs"], config.costs)
    if "graph" in data:
        graph = check_keys(data["graph"], "run.graph", set(), GRAPH_KEYS)
        if "edge_check_samples" in graph:
            samples = graph["edge_check_samples"]
            if isinstance(samples, bool) or not isinstance(samples, int) or samples < 1:
                raise ValidationError("must be an integer >= 1", field="run.graph.edge_check_samples")
            updates["edge_check_samples"] = samples
        if "require_droop_on_transitions" in graph:
            updates["require_droop_on_transitions"] = _flag(graph, "require_droop_on_transitions", "run.graph")
    if "motion" in data:
        updates["motion"] = _motion(data["motion"], config.motion)
    if "blocked" in data:
        updates["blocked"] = tuple(blocked_pairs_from_list(data["blocked"], "run.blocked"))
    for key in ("frames", "json"):
        if key in data:
            updates[key] = _flag(data, key, "run")
    return replace(config, **updates)


def _flag(data: Dict[str, Any], key: str, prefix: str) -> bool:
    if not isinstance(data[key], bool):
        raise ValidationError("must be true or false", field=f"{prefix}.{key}")
    return data[key]


def load_run_config(path: Path) -> RunConfig:
    return run_config_from_dict(read_json(path, "run file"), path.parent)


# Command-line overrides


def _float_list(text: str, name: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise ValidationError(f"'{text}' is not a comma-separated number list", field=name) from e


def parse_pose(text: str, name: str) -> PoseSpec:
    values = _float_list(text, name)
    if len(values) not in (2, 3, 4):
        raise ValidationError("pose is x,y[,tilt_deg[,yaw_deg]]", field=name)
    x, y = values[0], values[1]
    tilt = values[2] if len(values) > 2 else 0.0
    yaw = values[3] if len(values) > 3 else 0.0
    if not 0.0 <= tilt <= 90.0:
        raise ValidationError("tilt must lie in [0, 90]", field=name)
    return PoseSpec(placement=(x, y), tilt=math.radians(tilt), yaw=math.radians(yaw))


def parse_block(text: str) -> Tuple[PoseSpec, PoseSpec]:
    parts = text.split(";")
    if len(parts) != 2:
        raise ValidationError("expected 'x,y,tilt,yaw;x,y,tilt,yaw'", field="--block")
    return parse_pose(parts[0], "--block"), parse_pose(parts[1], "--block")


def apply_overrides(config: RunConfig, args) -> RunConfig:
    """Flags win over run-file values; unset flags leave the file value alone"""
    updates: Dict[str, Any] = {}
    for key in ("scene", "task", "grasps", "cache", "output"):
        value = getattr(args, key, None)
        if value is not None:
            updates[key] = Path(value)

    disc = config.discretization
    disc_updates: Dict[str, Any] = {}
    if getattr(args, "placement", None):
        disc_updates["placements"] = tuple(tuple(_float_list(p, "--placement")[:2]) for p in args.placement)
    if getattr(args, "grid_spacing", None) is not None:
        if not args.grid_spacing > 0:
            raise ValidationError("must be > 0", field="--grid-spacing")
        disc_updates["grid_spacing"] = args.grid_spacing
    if getattr(args, "x_steps", None):
        disc_updates["x_steps"] = check_steps(_float_list(args.x_steps, "--x-steps"), 0.0, 90.0, True, "--x-steps")
    if getattr(args, "z_steps", None):
        disc_updates["z_steps"] = check_steps(_float_list(args.z_steps, "--z-steps"), 0.0, 360.0, False, "--z-steps")
    if getattr(args, "yaws", None):
        disc_updates["stable_yaws"] = check_steps(_float_list(args.yaws, "--yaws"), 0.0, 360.0, False, "--yaws")
    if disc_updates:
        updates["discretization"] = replace(disc, **disc_updates)

    if getattr(args, "cost", None):
        costs = {}
        for item in args.cost:
            kind, _, value = item.partition("=")
            try:
                costs[kind] = float(value)
            except ValueError as e:
                raise ValidationError(f"'{item}' is not kind=value", field="--cost") from e
        updates["costs"] = check_costs(costs, config.costs)
    if getattr(args, "edge_samples", None) is not None:
        if args.edge_samples < 1:
            raise ValidationError("must be >= 1", field="--edge-samples")
        updates["edge_check_samples"] = args.edge_samples
    if getattr(args, "block", None):
        updates["blocked"] = config.blocked + tuple(parse_block(b) for b in args.block)
    if getattr(args, "frames", None) is not None:
        updates["frames"] = args.frames
    if getattr(args, "json", None) is not None:
        updates["json"] = args.json
    return replace(config, **updates)
