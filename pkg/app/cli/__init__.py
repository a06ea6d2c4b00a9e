"""
DroopPlan CLI Module
Command-line front end over the core planner
"""

from app.cli.commands import InspectQuery, cmd_build_graph, cmd_inspect, cmd_plan
from app.cli.parser import build_parser, exit_code, main
from app.cli.run_config import RunConfig, apply_overrides, load_run_config, run_config_from_dict

__all__ = [
    "InspectQuery",
    "cmd_build_graph",
    "cmd_inspect",
    "cmd_plan",
    "build_parser",
    "exit_code",
    "main",
    "RunConfig",
    "apply_overrides",
    "load_run_config",
    "run_config_from_dict",
]
