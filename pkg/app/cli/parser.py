"""
Parser Module for DroopPlan
argparse front end: subcommands, flag overrides and the error-to-exit-code map
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from app.cli.commands import InspectQuery, cmd_build_graph, cmd_inspect, cmd_plan
from app.cli.run_config import RunConfig, apply_overrides, load_run_config, parse_pose
from app.constants import (
    APP_NAME,
    EXIT_IO,
    EXIT_NO_PATH,
    EXIT_VALIDATION,
    EXIT_VERIFICATION,
    LOG_FORMAT,
)
from app.core.diagnostics import get_diagnostics
from app.core.errors import IoError, MotionError, NoPath, PlannerError, VerificationFailed
from app.core.graph import EdgeKind
from app.core.sampling import NodeKind
from app.services.trajectory_writer import render_report

logger = logging.getLogger(__name__)


def exit_code(error: PlannerError) -> int:
    if isinstance(error, NoPath):
        return EXIT_NO_PATH
    if isinstance(error, (VerificationFailed, MotionError)):
        return EXIT_VERIFICATION
    if isinstance(error, IoError):
        return EXIT_IO
    return EXIT_VALIDATION


def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument("--config", help="run file (JSON); flags override its values")
    parser.add_argument("--scene", help="scene file")
    parser.add_argument("--grasps", help="grasp-set file (default: fan grasps at the far end)")
    parser.add_argument("--cache", help="graph cache file")
    parser.add_argument("--placement", action="append", metavar="X,Y", help="bouquet placement, repeatable")
    parser.add_argument("--grid-spacing", type=float, help="placement grid spacing in metres")
    parser.add_argument("--x-steps", metavar="DEG,...", help="bouquet tilt steps in degrees")
    parser.add_argument("--z-steps", metavar="DEG,...", help="bouquet yaw steps in degrees")
    parser.add_argument("--yaws", metavar="DEG,...", help="stable placement yaws in degrees")
    parser.add_argument("--cost", action="append", metavar="KIND=VALUE", help="edge cost override, repeatable")
    parser.add_argument("--edge-samples", type=int, help="samples per edge sweep check")
    parser.add_argument(
        "--block",
        action="append",
        metavar="X,Y,TILT,YAW;X,Y,TILT,YAW",
        help="block every edge between two object poses, repeatable",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="droopplan",
        description="Regrasp and constrained-droop manipulation planner",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    plan = sub.add_parser("plan", help="plan a task and write plan, trajectory and report")
    _add_common(plan)
    plan.add_argument("--task", help="task file")
    plan.add_argument("--output", help="output directory")
    plan.add_argument("--frames", action=argparse.BooleanOptionalAction, default=None, help="write SVG frames")
    plan.add_argument("--json", action=argparse.BooleanOptionalAction, default=None, help="also write plan.json")

    build = sub.add_parser("build-graph", help="build the manipulation graph and write its cache")
    _add_common(build)

    inspect = sub.add_parser("inspect", help="query nodes and edges of a cached graph")
    _add_common(inspect)
    inspect.add_argument("--task", help="task file whose blocked pairs are applied")
    inspect.add_argument("--kind", choices=[k.value for k in NodeKind], help="node kind")
    inspect.add_argument("--grasp", type=int, help="grasp id")
    inspect.add_argument("--pose", metavar="X,Y,TILT,YAW", help="object pose")
    inspect.add_argument("--edges", action="store_true", help="list edges touching the matched nodes")
    inspect.add_argument("--edge-kind", choices=[k.value for k in EdgeKind], help="edge kind filter")
    inspect.add_argument("--rejected", action="store_true", help="list rejected candidates and reasons")
    return parser


def resolve_config(args) -> RunConfig:
    config = load_run_config(Path(args.config)) if args.config else RunConfig()
    return apply_overrides(config, args)


def setup_logging(verbose: bool):
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format=LOG_FORMAT,
        stream=sys.stderr,
        force=True,
    )


def run(args) -> int:
    # warnings belong to one command
    get_diagnostics().reset()
    config = resolve_config(args)
    if args.command == "plan":
        return cmd_plan(config)
    if args.command == "build-graph":
        return cmd_build_graph(config)
    query = InspectQuery(
        kind=NodeKind(args.kind) if args.kind else None,
        grasp_id=args.grasp,
        pose=parse_pose(args.pose, "--pose") if args.pose else None,
        edges=args.edges,
        edge_kind=EdgeKind(args.edge_kind) if args.edge_kind else None,
        rejected=args.rejected,
    )
    return cmd_inspect(config, query)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.verbose)
    try:
        return run(args)
    except PlannerError as e:
        sys.stderr.write(f"{APP_NAME} error [{e.code}]: {e}\n")
        if isinstance(e, VerificationFailed) and e.report is not None:
            sys.stderr.write(render_report(e.report))
        return exit_code(e)
