"""
Error Module for DroopPlan
Structured planner errors, all ValueError subclasses so callers can catch broadly
"""

from typing import Optional


class PlannerError(ValueError):
    """Base class for every error raised by the planner"""

    code = "planner_error"

    def __init__(self, message: str, field: Optional[str] = None):
        self.field = field
        self.detail = message
        if field:
            message = f"{field}: {message}"
        super().__init__(message)


# Configuration and input errors


class ParseError(PlannerError):
    code = "parse_error"


class ValidationError(PlannerError):
    code = "validation_error"


class IoError(PlannerError):
    code = "io_error"


# Geometry


class NonUnitAxis(PlannerError):
    code = "non_unit_axis"


class InvalidSpacing(PlannerError):
    code = "invalid_spacing"


# Mechanics and sampling


class AngleOutOfRange(PlannerError):
    code = "angle_out_of_range"


class DegenerateGrasp(PlannerError):
    code = "degenerate_grasp"


class StepOutOfRange(PlannerError):
    code = "step_out_of_range"


# Graph search


class NoPath(PlannerError):
    code = "no_path"


class UnresolvedSelector(PlannerError):
    code = "unresolved_selector"


class CacheMismatch(PlannerError):
    code = "cache_mismatch"


# Motion


class MotionError(PlannerError):
    """Raised while interpolating one edge of a plan"""

    code = "motion_error"

    def __init__(
        self,
        message: str,
        field: Optional[str] = None,
        edge_index: Optional[int] = None,
        waypoint_index: Optional[int] = None,
    ):
        self.edge_index = edge_index
        self.waypoint_index = waypoint_index
        super().__init__(message, field)

    def at_edge(self, edge_index: int) -> "MotionError":
        """Return a copy annotated with the offending edge index"""
        return type(self)(
            f"edge {edge_index}: {self.detail}",
            field=self.field,
            edge_index=edge_index,
            waypoint_index=self.waypoint_index,
        )


class DroopConditionViolated(MotionError):
    code = "droop_condition_violated"


class ContactLost(MotionError):
    code = "contact_lost"


class ReachExceeded(MotionError):
    code = "reach_exceeded"


class CollisionInTransit(MotionError):
    code = "collision_in_transit"


class InvalidEdge(MotionError):
    code = "invalid_edge"


class VerificationFailed(PlannerError):
    code = "verification_failed"

    def __init__(self, message: str, report=None):
        self.report = report
        super().__init__(message)
