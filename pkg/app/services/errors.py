"""
Error types shared by the services. Every error carries a stable machine code so the CLI can
emit the same {"code", "message"} detail shape for any failure.
"""

from __future__ import annotations

from typing import Dict


class SensingError(ValueError):
    """构造或校验恒等式时的异常"""

    code = "sensing_error"

    def __init__(self, message: str, *, code: str | None = None):
        super().__init__(message)
        if code:
            self.code = code

    def detail(self) -> Dict[str, str]:
        return {"code": self.code, "message": str(self)}


class DomainError(SensingError):
    code = "domain_mismatch"


class OrderRangeError(SensingError):
    code = "order_out_of_range"


class SingularMapError(SensingError):
    code = "singular_map"


class OutOfDiscError(SensingError):
    code = "out_of_disc"


class DegeneratePointsError(SensingError):
    code = "degenerate_points"


class InvalidRadiusError(SensingError):
    code = "invalid_radius"


class BudgetExceededError(SensingError):
    code = "budget_exceeded"


class IllConditionedError(SensingError):
    code = "singular_solve"


class PointNotInProbeError(SensingError):
    code = "point_not_in_probe"


class CriticalPointError(SensingError):
    code = "critical_point"


class SpineInfeasibleError(SensingError):
    code = "spine_infeasible"


class SpineFitError(SensingError):
    code = "spine_fit"


class ParameterError(SensingError):
    code = "parameter"


class JetExtractionError(SensingError):
    code = "jet_extraction"


class StepTooLongError(SensingError):
    code = "step_too_long"


class CurveError(SensingError):
    code = "curve"


class GeometryError(SensingError):
    code = "geometry"


class ResolutionError(SensingError):
    code = "resolution"
