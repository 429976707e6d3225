"""
Exception hierarchy for the microgrid ILC toolkit

Configuration problems map to exit code 1, numerical failures to exit code 2.
"""
from typing import Any, Dict, Optional

from utils.constants import ErrorTypes, ERROR_MESSAGES


class MicrogridError(Exception):
    """Base class for every error raised by this package"""

    error_type: str = ErrorTypes.UNEXPECTED


class GridConfigError(MicrogridError, ValueError):
    """Inconsistent grid parameters (shapes, signs, symmetry)"""

    error_type = ErrorTypes.CONFIG


class DemandError(MicrogridError, ValueError):
    """Invalid demand parameters or malformed profile tables"""

    error_type = ErrorTypes.CONFIG


class ConfigError(MicrogridError):
    """Scenario file could not be parsed or validated"""

    error_type = ErrorTypes.CONFIG


class NumericalError(MicrogridError):
    error_type = ErrorTypes.NUMERICAL


class DiscretizationError(NumericalError):
    """Matrix exponential returned non-finite entries"""


class FilterDesignError(NumericalError, ValueError):
    """Requested Butterworth design is invalid or unstable"""


class SingularBlockError(NumericalError):
    """The lifted plant is not invertible"""


class DimensionError(NumericalError, ValueError):
    """Operand sizes do not match N * 24"""


class SolverFailure(NumericalError):
    """The time integrator stopped before the end of the requested interval"""

    def __init__(self, message: str, t_fail: float):
        super().__init__(f"{message} (t={t_fail:.6g} s)")
        self.t_fail = t_fail


def error_info_from(exc: BaseException, node: Optional[str] = None) -> Dict[str, Any]:
    """Build the error_info dict carried in the pipeline state"""
    error_type = getattr(exc, "error_type", ErrorTypes.UNEXPECTED)
    info: Dict[str, Any] = {
        "type": error_type,
        "message": str(exc),
        "exception": type(exc).__name__,
        "hint": ERROR_MESSAGES.get(error_type, ""),
    }
    if node:
        info["node"] = node
    if isinstance(exc, SolverFailure):
        info["t_fail"] = exc.t_fail
    return info
