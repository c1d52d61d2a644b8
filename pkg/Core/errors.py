# Core/errors.py
# ============================================================================
# Exception hierarchy for VacuumFlow
# ============================================================================

import traceback
from datetime import datetime
from typing import Any, Dict, Optional


class VacuumFlowError(Exception):
    """Base exception with detailed context"""
    def __init__(self, message: str, context: Dict[str, Any] = None, cause: Exception = None):
        super().__init__(message)
        self.message = message
        self.context = context or {}
        self.cause = cause
        self.timestamp = datetime.now()
        self.traceback_str = traceback.format_exc() if cause else None

    def describe(self) -> Dict[str, Any]:
        return {
            'error': type(self).__name__,
            'message': self.message,
            'context': self.context,
            'cause': repr(self.cause) if self.cause else None,
        }


class ParameterError(VacuumFlowError):
    """Model parameters violate an admissibility inequality"""
    pass


class EmptyWindowError(VacuumFlowError):
    """An admissible exponent window or fit window is empty"""
    pass


class DomainError(VacuumFlowError):
    """Argument outside the domain of a functional"""
    pass


class NegativeDensityError(VacuumFlowError):
    """Non-pinned density reached zero or below"""
    pass


class PositivityError(VacuumFlowError):
    """Step rejected because a density fell under the positivity floor"""
    def __init__(self, message: str, cell: Optional[int] = None, t: Optional[float] = None,
                 context: Dict[str, Any] = None, cause: Exception = None):
        context = dict(context or {})
        context.update({'cell': cell, 't': t})
        super().__init__(message, context=context, cause=cause)
        self.cell = cell
        self.t = t


class PreconditionError(VacuumFlowError):
    """Operation called outside its precondition"""
    pass


class PinningError(VacuumFlowError):
    """Vacuum pinning requested on data that cannot carry it"""
    pass


class CoverageError(VacuumFlowError):
    """Time series does not cover the requested window"""
    pass


class InsufficientSamplesError(VacuumFlowError):
    """Not enough usable samples for a fit"""
    pass


class ConfigError(VacuumFlowError):
    """Config parse or strict-mode failure with line/key info"""
    pass


class ConvergenceError(VacuumFlowError):
    """Refinement levels are not a nested sequence"""
    pass
