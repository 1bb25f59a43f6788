"""
Error hierarchy.

Every error carries a ``details`` mapping so the CLI can serialise it as
machine-readable JSON on stderr.
"""

from __future__ import annotations

from typing import Any, Dict, List, Optional


class ModWignerError(Exception):
    """Base class for all library errors."""

    def __init__(self, message: str, **details: Any):
        super().__init__(message)
        self.message = message
        self.details: Dict[str, Any] = details

    def to_dict(self) -> Dict[str, Any]:
        return {
            "error": type(self).__name__,
            "message": self.message,
            "details": self.details,
        }


class DomainError(ModWignerError, ValueError):
    """Input outside the mathematical domain (non-finite values, bad lattice)."""


class PreconditionError(ModWignerError, ValueError):
    """A documented precondition of an operation does not hold."""


class TruncationError(ModWignerError):
    """A finite window or truncation drops more mass than tolerated."""


class AliasingError(ModWignerError, ValueError):
    """Grid too coarse for the requested Fourier content."""


class UnderResolvedError(ModWignerError):
    """A reconstruction is ill-posed on the supplied grid."""


class DegenerateStateError(ModWignerError, ValueError):
    """A superposition cancels to the null vector."""


class NullProjectionError(ModWignerError):
    """A measurement outcome has (numerically) zero probability."""


class NumericError(ModWignerError):
    """Special-function evaluation failed to converge."""


class ConfigError(ModWignerError, ValueError):
    """Configuration text could not be parsed or validated."""

    def __init__(self, message: str, issues: Optional[List[Dict[str, Any]]] = None):
        super().__init__(message, issues=issues or [])
        self.issues: List[Dict[str, Any]] = issues or []


class ExportError(ModWignerError):
    """Writing or reading an artifact failed; ``details`` names the path."""
