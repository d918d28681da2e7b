"""Exception hierarchy.

Expected outcomes of a numerical experiment (an orbit that hit its budget, a
divergent Poincare partial sum, a blowup-suspect NLS run) are reported through
flags on the result objects. Exceptions are reserved for calls that cannot
produce a meaningful result.
"""

from typing import Any, Dict, Optional


class DisperseLabError(Exception):
    """Base class for all disperse-lab errors."""


class DomainError(DisperseLabError, ValueError):
    """Argument outside the domain of the operation."""


class UnsupportedSpaceError(DisperseLabError):
    """Operation not available (or not certified) on the given space."""


class UnsupportedGroupError(DisperseLabError):
    """No fundamental domain or model support for the given group."""


class ConfigError(DisperseLabError):
    """Invalid settings file or run configuration."""


class NumericalError(DisperseLabError):
    """Quadrature or extrapolation failed to reach its tolerance."""

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class DivergenceError(NumericalError):
    """An integral that should converge does not on the given grid."""


class OscillatoryMultiplierError(DisperseLabError):
    """Oscillatory multiplier handed to the plain inverse transform."""


class DegenerateProfileError(DisperseLabError):
    """Bound profile vanishes where the kernel does not."""


class ClassViolationError(DisperseLabError):
    """Group fails the delta(Gamma) < rho_m admission gate."""
