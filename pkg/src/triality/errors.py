"""Exception types shared across the package."""


class TrialityError(Exception):
    """Base class for all package-specific errors."""


class DomainError(TrialityError, ValueError):
    """Input outside the admissible domain of an energy or measure."""


class SingularDualError(TrialityError, ZeroDivisionError):
    """Operation undefined at zeta = 0 (or numerically indistinguishable from it)."""


class NonIntegrableFieldError(TrialityError):
    """Strain field has nonzero curl; path integration would be path-dependent."""

    def __init__(self, message, max_residual=None, node=None):
        super().__init__(message)
        self.max_residual = max_residual
        self.node = node


class InvalidRotationError(TrialityError, ValueError):
    """Matrix fails the orthonormality / unit-determinant check."""


class RootSolveError(TrialityError, RuntimeError):
    """Dual-root iteration failed; carries the best iterate found."""

    def __init__(self, message, best_zeta=None, best_residual=None):
        super().__init__(message)
        self.best_zeta = best_zeta
        self.best_residual = best_residual


class OracleError(TrialityError, RuntimeError):
    """Direct minimization produced no usable descent result."""


class ConfigError(TrialityError, ValueError):
    """Problem configuration failed validation."""
