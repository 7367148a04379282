"""Exception types shared across the solver stack."""


class PatternError(ValueError):
    """Pattern file violates the schema or references missing entities."""


class MeshingError(RuntimeError):
    """Triangulation produced a degenerate or inconsistent mesh."""


class AssemblyError(RuntimeError):
    """A finite element could not be assembled (degenerate geometry)."""


class SingularSystemError(RuntimeError):
    """Thermal network has a node with no conduction path to a fixed-temperature node."""


class SingularConfigurationError(RuntimeError):
    """A hinge's flanking triangle collapsed during deformation."""


class NonConvergenceError(RuntimeError):
    """Newton solve exhausted its iteration budget.

    Carries the last iterate so the caller can shrink the load step and retry
    from a valid state.
    """

    def __init__(self, message, coords=None, residual_norm=None):
        super().__init__(message)
        self.coords = coords
        self.residual_norm = residual_norm


class InfeasibleStartError(RuntimeError):
    """Optimization started from a design that violates its constraints."""
