"""Exception types shared across the package."""


class GwgError(Exception):
    """Base class for all package errors."""


class ConfigError(GwgError, ValueError):
    """Invalid configuration: degrees, mesh parameters, quadrature requests,
    unknown case identifiers, malformed config files."""


class MeshError(GwgError, RuntimeError):
    """Mesh construction produced an inconsistent topology or geometry."""


class AssemblyError(GwgError, RuntimeError):
    """Assembly failed, e.g. a non-finite load value at a quadrature point."""


class SolverError(GwgError, RuntimeError):
    """Linear solver failure (non-SPD matrix, breakdown)."""


class NonConvergenceError(SolverError):
    """CG did not reach the requested tolerance within ``max_iters``.

    Carries the best iterate so callers can inspect or salvage it.
    """

    def __init__(self, message, best_x, residual, iterations):
        super().__init__(message)
        self.best_x = best_x
        self.residual = residual
        self.iterations = iterations
