"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain an operation supports."""


class ConvergenceError(RuntimeError):
    """A series, quadrature or iteration failed to meet its stopping rule."""


class BracketError(RuntimeError):
    """A root finder could not bracket a sign change."""


class CapExceededError(ValueError):
    """A simulation grid has more points than the configured cap."""


class FactorizationError(RuntimeError):
    """Cholesky factorization failed even after maximal jitter."""
