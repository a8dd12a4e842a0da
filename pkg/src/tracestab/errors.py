"""Exception types shared across the package."""


class ConvergenceError(RuntimeError):
    """A quadrature or iteration failed to reach its requested tolerance."""


class InconclusiveError(RuntimeError):
    """A certificate could not be established at the requested truncation."""


class InconsistencyError(RuntimeError):
    """Two routes to the same quantity disagree beyond tolerance."""
