"""Sharp constants and stability diagnostics for trace-type inequalities."""

from .errors import ConvergenceError, InconclusiveError, InconsistencyError

__version__ = "0.1.0"

__all__ = ["ConvergenceError", "InconclusiveError", "InconsistencyError", "__version__"]
