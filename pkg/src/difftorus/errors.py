"""Exception types raised by the numerical layer."""


class DiffTorusError(Exception):
    """Base class for package errors."""


class GridMismatchError(DiffTorusError, ValueError):
    """Operands live on different grids or have the wrong shape."""


class DomainError(DiffTorusError, ValueError):
    """A pointwise precondition failed (log near zero, singular matrix, ...)."""


class RegularityError(DomainError):
    """A map failed its diffeomorphism regularity certificate."""


class ConsistencyError(DiffTorusError, RuntimeError):
    """Internal invariant broken, e.g. Hermitian symmetry lost."""


class ConvergenceError(DiffTorusError, RuntimeError):
    """An iterative solver exhausted its budget."""


class GenerationError(DiffTorusError, RuntimeError):
    """Rejection sampling could not produce an admissible random object."""
