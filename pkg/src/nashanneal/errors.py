"""Exception types shared across the package."""


class SolverError(Exception):
    """Base class for every error this package raises on purpose."""


class DimensionError(SolverError):
    """Strategy or matrix dimensions do not match the game."""


class InputError(SolverError):
    """Malformed, non-finite, or out-of-range user input."""


class EncodingError(SolverError):
    """Binary codeword does not match its configured width."""


class CapacityError(SolverError):
    """A payoff entry exceeds the crossbar's cells-per-element budget."""


class LatticeError(SolverError):
    """Profile is not on the configured probability lattice."""


class BackendError(SolverError):
    """An objective backend returned an unusable value."""


class SizeError(SolverError):
    """Game too large for exhaustive enumeration."""
