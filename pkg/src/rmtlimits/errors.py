"""Exception types raised by the solvers and samplers."""


class RMTError(Exception):
    """Base class for library errors."""


class InputError(RMTError, ValueError):
    """Invalid user input: bad parameters, malformed files, schema violations."""


class SpectralParameterError(InputError):
    """The spectral parameter lies on the forbidden set (real axis or unit circle)."""


class NumericalError(RMTError, ArithmeticError):
    """A numerical procedure failed (non-convergence, singularity)."""


class ConvergenceError(NumericalError):
    """Iteration did not reach the requested tolerance.

    Attributes
    ----------
    residual : float
        Largest residual at the last iterate.
    iterations : int
        Number of iterations performed.
    """

    def __init__(self, message, residual=float("nan"), iterations=0):
        super().__init__(f"{message} (residual={residual:.3e}, iterations={iterations})")
        self.residual = residual
        self.iterations = iterations


class PoleError(NumericalError):
    """A denominator of a functional equation vanished."""


class DegenerateTransformError(NumericalError):
    """A transform value that must be divided by is numerically zero."""
