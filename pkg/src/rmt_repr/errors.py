"""Exception hierarchy shared across the library.

Every failure mode that callers are expected to handle gets its own class so
the CLI can map them onto exit codes without string matching.
"""


class RmtError(Exception):
    """Base class for all library errors."""


class InvalidParam(RmtError):
    """A scalar parameter is outside its documented range."""


class InvalidCovariance(RmtError):
    """A covariance specification does not describe a symmetric PSD matrix."""


class NotSymmetric(RmtError):
    """A matrix expected to be symmetric is not, beyond tolerance."""


class NotPSD(RmtError):
    """A matrix has an eigenvalue too negative to be rounding noise."""


class DimMismatch(RmtError):
    """Operand dimensions are inconsistent."""


class NumericalFailure(RmtError):
    """A factorization or eigensolver failed to produce a usable result."""


class NoConvergence(NumericalFailure):
    """An iterative solver ran out of iterations.

    Carries the last residual so callers can decide whether the partial
    answer is salvageable.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class AlphaAtOne(RmtError):
    """The variance-inflation scalar reached 1; the risk formulas are invalid.

    Happens at the interpolation threshold as the regularization goes to 0.
    Sweep drivers catch this and record the grid point as divergent.
    """


class Diverged(RmtError):
    """A simulated state blew up to non-finite values."""


class ConfigError(RmtError):
    """A run configuration failed validation.

    ``line`` is the 1-based line number in the config file when known.
    """

    def __init__(self, message, line=None):
        super().__init__(message)
        self.line = line
