"""Exception taxonomy for the library.

Every failure mode raised on purpose by this package derives from
:class:`LsqError` so callers can catch library errors with a single
``except`` clause.  Where a builtin category fits (``ValueError``,
``IndexError``, ``RuntimeError``) the class also subclasses it, so the
exceptions behave idiomatically in generic numeric code.
"""


class LsqError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(LsqError, ValueError):
    """Operands have incompatible shapes."""


class EmptyInput(LsqError, ValueError):
    """A vector or matrix argument has no entries."""


class NonFiniteEntry(LsqError, ValueError):
    """An input contains NaN or infinity."""


class InvalidParameter(LsqError, ValueError):
    """A configuration value is outside its documented range."""


class IndexOutOfRange(LsqError, IndexError):
    """An entry index is outside the addressed vector or matrix."""


class NonHermitianInput(LsqError, ValueError):
    """A matrix required to be Hermitian is not, beyond tolerance."""


class NoConvergence(LsqError, RuntimeError):
    """An iterative dense kernel failed to converge."""


class ZeroVector(LsqError, ValueError):
    """A vector with zero norm was used where sampling requires mass."""


class ZeroMatrix(LsqError, ValueError):
    """A matrix with zero Frobenius norm cannot be sketched or sampled."""


class ZeroColumnNorm(LsqError, ValueError):
    """A sampled column has zero norm and cannot be rescaled."""


class RankZero(LsqError, ValueError):
    """No singular value of the sketch survived the detection floor."""


class SpanViolation(LsqError, ValueError):
    """Test vectors do not span the row and column spaces of the operand."""


class NormBoundViolated(LsqError, RuntimeError):
    """The assembled coefficient vector exceeds its certified norm bound.

    Signals a bad instance or an undersized sketch; diagnostics are
    carried in the message rather than silently accepted.
    """


class RejectionCapExceeded(LsqError, RuntimeError):
    """The rejection sampler hit its round cap without an acceptance."""


class ZeroSolution(LsqError, ValueError):
    """The implicit solution is identically zero; it has no sampling law."""


class InvalidSpec(LsqError, ValueError):
    """An instance specification is internally inconsistent."""


class SizeGateExceeded(LsqError, ValueError):
    """An exact oracle was asked to enumerate past its size gate."""
