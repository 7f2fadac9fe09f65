"""Exception hierarchy for serialcorr."""


class SerialCorrError(Exception):
    """Base class for every error raised by this package."""


class InvalidInputError(SerialCorrError, ValueError):
    """Malformed argument: wrong shape, non-finite values, bad orders."""


class NonCausalError(SerialCorrError, ValueError):
    """An autoregressive polynomial has a root on or inside the unit circle."""


class DegenerateModelError(SerialCorrError):
    """The Yule-Walker system is numerically singular (near unit root)."""


class PathologicalModelError(SerialCorrError):
    """A limiting object is undefined because a required matrix is singular.

    These are the parameter configurations where the asymptotic theory
    degenerates (``K`` or the residual-correlation normal matrix is not
    invertible).
    """


class SingularDesignError(SerialCorrError):
    """Least-squares normal equations are singular and no ridge was supplied."""


class DegenerateSampleError(SerialCorrError):
    """The observed sample cannot support the test (constant series, too short,
    zero residual variance, singular studentising matrix).

    Callers should report the test as inconclusive.
    """
