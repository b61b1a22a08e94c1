"""Exception hierarchy shared by the numerical modules."""


class SaddlerootError(Exception):
    """Base class for all package errors."""


class TailFormatError(SaddlerootError):
    """A tail-probability format cannot be evaluated at the given inputs."""


class NearZeroRoot(TailFormatError):
    pass


class NonPositiveRatio(TailFormatError):
    pass


class ZeroCorrection(TailFormatError):
    pass


class InferenceError(SaddlerootError):
    """A statistic cannot be computed for the given data."""


class NonConvergence(InferenceError):
    pass


class DegenerateData(InferenceError, ValueError):
    pass


class InconsistentFit(InferenceError):
    pass


class SingularInformation(InferenceError):
    pass


class NonPositivePrior(InferenceError):
    pass


class NonConcaveAtMax(InferenceError):
    pass


class BracketFailure(InferenceError):
    pass


class NonMonotone(InferenceError):
    pass


class EvaluationFailure(InferenceError):
    pass


class DefinitionMismatch(UserWarning):
    """Printed closed forms disagree with the definitional computation."""
