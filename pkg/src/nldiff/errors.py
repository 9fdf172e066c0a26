"""Exception hierarchy for nldiff."""


class NldiffError(Exception):
    """Base class for all nldiff errors."""


class InvalidDomain(NldiffError):
    pass


class InvalidArgument(NldiffError):
    pass


class DomainMismatch(NldiffError):
    pass


class DimensionMismatch(NldiffError):
    pass


class LambdaOutOfRange(NldiffError):
    pass


class NotNonnegative(NldiffError):
    pass


class ConditionNotCertified(NldiffError):
    pass


class BracketFailure(NldiffError):
    pass


class EmptyTestFunction(NldiffError):
    pass


class WrongInfimumKind(NldiffError):
    pass


class SymmetryRequired(NldiffError):
    pass


class UnstableStep(NldiffError):
    """Explicit time step violates the stability guard.

    Carries a usable step size in ``suggested_dt``.
    """

    def __init__(self, message, suggested_dt):
        super().__init__(message)
        self.suggested_dt = suggested_dt


class DegenerateTrajectory(NldiffError):
    pass


class SingularResolvent(NldiffError):
    pass


class SingularSystem(NldiffError):
    pass


class ResolventDegenerate(NldiffError):
    pass


class ConfigError(NldiffError):
    """Scenario configuration problem; names the offending key when known."""

    def __init__(self, message, key=None):
        super().__init__(message if key is None else f"{key}: {message}")
        self.key = key
