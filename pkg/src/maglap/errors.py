"""Exception hierarchy shared by every module."""


class MaglapError(Exception):
    """Base class; the CLI maps subclasses to exit code 1."""


class DiscretizationError(MaglapError):
    pass


class TruncationError(MaglapError):
    pass


class MonotonicityError(MaglapError):
    pass


class OutOfRangeError(MaglapError, ValueError):
    pass


class QuadratureError(MaglapError):
    pass


class EndpointProximityError(MaglapError):
    pass


class MembershipError(MaglapError):
    pass


class AliasingError(MaglapError):
    pass


class ResolutionError(MaglapError):
    pass


class DominationError(MaglapError):
    pass


class FitError(MaglapError):
    pass
