"""Exception hierarchy shared by every module."""


class MimicryError(Exception):
    """Base class for all errors raised by bandmimic."""


class InvalidParameter(MimicryError, ValueError):
    pass


class InvalidIntensity(InvalidParameter):
    pass


class InvalidSpacing(InvalidParameter):
    pass


class SpacingOutOfRange(InvalidSpacing):
    pass


class InvalidEpsilon(InvalidParameter):
    pass


class InvalidR(InvalidParameter):
    pass


class NotOddMultiple(InvalidParameter):
    pass


class ResolutionTooCoarse(InvalidParameter):
    pass


class WindowTooLarge(InvalidParameter):
    pass


class InvalidParameters(InvalidParameter):
    pass


class DimensionMismatch(MimicryError, ValueError):
    pass


class OffLattice(MimicryError, ValueError):
    pass


class NotAKernel(MimicryError, ValueError):
    pass


class BandwidthExceeded(MimicryError, ValueError):
    pass


class BandwidthViolation(BandwidthExceeded):
    pass


class BelowNyquist(MimicryError, ValueError):
    pass


class UnsupportedOrder(MimicryError, ValueError):
    pass


class OrderTooLarge(UnsupportedOrder):
    pass


class DomainViolation(MimicryError, ValueError):
    pass


class QuadratureFailure(MimicryError, ArithmeticError):
    pass


class TruncationFailure(MimicryError, ArithmeticError):
    pass


class SlowConvergence(MimicryError, ArithmeticError):
    pass


class IoFailure(MimicryError, OSError):
    pass
