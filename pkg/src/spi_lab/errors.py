"""Exception hierarchy shared by every module of the lab."""


class SpiLabError(Exception):
    """Base class for all errors raised by spi_lab."""


class DimensionMismatch(SpiLabError, ValueError):
    pass


class GroundSetTooLarge(SpiLabError, ValueError):
    pass


class SubsetTooLarge(SpiLabError, ValueError):
    pass


class InstanceTooLarge(SpiLabError, ValueError):
    pass


class UnknownElement(SpiLabError, KeyError):
    pass


class GroundSetMismatch(SpiLabError, ValueError):
    pass


class DegenerateWeight(SpiLabError, ValueError):
    pass


class NotMonotone(SpiLabError, ValueError):
    pass


class NotInScaledPolytope(SpiLabError, ValueError):
    pass


class DuplicateOffer(SpiLabError, RuntimeError):
    pass


class SaturatedCoordinate(SpiLabError, ValueError):
    pass


class MarginalExceedsDistribution(SpiLabError, ValueError):
    pass


class InvalidP(SpiLabError, ValueError):
    pass


class InfeasibleLP(SpiLabError, RuntimeError):
    pass


class UnboundedLP(SpiLabError, RuntimeError):
    pass


class NotSubmodular(SpiLabError, ValueError):
    pass
