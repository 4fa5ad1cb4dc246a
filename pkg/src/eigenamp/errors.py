"""Exception hierarchy shared by every eigenamp module."""


class EigenampError(Exception):
    """Base class for all errors raised by eigenamp."""


class InvalidDimension(EigenampError, ValueError):
    pass


class InvalidGroundEnergy(EigenampError, ValueError):
    pass


class InfeasibleGap(EigenampError, ValueError):
    pass


class ShapeError(EigenampError, ValueError):
    pass


class DomainError(EigenampError, ValueError):
    pass


class InvariantError(EigenampError, ValueError):
    """A value object was constructed with data violating its invariants."""


class NumericalDegradation(EigenampError, ArithmeticError):
    """Accumulated rounding pushed a conserved quantity past its tolerance."""


class RefuseDense(EigenampError):
    """Dense operator materialization requested above the size limit."""


class DegenerateMeasurement(EigenampError):
    pass


class DegenerateState(EigenampError):
    pass


class InsufficientAbscissae(EigenampError, ValueError):
    pass


class FixedPointFound(EigenampError):
    """The fixed-point falsifier met a candidate below its residual floor."""


class InternalError(EigenampError):
    pass
