"""Exception types raised by wptlab."""


class WPTError(Exception):
    """Base class for all wptlab errors."""


class GridMismatchError(WPTError, ValueError):
    pass


class DensityError(WPTError, ValueError):
    pass


class NotDiffeomorphicError(WPTError):
    pass


class GeodesicRegimeError(WPTError):
    pass


class IncompatibleRHSError(WPTError, ValueError):
    pass


class SolverStagnationError(WPTError):
    pass


class ResolutionError(WPTError):
    pass


class SubdivisionError(WPTError):
    pass


class ConjugatePointError(WPTError):
    pass
