"""Exception types raised by the solver."""


class MmsupgError(Exception):
    """Base class for all solver errors."""


class InvalidArgumentError(MmsupgError, ValueError):
    pass


class DegenerateElementError(MmsupgError):
    pass


class SingularMatrixError(MmsupgError):
    pass


class InvalidMeshError(MmsupgError):
    """Raised when an element is inverted or collapsed."""


class AdaptationFailure(MmsupgError):
    """Mesh movement could not produce a valid mesh.

    ``step`` carries the physical time-step index when known.
    """

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class InterpolationFailure(MmsupgError):
    pass
