"""Exception types shared across the package."""


class HopflowError(Exception):
    """Base class for all package-specific errors."""


class InvalidModelError(HopflowError, ValueError):
    """Model parameters violate a constructor invariant."""


class DimensionError(HopflowError, ValueError):
    """An array argument has the wrong length or shape."""


class DomainError(HopflowError, ValueError):
    """An output voltage lies outside the open range of the sigmoid.

    The convex conjugate of the stored energy, the inverse charge map and
    the gradient-flow metric are only defined strictly inside that range;
    at the boundary the conjugate is +inf.
    """


class ConfigError(HopflowError, ValueError):
    """A scenario configuration failed validation."""


class IntegrationError(HopflowError, RuntimeError):
    """Base class for time-integration failures."""


class DivergenceError(IntegrationError):
    """The integrated state became non-finite."""


class BoundaryProximityError(IntegrationError):
    """The trajectory approached the sigmoid saturation boundary closer
    than floating point can resolve (step size floor reached, or a stored
    voltage rounded onto the boundary)."""


class MaxStepsError(IntegrationError):
    """The step budget was exhausted before reaching the time horizon.

    The partial trajectory, if any was recorded, is attached as
    ``trajectory``.
    """

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory
