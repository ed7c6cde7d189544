"""Exception types shared across the package."""


class GeometryError(ValueError):
    """A point or stencil falls outside the region a block can handle."""


class MeshError(ValueError):
    """Invalid mesh construction parameters."""


class CFLViolation(GeometryError):
    """A particle moved, or sits, more than one cell away from its block."""

    def __init__(self, message, pid=None):
        super().__init__(message)
        self.pid = pid


class RoutingError(RuntimeError):
    """A particle reached a rank or block that does not own it."""


class ConfigError(ValueError):
    """Scenario configuration could not be parsed or validated."""
