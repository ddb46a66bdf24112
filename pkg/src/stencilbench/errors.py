"""Exception types shared across the package.

Each maps to one contract-violation class so callers (and the CLI) can
distinguish usage errors (exit 2) from verification mismatches (exit 1).
"""


class StencilError(Exception):
    """Base class for all package errors."""


class DimensionError(StencilError, ValueError):
    """Grid extent is zero, negative, or otherwise unusable."""


class BoundsError(StencilError, IndexError):
    """Coordinate outside the padded box or plane/line range."""


class ShapeError(StencilError, ValueError):
    """Two grids that must match in extents do not."""


class AliasingError(StencilError, ValueError):
    """src and dst of an out-of-place kernel share storage."""


class PartitionError(StencilError, ValueError):
    """More partitions requested than elements available."""


class PlanError(StencilError, ValueError):
    """SweepPlan violates an engine precondition."""


class ConfigError(StencilError, ValueError):
    """Invalid runtime configuration (team size, element count, ...)."""


class DomainError(StencilError, ValueError):
    """Argument outside the mathematical domain of a model operation."""


class PinningError(StencilError, RuntimeError):
    """The OS refused to set a thread's affinity."""


class PlacementError(StencilError, ValueError):
    """Thread placement request exceeds the hardware capacity."""
