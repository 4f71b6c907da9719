"""Exception types raised across the library.

Everything derives from :class:`LifeError` so callers can catch the whole
family at once (the CLI maps subclasses to exit codes).
"""


class LifeError(Exception):
    """Base class for all library errors."""


class IndexOutOfRange(LifeError):
    """A coordinate array points outside its dimension."""

    def __init__(self, dimension, position, value=None, bound=None):
        self.dimension = dimension
        self.position = position
        self.value = value
        self.bound = bound
        msg = f"{dimension} index out of range at position {position}"
        if value is not None and bound is not None:
            msg += f" ({value} >= {bound})"
        super().__init__(msg)


class LengthMismatch(LifeError):
    """An array's length disagrees with the declared dimensions."""

    def __init__(self, field, expected=None, actual=None):
        self.field = field
        self.expected = expected
        self.actual = actual
        msg = f"length mismatch in '{field}'"
        if expected is not None:
            msg += f": expected {expected}, got {actual}"
        super().__init__(msg)


class NonFiniteValue(LifeError):
    """A real-valued array contains NaN or infinity."""

    def __init__(self, field, position):
        self.field = field
        self.position = position
        super().__init__(f"non-finite value in '{field}' at position {position}")


class ArithmeticOverflow(LifeError):
    """Offset precomputation would overflow the offset integer type."""


class OracleTooLarge(LifeError):
    """Dense materialization would exceed the allocation guard."""


class NotSorted(LifeError):
    """Run detection requires a tensor sorted by the requested key."""


class StrategyRequiresSorted(LifeError):
    """The partition strategy needs a tensor ordering it did not get."""


class PlanTensorMismatch(LifeError):
    """An execution plan is inconsistent with the tensor it is applied to."""


class DimensionMismatch(LifeError):
    """Kernel operands disagree on problem dimensions."""


class DegenerateStep(LifeError):
    """Step-size denominator is zero; the solver should terminate."""


class ConfigInvalid(LifeError):
    """A configuration value violates its documented constraints."""


class IoFailure(LifeError):
    """An underlying file operation failed."""


class CorruptContainer(LifeError):
    """A container file failed structural validation."""

    def __init__(self, reason):
        self.reason = reason
        super().__init__(f"corrupt container: {reason}")


class UnsupportedVersion(LifeError):
    """The container declares a format version this build cannot read."""
