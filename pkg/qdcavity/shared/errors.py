"""Exception types raised by the shared modules."""

from typing import Any


class QdcavityError(Exception):
    """Base class for all library errors."""


class ParameterError(QdcavityError, ValueError):
    """A physical parameter violates its invariant."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field} {message}")


class ConfigError(QdcavityError, ValueError):
    """A configuration file or flag could not be interpreted."""

    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"config key '{key}': {message}")


class LadderError(QdcavityError, ValueError):
    """A moment ladder is too short or a quantity is undefined on it."""


class ConvergenceError(QdcavityError, RuntimeError):
    """The I1 bracket did not reach the tolerance before the maximum order."""

    def __init__(self, message: str, order: int, bracket: tuple[Any, Any] | None = None):
        self.order = order
        self.bracket = bracket
        super().__init__(f"{message} (order {order}, last bracket {bracket})")


class RecurrenceOverflowError(QdcavityError, OverflowError):
    """The C/D sequences left the floating-point range despite rescaling."""

    def __init__(self, order: int):
        self.order = order
        super().__init__(f"C/D recurrence overflowed at order {order} despite rescaling")


class PrecisionRangeError(QdcavityError, ValueError):
    """A requested |alpha| is outside the range the series can control."""

    def __init__(self, alpha_abs: float, max_safe: float):
        self.alpha_abs = alpha_abs
        self.max_safe = max_safe
        super().__init__(
            f"|alpha|={alpha_abs:g} is outside the controllable range; "
            f"maximum safe |alpha| is {max_safe:g}"
        )


class OracleError(QdcavityError, RuntimeError):
    """The Liouvillian reference solve failed one of its checks."""
