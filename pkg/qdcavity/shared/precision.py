"""
Working-precision selection.

The recurrence and series code is written once and runs either on native
floats or on mpmath numbers. ``Arithmetic`` hides the difference; every
extended-precision instance owns a private mpmath context, so concurrent
solves never share precision state.
"""

import math
from dataclasses import dataclass
from typing import Any, Iterable

import mpmath
from mpmath.ctx_mp import MPContext

NATIVE_BITS = 53

# CLI precision flag -> significand bits
FLAG_BITS: dict[int, int] = {
    64: NATIVE_BITS,
    128: 128,
    256: 256,
}


@dataclass(frozen=True)
class Precision:
    """Significand width of the working number type."""

    bits: int = NATIVE_BITS

    def __post_init__(self) -> None:
        if self.bits < NATIVE_BITS:
            raise ValueError(f"precision must be at least {NATIVE_BITS} bits, got {self.bits}")

    @classmethod
    def from_flag(cls, flag: int) -> "Precision":
        """Map a ``--precision`` flag value (64, 128, 256) to a Precision."""
        if flag not in FLAG_BITS:
            raise ValueError(
                f"Unsupported precision flag: {flag}. Supported: {sorted(FLAG_BITS)}"
            )
        return cls(FLAG_BITS[flag])

    @property
    def is_native(self) -> bool:
        return self.bits == NATIVE_BITS

    @property
    def unit_roundoff(self) -> float:
        return math.ldexp(1.0, -self.bits)

    def doubled(self) -> "Precision":
        return Precision(2 * self.bits)

    def at_least(self, bits: int) -> "Precision":
        return self if self.bits >= bits else Precision(bits)

    def arithmetic(self) -> "Arithmetic":
        return Arithmetic(self)


class Arithmetic:
    """Number constructors and elementary functions at one precision."""

    def __init__(self, precision: Precision):
        self.precision = precision
        self.ctx: MPContext | None = None
        if not precision.is_native:
            self.ctx = MPContext()
            self.ctx.prec = precision.bits

    @property
    def bits(self) -> int:
        return self.precision.bits

    def num(self, value: Any) -> Any:
        if self.ctx is None:
            return float(value)
        return self.ctx.mpf(value)

    def complex(self, real: Any, imag: Any) -> Any:
        if self.ctx is None:
            return complex(float(real), float(imag))
        return self.ctx.mpc(real, imag)

    def isfinite(self, value: Any) -> bool:
        if self.ctx is None:
            return math.isfinite(value)
        return bool(self.ctx.isfinite(value))

    def fsum(self, values: Iterable[Any]) -> Any:
        """Compensated (exactly rounded) summation."""
        if self.ctx is None:
            return math.fsum(values)
        return self.ctx.fsum(values)

    def exp(self, value: Any) -> Any:
        return math.exp(value) if self.ctx is None else self.ctx.exp(value)

    def cos(self, value: Any) -> Any:
        return math.cos(value) if self.ctx is None else self.ctx.cos(value)

    def sqrt(self, value: Any) -> Any:
        return math.sqrt(value) if self.ctx is None else self.ctx.sqrt(value)

    def cbrt(self, value: Any) -> Any:
        if self.ctx is None:
            return math.copysign(abs(value) ** (1.0 / 3.0), value)
        return self.ctx.cbrt(value)

    def factorial(self, n: int) -> Any:
        if self.ctx is None:
            return float(math.factorial(n))
        return self.ctx.factorial(n)

    def pi(self) -> Any:
        return math.pi if self.ctx is None else +self.ctx.pi


def to_float(value: Any) -> float:
    """Convert any working number to a Python float (may underflow to 0)."""
    return float(value)


def to_complex(value: Any) -> complex:
    return complex(value)


def describe(bits: int) -> str:
    return "double" if bits == NATIVE_BITS else f"mpf[{bits}]"


__all__ = [
    "NATIVE_BITS",
    "FLAG_BITS",
    "Precision",
    "Arithmetic",
    "to_float",
    "to_complex",
    "describe",
    "mpmath",
]
