"""Custom floating-point and fixed-point representations.

A :class:`FloatFormat` describes a sign/exponent/fraction layout with a hidden
leading one (``x = (-1)^s * 2^e * 1.m``).  There are no subnormals: a biased
exponent of zero always means zero, and the all-ones exponent is reserved for
infinities (zero fraction) and NaNs (non-zero fraction).

All mantissa narrowing truncates toward zero.
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass
from fractions import Fraction

__all__ = [
    "FloatFormat",
    "FpClass",
    "FpValue",
    "FixedValue",
    "ConversionError",
    "parse_format",
    "FLOAT16",
    "FLOAT32",
    "FLOAT64",
    "encode",
    "decode",
    "from_real",
    "float_to_fixed",
    "fixed_to_float",
]


class ConversionError(ValueError):
    """Raised when a value cannot be represented in the requested form."""


class FpClass(enum.Enum):
    ZERO = "zero"
    NORMAL = "normal"
    INF = "inf"
    NAN = "nan"


_FORMAT_RE = re.compile(r"^\s*float(\d+)\s*\(\s*(\d+)\s*,\s*(\d+)\s*\)\s*$")


@dataclass(frozen=True)
class FloatFormat:
    mantissa_bits: int
    exp_bits: int
    bias: int | None = None

    def __post_init__(self):
        if not 1 <= self.mantissa_bits <= 53:
            raise ValueError(f"mantissa_bits out of range: {self.mantissa_bits}")
        if not 1 <= self.exp_bits <= 15:
            raise ValueError(f"exp_bits out of range: {self.exp_bits}")
        if self.bias is None:
            object.__setattr__(self, "bias", (1 << (self.exp_bits - 1)) - 1)

    @property
    def width(self) -> int:
        return 1 + self.exp_bits + self.mantissa_bits

    @property
    def exp_mask(self) -> int:
        return (1 << self.exp_bits) - 1

    @property
    def frac_mask(self) -> int:
        return (1 << self.mantissa_bits) - 1

    @property
    def min_exp(self) -> int:
        """Smallest unbiased exponent of a normal number."""
        return 1 - self.bias

    @property
    def max_exp(self) -> int:
        """Largest unbiased exponent of a finite number."""
        return self.exp_mask - 1 - self.bias

    @property
    def hex_digits(self) -> int:
        return (self.width + 3) // 4

    @property
    def name(self) -> str:
        return f"float{self.width}({self.mantissa_bits},{self.exp_bits})"

    def __str__(self) -> str:
        return self.name

    def format_bits(self, bits: int) -> str:
        """Fixed-width lowercase hex, e.g. ``46c0``."""
        return f"{bits:0{self.hex_digits}x}"

    # canonical special patterns
    def inf_bits(self, sign: int = 0) -> int:
        return (sign << (self.width - 1)) | (self.exp_mask << self.mantissa_bits)

    def nan_bits(self) -> int:
        return (self.exp_mask << self.mantissa_bits) | (1 << (self.mantissa_bits - 1))

    def max_bits(self, sign: int = 0) -> int:
        """Largest finite magnitude."""
        return (sign << (self.width - 1)) | ((self.exp_mask - 1) << self.mantissa_bits) | self.frac_mask

    def min_normal_bits(self, sign: int = 0) -> int:
        return (sign << (self.width - 1)) | (1 << self.mantissa_bits)


def parse_format(text: str) -> FloatFormat:
    """Parse ``floatW(m,e)``; ``W`` must equal ``1 + m + e``."""
    match = _FORMAT_RE.match(text)
    if not match:
        raise ValueError(f"malformed format string: {text!r}")
    width, mant, exp = (int(g) for g in match.groups())
    fmt = FloatFormat(mant, exp)
    if fmt.width != width:
        raise ValueError(f"{text!r}: width {width} != 1 + {mant} + {exp}")
    return fmt


FLOAT16 = FloatFormat(10, 5)
FLOAT32 = FloatFormat(23, 8)
FLOAT64 = FloatFormat(53, 10)


@dataclass(frozen=True)
class FpValue:
    """A decoded bit pattern.

    ``fraction`` is kept verbatim even for zero-exponent patterns so that every
    bit pattern round-trips; such patterns are all zeros arithmetically.
    """

    format: FloatFormat
    sign: int
    biased_exp: int
    fraction: int

    @property
    def cls(self) -> FpClass:
        if self.biased_exp == 0:
            return FpClass.ZERO
        if self.biased_exp == self.format.exp_mask:
            return FpClass.NAN if self.fraction else FpClass.INF
        return FpClass.NORMAL

    @property
    def exponent(self) -> int:
        """Unbiased exponent (meaningful for normal values)."""
        return self.biased_exp - self.format.bias

    @property
    def bits(self) -> int:
        return encode(self)

    @property
    def is_nan(self) -> bool:
        return self.cls is FpClass.NAN

    @property
    def is_inf(self) -> bool:
        return self.cls is FpClass.INF

    @property
    def is_zero(self) -> bool:
        return self.cls is FpClass.ZERO

    @property
    def is_normal(self) -> bool:
        return self.cls is FpClass.NORMAL

    def to_fraction(self) -> Fraction:
        """Exact rational value; raises for Inf/NaN."""
        cls = self.cls
        if cls is FpClass.ZERO:
            return Fraction(0)
        if cls is not FpClass.NORMAL:
            raise ConversionError(f"{cls.value} has no rational value")
        sig = (1 << self.format.mantissa_bits) | self.fraction
        val = Fraction(sig) * Fraction(2) ** (self.exponent - self.format.mantissa_bits)
        return -val if self.sign else val

    def __float__(self) -> float:
        cls = self.cls
        if cls is FpClass.NAN:
            return math.nan
        if cls is FpClass.INF:
            return -math.inf if self.sign else math.inf
        if cls is FpClass.ZERO:
            return -0.0 if self.sign else 0.0
        sig = (1 << self.format.mantissa_bits) | self.fraction
        return (-1.0 if self.sign else 1.0) * math.ldexp(float(sig), self.exponent - self.format.mantissa_bits)

    def hex(self) -> str:
        return self.format.format_bits(self.bits)

    def __repr__(self) -> str:
        return f"FpValue({self.format.name}, {self.hex()}, {float(self)!r})"


def encode(v: FpValue) -> int:
    """Concatenate ``(s, biased_exp, fraction)`` into an unsigned pattern."""
    fmt = v.format
    return (v.sign << (fmt.width - 1)) | (v.biased_exp << fmt.mantissa_bits) | v.fraction


def decode(bits: int, fmt: FloatFormat) -> FpValue:
    if bits < 0 or bits >> fmt.width:
        raise ValueError(f"pattern {bits:#x} does not fit {fmt.name}")
    return FpValue(
        fmt,
        bits >> (fmt.width - 1),
        (bits >> fmt.mantissa_bits) & fmt.exp_mask,
        bits & fmt.frac_mask,
    )


def pack(fmt: FloatFormat, sign: int, exponent: int, fraction: int) -> int:
    """Pattern for ``(-1)^sign * 2^exponent * 1.fraction`` with range checks.

    Overflow saturates to a signed infinity; underflow flushes to +0.
    """
    biased = exponent + fmt.bias
    if biased >= fmt.exp_mask:
        return fmt.inf_bits(sign)
    if biased <= 0:
        return 0
    return (sign << (fmt.width - 1)) | (biased << fmt.mantissa_bits) | fraction


def from_real(x: float, fmt: FloatFormat) -> FpValue:
    """Nearest-toward-zero representable value of ``x``."""
    x = float(x)
    if math.isnan(x):
        return decode(fmt.nan_bits(), fmt)
    sign = 1 if math.copysign(1.0, x) < 0 else 0
    if math.isinf(x):
        return decode(fmt.inf_bits(sign), fmt)
    if x == 0.0:
        return FpValue(fmt, 0, 0, 0)
    mant, exp = math.frexp(abs(x))  # abs(x) = mant * 2^exp, mant in [0.5, 1)
    frac = int(math.ldexp(2.0 * mant - 1.0, fmt.mantissa_bits))
    return decode(pack(fmt, sign, exp - 1, frac), fmt)


@dataclass(frozen=True)
class FixedValue:
    """Two's-complement fixed point with ``int_bits`` M and ``frac_bits`` N.

    The stored word is ``M + N + 1`` bits wide; ``raw`` is its signed reading.
    """

    int_bits: int
    frac_bits: int
    raw: int

    def __post_init__(self):
        lo, hi = self.limits(self.int_bits, self.frac_bits)
        if not lo <= self.raw <= hi:
            raise ValueError(f"raw {self.raw} outside [{lo}, {hi}]")

    @staticmethod
    def limits(int_bits: int, frac_bits: int) -> tuple[int, int]:
        top = 1 << (int_bits + frac_bits)
        return -top, top - 1

    @property
    def width(self) -> int:
        return self.int_bits + self.frac_bits + 1

    @property
    def pattern(self) -> int:
        """Unsigned word; negatives read as ``2^(M+N+1) - |X|``."""
        return self.raw & ((1 << self.width) - 1)

    @classmethod
    def from_pattern(cls, pattern: int, int_bits: int, frac_bits: int) -> "FixedValue":
        width = int_bits + frac_bits + 1
        pattern &= (1 << width) - 1
        raw = pattern - (1 << width) if pattern >> (width - 1) else pattern
        return cls(int_bits, frac_bits, raw)

    @property
    def value(self) -> Fraction:
        return Fraction(self.raw, 1 << self.frac_bits)

    def __float__(self) -> float:
        return self.raw / (1 << self.frac_bits)


def float_to_fixed(x: FpValue, int_bits: int, frac_bits: int) -> FixedValue:
    """chi: ``X = x * 2^N`` truncated toward zero, saturating on overflow."""
    cls = x.cls
    if cls in (FpClass.INF, FpClass.NAN):
        raise ConversionError(f"unconvertible class: {cls.value}")
    lo, hi = FixedValue.limits(int_bits, frac_bits)
    if cls is FpClass.ZERO:
        return FixedValue(int_bits, frac_bits, 0)
    fmt = x.format
    sig = (1 << fmt.mantissa_bits) | x.fraction
    shift = x.exponent + frac_bits - fmt.mantissa_bits
    if shift >= 0:
        # cheap saturation check before building a huge integer
        if sig.bit_length() + shift > int_bits + frac_bits + 1:
            mag = hi + 1
        else:
            mag = sig << shift
    else:
        mag = sig >> -shift
    raw = -mag if x.sign else mag
    return FixedValue(int_bits, frac_bits, max(lo, min(hi, raw)))


def fixed_to_float(x: FixedValue, fmt: FloatFormat) -> FpValue:
    """chi^-1: leading-one detection, then truncation below the MSB."""
    if x.raw == 0:
        return FpValue(fmt, 0, 0, 0)
    sign = 1 if x.raw < 0 else 0
    mag = -x.raw if sign else x.raw
    msb = mag.bit_length() - 1
    m = fmt.mantissa_bits
    if msb >= m:
        frac = (mag >> (msb - m)) & fmt.frac_mask
    else:
        frac = (mag << (m - msb)) & fmt.frac_mask
    return decode(pack(fmt, sign, msb - x.frac_bits, frac), fmt)
