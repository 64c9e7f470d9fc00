"""Adder, multiplier, shifters, max and compare-and-swap on :class:`FpValue`.

Thin typed wrappers over the scalar kernels in ``fpforge._core``; results are
bit-exact for any supported format width.
"""

from __future__ import annotations

import enum

from . import _core
from .formats import FpValue, decode

__all__ = [
    "Ordering",
    "fp_add",
    "fp_sub",
    "fp_mul",
    "fp_neg",
    "fp_rsh",
    "fp_lsh",
    "fp_max",
    "fp_compare",
    "cmp_and_swap",
]


class Ordering(enum.Enum):
    LT = _core.LT
    EQ = _core.EQ
    GT = _core.GT
    UNORDERED = _core.UNORDERED


def _check(x: FpValue, y: FpValue) -> None:
    if x.format != y.format:
        raise ValueError(f"format mismatch: {x.format} vs {y.format}")


def _mer(x: FpValue):
    f = x.format
    return f.mantissa_bits, f.exp_bits, f.bias


def fp_add(x: FpValue, y: FpValue) -> FpValue:
    _check(x, y)
    return decode(_core.add_bits(x.bits, y.bits, *_mer(x)), x.format)


def fp_sub(x: FpValue, y: FpValue) -> FpValue:
    _check(x, y)
    return decode(_core.sub_bits(x.bits, y.bits, *_mer(x)), x.format)


def fp_mul(x: FpValue, y: FpValue) -> FpValue:
    _check(x, y)
    return decode(_core.mul_bits(x.bits, y.bits, *_mer(x)), x.format)


def fp_neg(x: FpValue) -> FpValue:
    f = x.format
    return decode(_core.neg_bits(x.bits, f.mantissa_bits, f.exp_bits), f)


def fp_rsh(x: FpValue, n: int) -> FpValue:
    """Divide by ``2^n`` via the exponent."""
    if n < 0:
        raise ValueError("shift amount must be >= 0")
    return decode(_core.rsh_bits(x.bits, n, *_mer(x)), x.format)


def fp_lsh(x: FpValue, n: int) -> FpValue:
    """Multiply by ``2^n`` via the exponent."""
    if n < 0:
        raise ValueError("shift amount must be >= 0")
    return decode(_core.lsh_bits(x.bits, n, *_mer(x)), x.format)


def fp_compare(x: FpValue, y: FpValue) -> Ordering:
    _check(x, y)
    f = x.format
    return Ordering(_core.compare_bits(x.bits, y.bits, f.mantissa_bits, f.exp_bits))


def fp_max(x: FpValue, y: FpValue) -> FpValue:
    """Larger operand; a NaN operand yields the other one."""
    _check(x, y)
    f = x.format
    return decode(_core.max_bits(x.bits, y.bits, f.mantissa_bits, f.exp_bits), f)


def cmp_and_swap(a: FpValue, b: FpValue) -> tuple[FpValue, FpValue]:
    """``(min, max)``; equal or unordered inputs come back as ``(a, b)``."""
    _check(a, b)
    if fp_compare(a, b) is Ordering.GT:
        return b, a
    return a, b
