"""Custom floating-point dataflow toolchain: arithmetic models, a filter DSL
compiler, netlist emission and a cycle-level stream simulator."""

from .formats import (
    FLOAT16,
    FLOAT32,
    FLOAT64,
    ConversionError,
    FixedValue,
    FloatFormat,
    FpClass,
    FpValue,
    decode,
    encode,
    fixed_to_float,
    float_to_fixed,
    from_real,
    parse_format,
)

__version__ = "0.1.0"
