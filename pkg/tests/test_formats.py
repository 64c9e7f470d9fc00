import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fpforge.formats import (
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


def test_widths_and_bias():
    assert FLOAT16.width == 16 and FLOAT16.bias == 15
    assert FLOAT64.width == 64
    assert FloatFormat(23, 8).bias == 127


def test_parse_format():
    assert parse_format("float16(10,5)") == FLOAT16
    assert parse_format("float32(23, 8)") == FLOAT32
    with pytest.raises(ValueError):
        parse_format("float17(10,5)")
    with pytest.raises(ValueError):
        parse_format("half")


def test_encode_anchors():
    assert encode(from_real(6.75, FLOAT16)) == 0x46C0
    assert from_real(6.75, FLOAT16).hex() == "46c0"
    assert encode(from_real(0.0, FLOAT16)) == 0
    assert encode(from_real(1.0, FLOAT16)) == 0x3C00


def test_decode_anchors():
    assert float(decode(0x46C0, FLOAT16)) == 6.75
    assert float(decode(0x3C00, FLOAT16)) == 1.0
    assert decode(0x7C00, FLOAT16).cls is FpClass.INF
    assert decode(0x7C01, FLOAT16).cls is FpClass.NAN


def test_from_real_fields():
    v = from_real(6.75, FLOAT16)
    assert (v.fraction, v.biased_exp) == (704, 17)
    assert from_real(0.0, FLOAT16).cls is FpClass.ZERO
    assert from_real(1 / 3, FLOAT16).fraction == 341


def test_from_real_saturation_and_flush():
    assert from_real(1e6, FLOAT16).is_inf
    assert from_real(-1e6, FLOAT16).sign == 1
    assert from_real(1e-9, FLOAT16).is_zero
    assert from_real(math.nan, FLOAT16).is_nan


def test_roundtrip_all_float16_patterns():
    for bits in range(1 << 16):
        assert encode(decode(bits, FLOAT16)) == bits


@given(st.floats(min_value=-60000, max_value=60000, allow_nan=False))
def test_truncation_bound(x):
    v = from_real(x, FLOAT16)
    if v.is_zero:
        assert abs(x) < 2.0 ** FLOAT16.min_exp
        return
    ulp = 2.0 ** (v.exponent - FLOAT16.mantissa_bits)
    assert abs(float(v)) <= abs(x)
    assert abs(float(v) - x) < ulp


@given(st.floats(min_value=1e-4, max_value=6e4), st.floats(min_value=1e-4, max_value=6e4))
def test_from_real_monotone(x, y):
    lo, hi = sorted((x, y))
    assert float(from_real(lo, FLOAT16)) <= float(from_real(hi, FLOAT16))


@settings(max_examples=200)
@given(st.integers(1, 15), st.integers(1, 53), st.data())
def test_roundtrip_any_format(e, m, data):
    fmt = FloatFormat(m, e)
    bits = data.draw(st.integers(0, (1 << fmt.width) - 1))
    assert encode(decode(bits, fmt)) == bits


def test_chi_examples():
    assert float_to_fixed(from_real(1.5, FLOAT16), 4, 8).raw == 384
    x = float_to_fixed(from_real(-2.25, FLOAT16), 4, 4)
    assert x.raw == -36
    assert x.pattern == (1 << 9) - 36
    assert float_to_fixed(from_real(0.0, FLOAT16), 4, 4).raw == 0
    with pytest.raises(ConversionError, match="unconvertible class"):
        float_to_fixed(decode(0x7C00, FLOAT16), 4, 4)


def test_chi_saturates():
    assert float_to_fixed(from_real(1000.0, FLOAT16), 2, 2).raw == FixedValue.limits(2, 2)[1]
    assert float_to_fixed(from_real(-1000.0, FLOAT16), 2, 2).raw == FixedValue.limits(2, 2)[0]


def test_chi_inverse_examples():
    assert float(fixed_to_float(FixedValue(4, 8, 384), FLOAT16)) == 1.5
    assert fixed_to_float(FixedValue(4, 8, 0), FLOAT16).is_zero
    v = fixed_to_float(FixedValue(4, 0, 3), FLOAT16)
    assert (v.exponent, v.fraction) == (1, 512)


def test_twos_complement_negation():
    x = FixedValue(4, 4, 36)
    neg = FixedValue.from_pattern((1 << x.width) - x.pattern, 4, 4)
    assert neg.raw == -36


@given(st.integers(-(1 << 12), (1 << 12) - 1))
def test_chi_roundtrip_exact(raw):
    # 13 significant bits fit float32's mantissa, so the round trip is exact
    x = FixedValue(8, 4, raw)
    back = float_to_fixed(fixed_to_float(x, FLOAT32), 8, 4)
    assert back.raw == raw
    assert Fraction(back.raw, 16) == x.value
