import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fpforge.arith import fp_lsh
from fpforge.formats import FLOAT16, decode, from_real
from fpforge.polyapprox import (
    DEFAULT_UNITS,
    DOMAINS,
    EXP2_TABLE,
    LOG2_TABLE,
    RECIP_TABLE,
    SQRT_TABLE,
    TRUE_FUNCTIONS,
    DomainError,
    FitError,
    FunctionUnits,
    PiecewisePoly,
    fit_coefficients,
    fp_div,
    fp_exp2,
    fp_log2,
    fp_reciprocal_mantissa,
    fp_sqrt,
    poly_eval,
    segment_from_msbs,
)


def f(x):
    return from_real(x, FLOAT16)


@pytest.mark.parametrize(
    "table,x,expected",
    [
        (RECIP_TABLE, 0.0, 0.99947),
        (RECIP_TABLE, 0.25, 0.799765),
        (LOG2_TABLE, 0.25, 0.3253),
        (EXP2_TABLE, 0.0, 1.0004),
        (EXP2_TABLE, -1.0, 0.5002),
        (SQRT_TABLE, 1.0, 1.00068),
        (SQRT_TABLE, 2.0, 1.41415),  # 2.0 lies in segment 1: [1.75, 2.5)
        (SQRT_TABLE, np.nextafter(4.0, 0), 2.0),
    ],
)
def test_anchor_values(table, x, expected):
    assert abs(poly_eval(table, x) - expected) < 1e-4


def test_tables_shape():
    for t in (RECIP_TABLE, LOG2_TABLE, EXP2_TABLE, SQRT_TABLE):
        assert (t.degree, t.segments, t.table_entries) == (2, 4, 12)


def test_domain_is_half_open():
    poly_eval(SQRT_TABLE, 1.0)
    with pytest.raises(DomainError):
        poly_eval(SQRT_TABLE, 4.0)
    with pytest.raises(DomainError):
        poly_eval(RECIP_TABLE, -0.1)


def test_segments_power_of_two():
    with pytest.raises(ValueError, match="power of two"):
        PiecewisePoly(np.ones((3, 3)), 0.0, 1.0)


def test_segment_selection_matches_msbs(rng):
    for t in (RECIP_TABLE, EXP2_TABLE, SQRT_TABLE):
        xs = rng.uniform(t.xi, t.xf, 100_000)
        ks = t.segment(xs)
        for x, k in zip(xs[:2000], ks[:2000]):
            assert segment_from_msbs(t, float(x)) == k
        assert np.all((ks >= 0) & (ks < t.segments))


def test_accuracy_envelope():
    for name, t in DEFAULT_UNITS.tables().items():
        assert t.max_error(TRUE_FUNCTIONS[name]) < 1e-2


def test_fit_reproduces_builtin():
    for name, t in DEFAULT_UNITS.tables().items():
        fit = fit_coefficients(TRUE_FUNCTIONS[name], DOMAINS[name], 2, 4, name=name)
        assert fit.max_error(TRUE_FUNCTIONS[name]) <= 2 * t.max_error(TRUE_FUNCTIONS[name])


def test_fit_examples():
    fit = fit_coefficients(TRUE_FUNCTIONS["recip"], (0.0, 1.0), 2, 4)
    x = np.linspace(0, 1, 10_000, endpoint=False)
    assert np.max(np.abs(fit(x) - RECIP_TABLE(x))) < 5e-3
    ident = fit_coefficients(lambda x: x, (0.0, 1.0), 1, 1)
    assert np.allclose(ident.coeffs, [[1.0, 0.0]], atol=1e-12)
    sq = fit_coefficients(np.sqrt, (1.0, 4.0), 2, 4)
    assert sq.max_error(np.sqrt) < 2e-3


def test_fit_errors():
    with pytest.raises(FitError, match="power of two"):
        fit_coefficients(np.sqrt, (1.0, 4.0), 2, 3)
    with pytest.raises(FitError):
        fit_coefficients(np.sqrt, (1.0, 4.0), 0, 4)
    with pytest.raises(FitError, match="non-finite"):
        fit_coefficients(np.log, (0.0, 1.0), 2, 4)


def test_csv_roundtrip(tmp_path):
    p = tmp_path / "t.csv"
    SQRT_TABLE.save(p)
    assert p.read_text().splitlines()[0].startswith("degree,2,segments,4")
    assert PiecewisePoly.load(p) == SQRT_TABLE


def test_div_examples():
    assert abs(fp_reciprocal_mantissa(0.0) - 0.99947) < 1e-9
    r = float(fp_div(f(1.0), f(2.0)))
    assert abs(r - 0.49974) < 2 ** -10
    assert float(fp_div(f(3.0), f(1.0))) <= 3.0
    assert fp_div(f(5.0), f(0.0)).is_inf
    assert fp_div(f(0.0), f(0.0)).is_nan
    inf = decode(0x7C00, FLOAT16)
    assert fp_div(inf, inf).is_nan
    assert fp_div(f(7.0), inf).is_zero


def test_log2_examples():
    assert abs(float(fp_log2(f(1.0))) - 0.00028) < 1e-5
    assert fp_log2(f(-3.0)).is_nan
    assert abs(float(fp_log2(f(2.0))) - 1.00028) < 2e-3
    z = fp_log2(f(0.0))
    assert z.is_inf and z.sign == 1
    assert fp_log2(decode(0x7C00, FLOAT16)).is_inf


def test_exp2_examples():
    assert abs(float(fp_exp2(f(0.0))) - 1.0004) < 1e-3
    assert abs(float(fp_exp2(f(3.0))) - 8.0032) < 8e-3
    assert fp_exp2(f(40.0)).is_inf
    assert fp_exp2(f(-40.0)).is_zero
    mirror = FunctionUnits(exp2_negative="mirror")
    for x in (-1.0, -2.5, -0.3):
        for units in (DEFAULT_UNITS, mirror):
            assert abs(float(fp_exp2(f(x), units)) / 2 ** float(f(x)) - 1) < 1e-2


def test_sqrt_examples():
    assert abs(float(fp_sqrt(f(1.0))) - 1.00068) < 1e-3
    assert fp_sqrt(f(-1.0)).is_nan
    assert abs(float(fp_sqrt(f(4.0))) - 2.00136) < 2e-3
    assert abs(float(fp_sqrt(f(2.0))) - 1.41415) < 1e-3
    assert fp_sqrt(decode(0x7E00, FLOAT16)).is_nan


normal16 = st.floats(min_value=2.0 ** -12, max_value=2.0 ** 13).map(f)


@given(normal16)
def test_sqrt_scaling(x):
    a, b = fp_sqrt(fp_lsh(x, 2)), fp_lsh(fp_sqrt(x), 1)
    assert abs(a.bits - b.bits) <= 1


def test_relative_error_sweep(rng):
    xs = [f(v) for v in rng.uniform(0.01, 1000.0, 10_000)]
    ys = [f(v) for v in rng.uniform(0.01, 1000.0, 10_000)]
    for x, y in zip(xs, ys):
        fx, fy = float(x), float(y)
        assert abs(float(fp_div(x, y)) / (fx / fy) - 1) < 1e-2
        assert abs(float(fp_sqrt(x)) / math.sqrt(fx) - 1) < 1e-2
    for x in xs:
        e = float(f(float(x) / 100.0))
        if abs(e) < 2 ** -10:
            continue
        assert abs(float(fp_exp2(f(e))) / 2 ** e - 1) < 1e-2
    for x in xs:
        fx = float(x)
        # relative error near log2(x) = 0 is unbounded; use results of normal size
        if abs(math.log2(fx)) >= 0.5:
            assert abs(float(fp_log2(x)) / math.log2(fx) - 1) < 1e-2


def test_quantized_units_keep_envelope():
    q = FunctionUnits(quantize=FLOAT16)
    for name, t in q.tables().items():
        assert t.max_error(TRUE_FUNCTIONS[name]) < 1e-2
