import numpy as np
import pytest

from fpforge import _core
from fpforge.formats import FLOAT16, FLOAT32, FLOAT64, FloatFormat, from_real
from fpforge.kernels import ArrayArith, fits_int64, get_backend, numba_available, set_backend, use_backend
from fpforge.polyapprox import FunctionUnits

ALL16 = np.arange(1 << 16, dtype=np.int64)


def scalar_reference(op, a, b=None):
    fmt = FLOAT16
    m, e, bias = fmt.mantissa_bits, fmt.exp_bits, fmt.bias
    return np.array([getattr(_core, op)(int(x), int(y), m, e, bias) for x, y in zip(a, b)])


def test_backend_switch():
    prev = get_backend()
    with use_backend("numpy"):
        assert get_backend() == "numpy"
    assert get_backend() == prev
    with pytest.raises(ValueError):
        set_backend("cuda")


def test_fits_int64():
    assert fits_int64(FLOAT16) and fits_int64(FLOAT32)
    assert not fits_int64(FLOAT64)


@pytest.mark.parametrize("op", ["neg", "sqrt", "log2", "exp2"])
def test_unary_backends_agree_exhaustively(op):
    outs = {}
    for be in ["numpy"] + (["numba"] if numba_available() else []):
        outs[be] = getattr(ArrayArith(FLOAT16, backend=be), op)(ALL16)
    m, e, bias = 10, 5, 15
    sample = ALL16[::97]
    u = ArrayArith(FLOAT16).units
    ref = []
    for x in sample:
        if op == "neg":
            ref.append(_core.neg_bits(int(x), m, e))
        elif op == "sqrt":
            ref.append(_core.sqrt_bits(int(x), m, e, bias, u.sqrt.coeffs, u.sqrt.xi, u.sqrt.xf))
        elif op == "log2":
            ref.append(_core.log2_bits(int(x), m, e, bias, u.log2.coeffs, u.log2.xi, u.log2.xf))
        else:
            ref.append(_core.exp2_bits(int(x), m, e, bias, u.exp2.coeffs, u.exp2.xi, u.exp2.xf,
                                       u.recip.coeffs, u.recip.xi, u.recip.xf, u.exp2_mode))
    for v in outs.values():
        assert np.array_equal(v, outs["numpy"])
        assert np.array_equal(v[::97], np.array(ref))


@pytest.mark.parametrize("op", ["add", "sub", "mul", "div", "max", "compare"])
def test_binary_backends_agree(op, rng):
    a = rng.integers(0, 1 << 16, 200_000)
    b = rng.integers(0, 1 << 16, 200_000)
    outs = [getattr(ArrayArith(FLOAT16, backend="numpy"), op)(a, b)]
    if numba_available():
        outs.append(getattr(ArrayArith(FLOAT16, backend="numba"), op)(a, b))
    assert all(np.array_equal(o, outs[0]) for o in outs)
    if op in ("add", "sub", "mul"):
        ref = scalar_reference(op + "_bits", a[:3000], b[:3000])
        assert np.array_equal(outs[0][:3000], ref)


def test_cas_and_shifts_agree(rng):
    a = rng.integers(0, 1 << 16, 50_000)
    b = rng.integers(0, 1 << 16, 50_000)
    res = []
    for be in ["numpy"] + (["numba"] if numba_available() else []):
        x = ArrayArith(FLOAT16, backend=be)
        res.append((*x.cas(a, b), x.rsh(a, 3), x.lsh(a, 2)))
    for r in res[1:]:
        assert all(np.array_equal(p, q) for p, q in zip(r, res[0]))


def test_exp2_mirror_mode_agrees():
    units = FunctionUnits(exp2_negative="mirror")
    outs = [ArrayArith(FLOAT16, units, backend="numpy").exp2(ALL16)]
    if numba_available():
        outs.append(ArrayArith(FLOAT16, units, backend="numba").exp2(ALL16))
    assert all(np.array_equal(o, outs[0]) for o in outs)


def test_conversion(backend):
    a = ArrayArith(FLOAT16)
    x = np.array([6.75, 1.0, 0.0, 1 / 3, 1e6, -2.5])
    bits = a.from_float(x)
    assert list(bits) == [from_real(v, FLOAT16).bits for v in x]
    assert np.array_equal(a.to_float(bits)[:3], [6.75, 1.0, 0.0])


def test_broadcast_constant(backend):
    a = ArrayArith(FLOAT16)
    x = a.from_float(np.array([[1.0, 2.0], [3.0, 4.0]]))
    y = a.mul(x, a.const(0.5))
    assert y.shape == (2, 2)
    assert np.array_equal(a.to_float(y), [[0.5, 1.0], [1.5, 2.0]])


def test_wide_format_uses_python_core():
    a = ArrayArith(FLOAT64)
    assert a.backend == "python" and a.dtype == object
    x = a.from_float(np.array([1.5, 2.25]))
    assert list(a.to_float(a.add(x, x))) == [3.0, 4.5]
    y = ArrayArith(FloatFormat(40, 11))
    assert list(y.to_float(y.mul(y.from_float([3.0]), y.from_float([0.5])))) == [1.5]
