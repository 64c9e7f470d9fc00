"""Array arithmetic on packed patterns with a selectable execution backend.

``numba``
    ``_core`` loaded a second time and every kernel wrapped in ``numba.njit``.
``numpy``
    the vectorised twin in ``_vector``.

Select with the ``FPFORGE_BACKEND`` environment variable or :func:`set_backend`.
Both produce identical bits.  Formats wider than the int64 kernels allow
(mantissa > 28 or exponent > 11 bits) always run the plain-Python core on
object arrays.
"""

from __future__ import annotations

import contextlib
import importlib.util
import os
import sys
import warnings

import numpy as np

from . import _core, _vector
from .formats import FloatFormat
from .polyapprox import DEFAULT_UNITS, FunctionUnits

__all__ = [
    "BACKENDS",
    "ArrayArith",
    "get_backend",
    "set_backend",
    "use_backend",
    "numba_available",
    "jit_core",
    "fits_int64",
]

BACKENDS = ("numba", "numpy")
ENV_VAR = "FPFORGE_BACKEND"

_jit_module = None


def numba_available() -> bool:
    return importlib.util.find_spec("numba") is not None


def jit_core():
    """The JIT-compiled twin of ``_core`` (built on first use)."""
    global _jit_module
    if _jit_module is None:
        import numba

        spec = importlib.util.spec_from_file_location("fpforge._core_jit", _core.__file__)
        mod = importlib.util.module_from_spec(spec)
        sys.modules[spec.name] = mod
        spec.loader.exec_module(mod)
        # rebinding module globals makes kernels call each other's compiled forms
        for name in mod.KERNELS:
            setattr(mod, name, numba.njit(cache=True, nogil=True)(getattr(mod, name)))
        _jit_module = mod
    return _jit_module


def _initial_backend() -> str:
    name = os.environ.get(ENV_VAR, "").strip().lower()
    if not name:
        return "numba" if numba_available() else "numpy"
    if name not in BACKENDS:
        raise ValueError(f"{ENV_VAR}={name!r}; expected one of {BACKENDS}")
    if name == "numba" and not numba_available():
        warnings.warn("numba is not installed; falling back to the numpy backend", stacklevel=2)
        return "numpy"
    return name


_backend = _initial_backend()


def get_backend() -> str:
    return _backend


def set_backend(name: str) -> None:
    global _backend
    if name not in BACKENDS:
        raise ValueError(f"unknown backend {name!r}; expected one of {BACKENDS}")
    if name == "numba" and not numba_available():
        raise RuntimeError("numba is not installed")
    _backend = name


@contextlib.contextmanager
def use_backend(name: str):
    prev = get_backend()
    set_backend(name)
    try:
        yield
    finally:
        set_backend(prev)


def fits_int64(fmt: FloatFormat) -> bool:
    """True when every intermediate of the kernels fits a signed 64-bit word."""
    return fmt.mantissa_bits <= 28 and fmt.exp_bits <= 11


class ArrayArith:
    """Elementwise operators over arrays of bit patterns in one format.

    Inputs broadcast against each other; python ints broadcast as constants.
    Results are int64 arrays, or object arrays for wide formats.
    """

    def __init__(self, fmt: FloatFormat, units: FunctionUnits = DEFAULT_UNITS, backend: str | None = None):
        self.fmt = fmt
        self.units = units
        self._backend = backend
        self.wide = not fits_int64(fmt)
        self.dtype = object if self.wide else np.int64
        self.m, self.e, self.bias = fmt.mantissa_bits, fmt.exp_bits, fmt.bias

    @property
    def backend(self) -> str:
        if self.wide:
            return "python"
        return self._backend or get_backend()

    # -- plumbing ----------------------------------------------------------

    def asarray(self, a):
        return np.asarray(a, dtype=self.dtype)

    def _prep(self, *arrays):
        arrs = np.broadcast_arrays(*[self.asarray(a) for a in arrays])
        shape = arrs[0].shape
        return shape, [np.ascontiguousarray(a).reshape(-1) for a in arrs]

    def _loop(self, name, arrays, extra):
        """Run ``name``_arr from the core selected for this format/backend."""
        shape, flat = self._prep(*arrays)
        out = np.empty(flat[0].shape[0], dtype=self.dtype)
        core = _core if self.wide else jit_core()
        getattr(core, name + "_arr")(*flat, out, *extra)
        return out.reshape(shape)

    def _dispatch(self, name, arrays, extra, vector_fn):
        if self.wide or self.backend == "numba":
            return self._loop(name, arrays, extra)
        shape, flat = self._prep(*arrays)
        return vector_fn(*flat).reshape(shape)

    # -- conversion --------------------------------------------------------

    def const(self, value: float) -> int:
        return int(_core.from_float(float(value), self.m, self.e, self.bias))

    def from_float(self, x):
        x = np.asarray(x, dtype=np.float64)
        shape = x.shape
        flat = np.ascontiguousarray(x).reshape(-1)
        if self.wide:
            out = np.empty(flat.shape[0], dtype=object)
            _core.from_float_arr(flat, out, self.m, self.e, self.bias)
        elif self.backend == "numba":
            out = np.empty(flat.shape[0], dtype=np.int64)
            jit_core().from_float_arr(flat, out, self.m, self.e, self.bias)
        else:
            out = _vector.from_float(flat, self.m, self.e, self.bias)
        return out.reshape(shape)

    def to_float(self, a):
        shape, (flat,) = self._prep(a)
        if self.wide:
            out = np.empty(flat.shape[0], dtype=np.float64)
            _core.to_float_arr(flat, out, self.m, self.e, self.bias)
        elif self.backend == "numba":
            out = np.empty(flat.shape[0], dtype=np.float64)
            jit_core().to_float_arr(flat, out, self.m, self.e, self.bias)
        else:
            out = _vector.to_float(flat, self.m, self.e, self.bias)
        return out.reshape(shape)

    # -- operators ---------------------------------------------------------

    def neg(self, a):
        m, e = self.m, self.e
        return self._dispatch("neg", [a], (m, e), lambda x: _vector.neg(x, m, e))

    def add(self, a, b):
        m, e, bias = self.m, self.e, self.bias
        return self._dispatch("add", [a, b], (m, e, bias), lambda x, y: _vector.add(x, y, m, e, bias))

    def sub(self, a, b):
        m, e, bias = self.m, self.e, self.bias
        return self._dispatch("sub", [a, b], (m, e, bias), lambda x, y: _vector.sub(x, y, m, e, bias))

    def mul(self, a, b):
        m, e, bias = self.m, self.e, self.bias
        return self._dispatch("mul", [a, b], (m, e, bias), lambda x, y: _vector.mul(x, y, m, e, bias))

    def rsh(self, a, n: int):
        m, e, bias = self.m, self.e, self.bias
        shape, (flat,) = self._prep(a)
        if self.wide or self.backend == "numba":
            out = np.empty(flat.shape[0], dtype=self.dtype)
            (_core if self.wide else jit_core()).rsh_arr(flat, n, out, m, e, bias)
        else:
            out = _vector.rsh(flat, n, m, e, bias)
        return out.reshape(shape)

    def lsh(self, a, n: int):
        m, e, bias = self.m, self.e, self.bias
        shape, (flat,) = self._prep(a)
        if self.wide or self.backend == "numba":
            out = np.empty(flat.shape[0], dtype=self.dtype)
            (_core if self.wide else jit_core()).lsh_arr(flat, n, out, m, e, bias)
        else:
            out = _vector.lsh(flat, n, m, e, bias)
        return out.reshape(shape)

    def max(self, a, b):
        m, e = self.m, self.e
        return self._dispatch("max", [a, b], (m, e), lambda x, y: _vector.maximum(x, y, m, e))

    def compare(self, a, b):
        m, e = self.m, self.e
        shape, (x, y) = self._prep(a, b)
        if self.wide or self.backend == "numba":
            out = np.empty(x.shape[0], dtype=np.int64)
            (_core if self.wide else jit_core()).compare_arr(x, y, out, m, e)
        else:
            out = _vector.compare(x, y, m, e)
        return out.reshape(shape)

    def cas(self, a, b):
        """``(min, max)`` pairs; equal or unordered lanes pass through."""
        m, e = self.m, self.e
        shape, (x, y) = self._prep(a, b)
        if self.wide or self.backend == "numba":
            lo = np.empty(x.shape[0], dtype=self.dtype)
            hi = np.empty(x.shape[0], dtype=self.dtype)
            (_core if self.wide else jit_core()).cas_arr(x, y, lo, hi, m, e)
        else:
            lo, hi = _vector.cas(x, y, m, e)
        return lo.reshape(shape), hi.reshape(shape)

    def div(self, a, b):
        m, e, bias = self.m, self.e, self.bias
        t = self.units.recip
        extra = (m, e, bias, t.coeffs, t.xi, t.xf)
        return self._dispatch("div", [a, b], extra, lambda x, y: _vector.div(x, y, *extra))

    def log2(self, a):
        m, e, bias = self.m, self.e, self.bias
        t = self.units.log2
        extra = (m, e, bias, t.coeffs, t.xi, t.xf)
        return self._dispatch("log2", [a], extra, lambda x: _vector.log2(x, *extra))

    def exp2(self, a):
        m, e, bias = self.m, self.e, self.bias
        g, r = self.units.exp2, self.units.recip
        extra = (m, e, bias, g.coeffs, g.xi, g.xf, r.coeffs, r.xi, r.xf, self.units.exp2_mode)
        return self._dispatch("exp2", [a], extra, lambda x: _vector.exp2(x, *extra))

    def sqrt(self, a):
        m, e, bias = self.m, self.e, self.bias
        t = self.units.sqrt
        extra = (m, e, bias, t.coeffs, t.xi, t.xf)
        return self._dispatch("sqrt", [a], extra, lambda x: _vector.sqrt(x, *extra))
