"""The corpus filters and their untimed software oracles.

Oracles take and return images of bit patterns in one format.  Each one is
written directly from the filter's formula, independently of the DSL
programs, and follows the same operand and reduction order as the hardware
(the adder tree for convolutions, the ``min / max`` quotient for the
nonlinear filter), because truncating arithmetic is not associative.

Two evaluation modes give the same bits: ``per_pixel=True`` walks pixels one
by one over :func:`~fpforge.sim.window_reference` with the scalar
:mod:`fpforge.arith` / :mod:`fpforge.polyapprox` operators, the default
vectorises over all windows with :class:`~fpforge.kernels.ArrayArith`.
"""

from __future__ import annotations

import os
from importlib import resources
from pathlib import Path

import numpy as np

from . import arith as _arith
from . import polyapprox as _poly
from .dfg import tree_reduce
from .formats import FLOAT16, FloatFormat, decode, from_real
from .kernels import ArrayArith
from .polyapprox import DEFAULT_UNITS, FunctionUnits
from .sim import WindowSpec, window_reference, window_stack

__all__ = [
    "CORPUS",
    "FILTERS",
    "BOX_KERNELS",
    "SOBEL_KX",
    "SOBEL_KY",
    "corpus_dir",
    "corpus_path",
    "load_kernel",
    "oracle_conv",
    "oracle_sobel",
    "oracle_median",
    "oracle_nlfilter",
    "oracle_for",
]

CORPUS = ("fp_func", "conv3x3", "conv5x5", "sobel", "median", "nlfilter")
FILTERS = ("conv3x3", "conv5x5", "sobel", "median", "nlfilter")
ENV_VAR = "FPFORGE_CORPUS"

BOX_KERNELS = {
    "conv3x3": np.full((3, 3), 0.11111),
    "conv5x5": np.full((5, 5), 0.04),
}
SOBEL_KX = np.array([[1, 0, -1], [2, 0, -2], [1, 0, -1]], dtype=float)
SOBEL_KY = np.array([[1, 2, 1], [0, 0, 0], [-1, -2, -1]], dtype=float)

# nlfilter constants
_GUARD = 1.0
_EXP_SCALE = 0.0313


def corpus_dir() -> Path:
    env = os.environ.get(ENV_VAR)
    if env:
        return Path(env)
    return Path(str(resources.files("fpforge") / "corpus"))


def corpus_path(name: str) -> Path:
    p = corpus_dir() / (name if name.endswith(".dsl") else name + ".dsl")
    if not p.exists():
        raise FileNotFoundError(f"no corpus program {name!r} in {corpus_dir()}")
    return p


def load_kernel(path) -> np.ndarray:
    """Whitespace-separated matrix, one row per line; ``#`` starts a comment."""
    rows = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            rows.append([float(x) for x in line.replace(",", " ").split()])
    if not rows or len({len(r) for r in rows}) != 1:
        raise ValueError(f"{path}: kernel rows must be non-empty and of equal length")
    k = np.array(rows)
    if k.shape[0] % 2 == 0 or k.shape[1] % 2 == 0:
        raise ValueError(f"{path}: kernel dimensions must be odd, got {k.shape[0]}x{k.shape[1]}")
    return k


# --------------------------------------------------------------------------
# operator sets: scalar (FpValue) and vectorised (pattern arrays)


class _ScalarOps:
    def __init__(self, fmt: FloatFormat, units: FunctionUnits):
        self.fmt, self.units = fmt, units

    def const(self, x: float):
        return from_real(x, self.fmt)

    def wrap(self, bits):
        return decode(int(bits), self.fmt)

    def add(self, a, b):
        return _arith.fp_add(a, b)

    def mul(self, a, b):
        return _arith.fp_mul(a, b)

    def max(self, a, b):
        return _arith.fp_max(a, b)

    def cas(self, a, b):
        return _arith.cmp_and_swap(a, b)

    def rsh(self, a, n):
        return _arith.fp_rsh(a, n)

    def lsh(self, a, n):
        return _arith.fp_lsh(a, n)

    def div(self, a, b):
        return _poly.fp_div(a, b, self.units)

    def sqrt(self, a):
        return _poly.fp_sqrt(a, self.units)

    def log2(self, a):
        return _poly.fp_log2(a, self.units)

    def exp2(self, a):
        return _poly.fp_exp2(a, self.units)

    def median5(self, vals):
        return sorted(vals, key=float)[2]


class _ArrayOps:
    def __init__(self, fmt: FloatFormat, units: FunctionUnits):
        self.a = ArrayArith(fmt, units)

    def const(self, x: float):
        return self.a.const(x)

    def __getattr__(self, name):
        return getattr(self.a, name)

    def median5(self, vals):
        stack = np.stack(vals, axis=-1)
        order = np.argsort(self.a.to_float(stack), axis=-1, kind="stable")
        return np.take_along_axis(stack, order[..., 2:3], axis=-1)[..., 0]


def _apply(image, ws: WindowSpec, fn, fmt: FloatFormat, units: FunctionUnits, per_pixel: bool):
    """Run ``fn(ops, taps)`` over every window; ``taps`` is row-major."""
    image = np.asarray(image)
    fill = from_real(ws.border.value, fmt).bits
    if per_pixel:
        ops = _ScalarOps(fmt, units)
        h, w = image.shape
        out = np.empty((h, w), dtype=np.int64 if fmt.width <= 62 else object)
        for r in range(h):
            for c in range(w):
                win = window_reference(image, ws, r, c, fill=fill)
                out[r, c] = fn(ops, [ops.wrap(v) for v in win.reshape(-1)]).bits
        return out
    ops = _ArrayOps(fmt, units)
    stack = window_stack(ops.a.asarray(image), ws, fill=fill)
    return ops.a.asarray(fn(ops, [stack[..., k] for k in range(stack.shape[-1])]))


def _dot(ops, taps, K):
    k = np.asarray(K, dtype=np.float64).reshape(-1)
    prods = [ops.mul(t, ops.const(c)) for t, c in zip(taps, k)]
    return tree_reduce(prods, ops.add)


# --------------------------------------------------------------------------
# oracles


def oracle_conv(image, K, ws: WindowSpec | None = None, fmt: FloatFormat = FLOAT16,
                units: FunctionUnits = DEFAULT_UNITS, per_pixel: bool = False):
    """Windowed dot product with ``K`` in adder-tree order."""
    K = np.asarray(K, dtype=np.float64)
    if K.ndim != 2 or K.shape[0] % 2 == 0 or K.shape[1] % 2 == 0:
        raise ValueError(f"kernel dimensions must be odd, got {K.shape}")
    ws = ws or WindowSpec(*K.shape)
    if (ws.height, ws.width) != K.shape:
        raise ValueError("window spec and kernel dimensions differ")
    return _apply(image, ws, lambda ops, t: _dot(ops, t, K), fmt, units, per_pixel)


def oracle_sobel(image, ws: WindowSpec | None = None, fmt: FloatFormat = FLOAT16,
                 units: FunctionUnits = DEFAULT_UNITS, per_pixel: bool = False):
    """Gradient magnitude ``sqrt(gx^2 + gy^2)``."""

    def fn(ops, t):
        gx = _dot(ops, t, SOBEL_KX)
        gy = _dot(ops, t, SOBEL_KY)
        return ops.sqrt(ops.add(ops.mul(gx, gx), ops.mul(gy, gy)))

    return _apply(image, ws or WindowSpec(3, 3), fn, fmt, units, per_pixel)


_CROSS = (1, 3, 4, 5, 7)
_DIAG = (0, 2, 4, 6, 8)


def oracle_median(image, ws: WindowSpec | None = None, fmt: FloatFormat = FLOAT16,
                  units: FunctionUnits = DEFAULT_UNITS, per_pixel: bool = False):
    """Mean of the medians of the cross and diagonal five-pixel sets."""

    def fn(ops, t):
        mc = ops.median5([t[k] for k in _CROSS])
        md = ops.median5([t[k] for k in _DIAG])
        return ops.rsh(ops.add(mc, md), 1)

    return _apply(image, ws or WindowSpec(3, 3), fn, fmt, units, per_pixel)


def oracle_nlfilter(image, ws: WindowSpec | None = None, fmt: FloatFormat = FLOAT16,
                    units: FunctionUnits = DEFAULT_UNITS, per_pixel: bool = False):
    """``f_alpha * min(f_beta, f_delta) / max(f_beta, f_delta)``.

    f_alpha halves the sum of the corner geometric means, f_beta is eight
    times the summed log2 of the opposite edge products, f_delta is
    ``2 ** (0.0313 * centre)``; inputs are first raised to at least 1.
    """

    def fn(ops, t):
        one = ops.const(_GUARD)
        w = [ops.max(x, one) for x in t]
        f_alpha = ops.rsh(ops.add(ops.sqrt(ops.mul(w[0], w[2])), ops.sqrt(ops.mul(w[6], w[8]))), 1)
        f_beta = ops.lsh(ops.add(ops.log2(ops.mul(w[1], w[7])), ops.log2(ops.mul(w[3], w[5]))), 3)
        f_delta = ops.exp2(ops.mul(w[4], ops.const(_EXP_SCALE)))
        lo, hi = ops.cas(f_beta, f_delta)
        return ops.mul(f_alpha, ops.div(lo, hi))

    return _apply(image, ws or WindowSpec(3, 3), fn, fmt, units, per_pixel)


def oracle_for(name: str, kernel=None):
    """Oracle callable ``(image, ws, fmt, units, per_pixel)`` for a corpus filter."""
    if name in BOX_KERNELS:
        K = BOX_KERNELS[name] if kernel is None else np.asarray(kernel, dtype=np.float64)
        return lambda image, ws=None, fmt=FLOAT16, units=DEFAULT_UNITS, per_pixel=False: oracle_conv(
            image, K, ws, fmt, units, per_pixel
        )
    table = {"sobel": oracle_sobel, "median": oracle_median, "nlfilter": oracle_nlfilter}
    if name not in table:
        raise KeyError(f"no oracle for {name!r}; filters are {FILTERS}")
    return table[name]
