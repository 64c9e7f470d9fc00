"""Piecewise polynomial approximation and the function units built on it.

A :class:`PiecewisePoly` splits ``[xi, xf)`` into ``n`` equal segments and
stores one row of ``d+1`` coefficients per segment, highest power first.  The
polynomial is evaluated in ``x`` itself (not in the offset from the segment
start) with Horner's scheme in double precision.

The four function units (reciprocal, log2, exp2, sqrt) combine a table with
exponent bookkeeping; their bit-level semantics live in ``fpforge._core``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np

from . import _core
from .formats import FloatFormat, FpValue, decode, from_real

__all__ = [
    "DomainError",
    "FitError",
    "PiecewisePoly",
    "FunctionUnits",
    "RECIP_TABLE",
    "LOG2_TABLE",
    "EXP2_TABLE",
    "SQRT_TABLE",
    "DEFAULT_UNITS",
    "poly_eval",
    "segment_from_msbs",
    "fit_coefficients",
    "fp_reciprocal_mantissa",
    "fp_div",
    "fp_log2",
    "fp_exp2",
    "fp_sqrt",
    "TRUE_FUNCTIONS",
]


class DomainError(ValueError):
    """Argument outside the half-open domain of a table."""


class FitError(ValueError):
    """Coefficient fitting could not proceed."""


def _is_pow2(n: int) -> bool:
    return n >= 1 and n & (n - 1) == 0


@dataclass(frozen=True, eq=False)
class PiecewisePoly:
    coeffs: np.ndarray
    xi: float
    xf: float
    name: str = ""

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=np.float64, order="C")
        if c.ndim != 2 or c.shape[0] < 1 or c.shape[1] < 2:
            raise ValueError(f"coefficient matrix must be n x (d+1) with d >= 1, got {c.shape}")
        if not _is_pow2(c.shape[0]):
            raise ValueError("segments must be a power of two")
        if not self.xf > self.xi:
            raise ValueError(f"empty domain [{self.xi}, {self.xf})")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "xi", float(self.xi))
        object.__setattr__(self, "xf", float(self.xf))

    @property
    def degree(self) -> int:
        return self.coeffs.shape[1] - 1

    @property
    def segments(self) -> int:
        return self.coeffs.shape[0]

    @property
    def eta(self) -> float:
        return (self.xf - self.xi) / self.segments

    @property
    def table_entries(self) -> int:
        """Coefficients stored in the lookup table: n * (d + 1)."""
        return self.coeffs.size

    def __eq__(self, other):
        if not isinstance(other, PiecewisePoly):
            return NotImplemented
        return (self.xi, self.xf) == (other.xi, other.xf) and np.array_equal(self.coeffs, other.coeffs)

    def __hash__(self):
        return hash((self.xi, self.xf, self.coeffs.tobytes()))

    def _check(self, x):
        x = np.asarray(x, dtype=np.float64)
        bad = ~((x >= self.xi) & (x < self.xf))
        if np.any(bad):
            raise DomainError(f"{np.asarray(x)[bad].flat[0]!r} outside [{self.xi}, {self.xf})")
        return x

    def segment(self, x):
        """Segment index ``floor((x - xi) / eta)``."""
        x = self._check(x)
        k = np.floor((x - self.xi) / self.eta).astype(np.int64)
        k = np.clip(k, 0, self.segments - 1)
        return int(k) if k.ndim == 0 else k

    def __call__(self, x):
        x = self._check(x)
        if x.ndim == 0:
            return float(_core.poly_eval(self.coeffs, self.xi, self.xf, float(x)))
        from . import _vector

        return _vector.poly_eval(self.coeffs, self.xi, self.xf, x)

    def quantized(self, fmt: FloatFormat) -> "PiecewisePoly":
        """Copy with every coefficient truncated into ``fmt``."""
        q = np.vectorize(lambda v: float(from_real(v, fmt)))(self.coeffs)
        return replace(self, coeffs=q)

    def max_error(self, func: Callable, samples: int = 100_000) -> float:
        x = np.linspace(self.xi, self.xf, samples, endpoint=False)
        return float(np.max(np.abs(self(x) - func(x))))

    # CSV layout: header row, then one row of d+1 coefficients per segment
    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["degree", self.degree, "segments", self.segments, repr(self.xi), repr(self.xf)])
        for row in self.coeffs:
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, name: str = "") -> "PiecewisePoly":
        rows = [r for r in csv.reader(io.StringIO(text)) if r and any(cell.strip() for cell in r)]
        if not rows:
            raise ValueError("empty coefficient file")
        head = [cell.strip() for cell in rows[0]]
        if len(head) != 6 or head[0] != "degree" or head[2] != "segments":
            raise ValueError("header must be: degree,d,segments,n,xi,xf")
        d, n = int(head[1]), int(head[3])
        coeffs = np.array([[float(v) for v in r] for r in rows[1:]], dtype=np.float64)
        if coeffs.shape != (n, d + 1):
            raise ValueError(f"expected {n} rows of {d + 1} coefficients, got {coeffs.shape}")
        return cls(coeffs, float(head[4]), float(head[5]), name)

    def save(self, path) -> None:
        Path(path).write_text(self.to_csv())

    @classmethod
    def load(cls, path, name: str = "") -> "PiecewisePoly":
        return cls.from_csv(Path(path).read_text(), name)


RECIP_TABLE = PiecewisePoly(
    [[0.70986, -0.9735, 0.99947],
     [0.38742, -0.82214, 0.98109],
     [0.23424, -0.67285, 0.94441],
     [0.15228, -0.55171, 0.89948]],
    0.0, 1.0, "recip",
)
LOG2_TABLE = PiecewisePoly(
    [[-0.573, 1.42883, 0.00028],
     [-0.3829, 1.33815, 0.0147],
     [-0.27387, 1.2312, 0.03792],
     [-0.20558, 1.12988, 0.07564]],
    0.0, 1.0, "log2",
)
EXP2_TABLE = PiecewisePoly(
    [[0.14315, 0.62811, 0.98516],
     [0.20244, 0.68584, 0.9997],
     [0.28629, 0.68363, 1.0004],
     [0.40488, 0.56192, 1.0326]],
    -1.0, 1.0, "exp2",
)
SQRT_TABLE = PiecewisePoly(
    [[-0.07913, 0.64644, 0.43337],
     [-0.04069, 0.51676, 0.54339],
     [-0.02576, 0.44338, 0.63378],
     [-0.01816, 0.39451, 0.71252]],
    1.0, 4.0, "sqrt",
)

# what each table approximates, as functions of the table argument
TRUE_FUNCTIONS: dict[str, Callable] = {
    "recip": lambda x: 1.0 / (1.0 + x),
    "log2": lambda x: np.log2(1.0 + x),
    "exp2": lambda x: np.exp2(x),
    "sqrt": lambda x: np.sqrt(x),
}
DOMAINS = {"recip": (0.0, 1.0), "log2": (0.0, 1.0), "exp2": (-1.0, 1.0), "sqrt": (1.0, 4.0)}

EXP2_MODES = {"reciprocal": _core.EXP2_RECIPROCAL, "mirror": _core.EXP2_MIRROR}


@dataclass(frozen=True)
class FunctionUnits:
    """Tables and options shared by the division/log2/exp2/sqrt units.

    ``exp2_negative`` selects how ``2^-x`` is formed: ``"reciprocal"`` feeds
    the exp2 table output through the reciprocal unit, ``"mirror"`` evaluates
    the exp2 table at the negated fraction.
    """

    recip: PiecewisePoly = RECIP_TABLE
    log2: PiecewisePoly = LOG2_TABLE
    exp2: PiecewisePoly = EXP2_TABLE
    sqrt: PiecewisePoly = SQRT_TABLE
    exp2_negative: str = "reciprocal"
    quantize: FloatFormat | None = field(default=None)

    def __post_init__(self):
        if self.exp2_negative not in EXP2_MODES:
            raise ValueError(f"exp2_negative must be one of {sorted(EXP2_MODES)}")
        if self.quantize is not None:
            for name in ("recip", "log2", "exp2", "sqrt"):
                object.__setattr__(self, name, getattr(self, name).quantized(self.quantize))

    @property
    def exp2_mode(self) -> int:
        return EXP2_MODES[self.exp2_negative]

    def tables(self) -> dict[str, PiecewisePoly]:
        return {"recip": self.recip, "log2": self.log2, "exp2": self.exp2, "sqrt": self.sqrt}


DEFAULT_UNITS = FunctionUnits()


def poly_eval(p: PiecewisePoly, x):
    """Evaluate ``p`` at ``x`` (scalar or array); raises DomainError outside."""
    return p(x)


def segment_from_msbs(p: PiecewisePoly, x: float, frac_bits: int = 32) -> int:
    """Segment index read from the top ``log2(n)`` bits of the fixed-point offset.

    The offset ``(x - xi) / (xf - xi)`` lies in ``[0, 1)``; as a ``frac_bits``
    wide unsigned word its leading bits are the segment number.
    """
    p._check(x)
    sel = (p.segments - 1).bit_length()
    word = int(math.floor((x - p.xi) / (p.xf - p.xi) * (1 << frac_bits)))
    return min(word >> (frac_bits - sel), p.segments - 1) if sel else 0


def fit_coefficients(
    func: Callable,
    domain: tuple[float, float],
    degree: int,
    segments: int,
    samples: int = 1024,
    name: str = "",
) -> PiecewisePoly:
    """Per-segment least-squares fit on a uniform sample of each segment."""
    if degree < 1:
        raise FitError("degree must be >= 1")
    if not _is_pow2(segments):
        raise FitError("segments must be a power of two")
    if samples < 1024:
        raise FitError("need at least 1024 samples per segment")
    xi, xf = float(domain[0]), float(domain[1])
    if not xf > xi:
        raise FitError(f"empty domain [{xi}, {xf})")
    eta = (xf - xi) / segments
    rows = []
    for k in range(segments):
        x = xi + eta * (k + np.arange(samples) / samples)
        with np.errstate(all="ignore"):
            y = np.asarray(func(x), dtype=np.float64)
        if not np.all(np.isfinite(y)):
            raise FitError(f"non-finite samples in segment {k}")
        rows.append(np.polyfit(x, y, degree))
    return PiecewisePoly(np.array(rows), xi, xf, name)


# --------------------------------------------------------------------------
# scalar function units on FpValue


def _params(x: FpValue) -> tuple[int, int, int]:
    fmt = x.format
    return fmt.mantissa_bits, fmt.exp_bits, fmt.bias


def _same(x: FpValue, y: FpValue) -> None:
    if x.format != y.format:
        raise ValueError(f"format mismatch: {x.format} vs {y.format}")


def fp_reciprocal_mantissa(frac: float, units: FunctionUnits = DEFAULT_UNITS) -> float:
    """Approximation of ``1 / (1 + frac)`` for ``frac`` in [0, 1)."""
    return units.recip(frac)


def fp_div(x: FpValue, y: FpValue, units: FunctionUnits = DEFAULT_UNITS) -> FpValue:
    _same(x, y)
    m, e, bias = _params(x)
    t = units.recip
    bits = _core.div_bits(x.bits, y.bits, m, e, bias, t.coeffs, t.xi, t.xf)
    return decode(bits, x.format)


def fp_log2(x: FpValue, units: FunctionUnits = DEFAULT_UNITS) -> FpValue:
    m, e, bias = _params(x)
    t = units.log2
    return decode(_core.log2_bits(x.bits, m, e, bias, t.coeffs, t.xi, t.xf), x.format)


def fp_exp2(x: FpValue, units: FunctionUnits = DEFAULT_UNITS) -> FpValue:
    m, e, bias = _params(x)
    g, r = units.exp2, units.recip
    bits = _core.exp2_bits(
        x.bits, m, e, bias, g.coeffs, g.xi, g.xf, r.coeffs, r.xi, r.xf, units.exp2_mode
    )
    return decode(bits, x.format)


def fp_sqrt(x: FpValue, units: FunctionUnits = DEFAULT_UNITS) -> FpValue:
    m, e, bias = _params(x)
    t = units.sqrt
    return decode(_core.sqrt_bits(x.bits, m, e, bias, t.coeffs, t.xi, t.xf), x.format)
