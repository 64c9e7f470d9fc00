"""Operator table over :class:`FpValue` shared by constant folding and the
tree-walking interpreter."""

from __future__ import annotations

from .. import arith, polyapprox
from ..formats import FpValue
from ..polyapprox import DEFAULT_UNITS, FunctionUnits


def apply(kind: str, args: list[FpValue], params: dict | None = None,
          units: FunctionUnits = DEFAULT_UNITS):
    """Evaluate graph operator ``kind``; ``cas`` returns a pair."""
    if kind == "add":
        return arith.fp_add(*args)
    if kind == "sub":
        return arith.fp_sub(*args)
    if kind == "mul":
        return arith.fp_mul(*args)
    if kind == "div":
        return polyapprox.fp_div(*args, units=units)
    if kind == "max":
        return arith.fp_max(*args)
    if kind == "neg":
        return arith.fp_neg(*args)
    if kind == "cas":
        return arith.cmp_and_swap(*args)
    if kind == "rsh":
        return arith.fp_rsh(args[0], params["n"])
    if kind == "lsh":
        return arith.fp_lsh(args[0], params["n"])
    if kind == "sqrt":
        return polyapprox.fp_sqrt(args[0], units=units)
    if kind == "log2":
        return polyapprox.fp_log2(args[0], units=units)
    if kind == "exp2":
        return polyapprox.fp_exp2(args[0], units=units)
    raise ValueError(f"no scalar semantics for {kind!r}")
