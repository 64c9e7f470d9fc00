"""Untimed tree-walking interpreter over :class:`FpValue` scalars."""

from __future__ import annotations

from ..dfg import tree_reduce
from ..formats import FpValue, from_real
from ..polyapprox import DEFAULT_UNITS, FunctionUnits
from . import scalar_ops
from .semantic import OP_KINDS, TypedProgram
from .syntax import ArrayLit, BinOp, Call, Index, Name, Neg, Num, Shift

__all__ = ["interpret"]


def interpret(
    tp: TypedProgram,
    inputs: dict[str, FpValue] | None = None,
    window=None,
    units: FunctionUnits = DEFAULT_UNITS,
) -> dict[str, FpValue]:
    """Run ``tp`` once.

    ``window`` is the H x W neighbourhood (nested sequences of FpValue) that
    ``sliding_window`` yields for the pixel being computed.
    """
    fmt = tp.fmt
    env: dict[tuple, FpValue] = {}
    for name in tp.inputs:
        if tp.window is not None and name == tp.window.source and (inputs is None or name not in inputs):
            continue
        env[(name, ())] = (inputs or {})[name]

    def cell(t):
        if isinstance(t, Index):
            return t.name, tuple(int(i.value) for i in t.indices)
        return t.id, ()

    def ev(e):
        if isinstance(e, Num):
            return from_real(e.value, fmt)
        if isinstance(e, (Name, Index)):
            return env[cell(e)]
        if isinstance(e, BinOp):
            return scalar_ops.apply(OP_KINDS[e.op], [ev(e.left), ev(e.right)], units=units)
        if isinstance(e, Neg):
            return scalar_ops.apply("neg", [ev(e.operand)])
        if isinstance(e, Shift):
            return scalar_ops.apply(OP_KINDS[e.func], [ev(e.arg)], {"n": e.amount})
        if isinstance(e, Call):
            if e.func in ("conv", "conv3x3", "conv5x5"):
                w, k = e.args[0].id, e.args[1].id
                h, wd = tp.symbols[w]
                prods = [
                    scalar_ops.apply("mul", [env[(w, (i, j))], env[(k, (i, j))]])
                    for i in range(h)
                    for j in range(wd)
                ]
                return tree_reduce(prods, lambda a, b: scalar_ops.apply("add", [a, b]))
            return scalar_ops.apply(OP_KINDS[e.func], [ev(a) for a in e.args], units=units)
        raise TypeError(f"cannot evaluate {type(e).__name__}")

    for s in tp.stmts:
        v = s.value
        if len(s.targets) == 2:
            lo, hi = ev(v)
            env[cell(s.targets[0])] = lo
            env[cell(s.targets[1])] = hi
            continue
        t = s.targets[0]
        dims = tp.symbols[t.id] if isinstance(t, Name) else ()
        if not dims:
            env[cell(t)] = ev(v)
        elif isinstance(v, Call) and v.func == "sliding_window":
            if window is None:
                raise ValueError("program has a sliding_window; pass window=")
            for i in range(dims[0]):
                for j in range(dims[1]):
                    env[(t.id, (i, j))] = window[i][j]
        elif isinstance(v, ArrayLit):
            rows = v.rows if len(dims) == 2 else [[x] for x in v.rows[0]]
            for i, row in enumerate(rows):
                for j, x in enumerate(row):
                    env[(t.id, (i, j) if len(dims) == 2 else (i,))] = ev(x)
        else:
            for key, val in list(env.items()):
                if key[0] == v.id:
                    env[(t.id, key[1])] = val
    return {name: env[(name, ())] for name in tp.outputs}
