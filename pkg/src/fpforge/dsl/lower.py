"""Lowering of analysed programs to :class:`~fpforge.dfg.DfGraph`.

Every operator becomes one node; ``sliding_window`` becomes a window-source
node with one output per tap; ``conv`` expands to an elementwise product array
followed by an adder tree.  Operators whose operands are all literals are
folded to a single literal node so that constants stay timeless.
"""

from __future__ import annotations

from ..dfg import DfGraph, Signal, tree_reduce
from ..formats import FpValue, decode, from_real
from ..polyapprox import DEFAULT_UNITS, FunctionUnits
from . import scalar_ops
from .lexer import DslError
from .semantic import OP_KINDS, TypedProgram
from .syntax import ArrayLit, BinOp, Call, Index, Name, Neg, Num, Shift

__all__ = ["lower", "BorderSpec", "parse_border"]


BorderSpec = str  # "constant:<v>" | "mirror" | "reflect"


def parse_border(text: str) -> tuple[str, float]:
    """``"constant:3.5"`` -> ("constant", 3.5); ``"mirror"`` -> ("mirror", 0.0)."""
    text = text.strip()
    if text in ("mirror", "reflect"):
        return text, 0.0
    if text == "constant":
        return "constant", 0.0
    if text.startswith("constant:"):
        try:
            return "constant", float(text.split(":", 1)[1])
        except ValueError:
            pass
    raise ValueError(f"bad border mode {text!r}; expected constant:<v>, mirror or reflect")


def _label(name: str, cell: tuple) -> str:
    return name + "".join(f"[{i}]" for i in cell)


class _Lowerer:
    def __init__(self, tp: TypedProgram, border: str, resolution, units: FunctionUnits):
        self.tp = tp
        self.fmt = tp.fmt
        self.g = DfGraph(fmt=tp.fmt)
        self.env: dict[tuple, Signal] = {}
        self.units = units
        mode, value = parse_border(border)
        self.border = f"constant:{value!r}" if mode == "constant" else mode
        self.resolution = resolution or tp.resolution

    # literal helpers
    def const_value(self, sig: Signal) -> FpValue | None:
        node = self.g.node(sig)
        if node.kind != "const":
            return None
        return decode(node.params["bits"], self.fmt)

    def literal(self, v: FpValue, name: str | None = None) -> Signal:
        return self.g.const(v.bits, float(v), name)

    def op(self, kind: str, args: list[Signal], params=None):
        consts = [self.const_value(a) for a in args]
        if all(c is not None for c in consts):
            res = scalar_ops.apply(kind, consts, params, self.units)
            if kind == "cas":
                return [self.literal(r) for r in res]
            return self.literal(res)
        return self.g.add(kind, args, params)

    def run(self) -> DfGraph:
        g = self.g
        for name in self.tp.inputs:
            self.env[(name, ())] = g.input(name)
        for s in self.tp.stmts:
            self.assign(s)
        for name in self.tp.outputs:
            g.output(name, self.env[(name, ())])
        # literals consumed by constant folding are left without readers
        used = {s.node for n in g.nodes.values() for s in n.inputs} | {s.node for s in g.outputs.values()}
        for i in [i for i, n in g.nodes.items() if n.kind == "const" and i not in used]:
            del g.nodes[i]
        return g

    def name_signal(self, sig: Signal, label: str) -> None:
        node = self.g.node(sig)
        if node.kind != "input" and not node.names[sig.port]:
            node.names[sig.port] = label

    def assign(self, s):
        t = s.targets
        v = s.value
        if len(t) == 2:
            lo, hi = self.expr(v)
            for target, sig in zip(t, (lo, hi)):
                cell = self.cell(target)
                self.name_signal(sig, _label(*cell))
                self.env[cell] = sig
            return
        target = t[0]
        if isinstance(target, Name) and self.tp.symbols[target.id]:
            self.assign_array(target.id, v)
            return
        cell = self.cell(target)
        sig = self.expr(v)
        self.name_signal(sig, _label(*cell))
        self.env[cell] = sig

    def cell(self, target):
        if isinstance(target, Index):
            return target.name, tuple(int(i.value) for i in target.indices)
        return target.id, ()

    def assign_array(self, name: str, v):
        dims = self.tp.symbols[name]
        if isinstance(v, Call) and v.func == "sliding_window":
            h, w = dims
            if self.resolution is None:
                line, col = v.pos
                raise DslError("sliding_window needs image_resolution or an explicit resolution",
                               line, col, self.tp.filename)
            params = {
                "height": h,
                "width": w,
                "image_width": self.resolution[0],
                "image_height": self.resolution[1],
                "border": self.border,
            }
            labels = [_label(name, (i, j)) for i in range(h) for j in range(w)]
            taps = self.g.add("window", [self.env[(v.args[0].id, ())]], params, labels, n_out=h * w)
            for i in range(h):
                for j in range(w):
                    self.env[(name, (i, j))] = taps[i * w + j]
            return
        if isinstance(v, ArrayLit):
            rows = v.rows if len(dims) == 2 else [[x] for x in v.rows[0]]
            for i, row in enumerate(rows):
                for j, x in enumerate(row):
                    cell = (i, j) if len(dims) == 2 else (i,)
                    sig = self.expr(x)
                    self.name_signal(sig, _label(name, cell))
                    self.env[(name, cell)] = sig
            return
        if isinstance(v, Name):
            for key, sig in list(self.env.items()):
                if key[0] == v.id:
                    self.env[(name, key[1])] = sig
            return
        raise ValueError(f"unsupported array assignment to {name!r}")

    def expr(self, e):
        if isinstance(e, Num):
            return self.literal(from_real(e.value, self.fmt))
        if isinstance(e, Name):
            return self.env[(e.id, ())]
        if isinstance(e, Index):
            return self.env[self.cell(e)]
        if isinstance(e, BinOp):
            return self.op(OP_KINDS[e.op], [self.expr(e.left), self.expr(e.right)])
        if isinstance(e, Neg):
            return self.op("neg", [self.expr(e.operand)])
        if isinstance(e, Shift):
            return self.op(OP_KINDS[e.func], [self.expr(e.arg)], {"n": e.amount})
        if isinstance(e, Call):
            if e.func in ("conv", "conv3x3", "conv5x5"):
                w, k = e.args[0].id, e.args[1].id
                h, wd = self.tp.symbols[w]
                prods = [
                    self.op("mul", [self.env[(w, (i, j))], self.env[(k, (i, j))]])
                    for i in range(h)
                    for j in range(wd)
                ]
                return tree_reduce(prods, lambda x, y: self.op("add", [x, y]))
            return self.op(OP_KINDS[e.func], [self.expr(a) for a in e.args])
        raise TypeError(f"cannot lower {type(e).__name__}")


def lower(
    tp: TypedProgram,
    border: BorderSpec = "constant:0",
    resolution: tuple[int, int] | None = None,
    units: FunctionUnits = DEFAULT_UNITS,
) -> DfGraph:
    """Unscheduled graph for ``tp``; ``resolution`` is (width, height)."""
    return _Lowerer(tp, border, resolution, units).run()
