"""Name resolution, typing and loop unrolling.

:func:`analyze` turns a parsed :class:`Program` into a :class:`TypedProgram`
whose statements are flat (loops unrolled, array indices folded to ints) and
whose every expression is known to be a scalar in the declared format.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..formats import FloatFormat
from .lexer import DslError
from .syntax import (
    BUILTINS,
    ArrayLit,
    Assign,
    BinOp,
    Call,
    For,
    FormatDecl,
    Index,
    IODecl,
    Name,
    Neg,
    Num,
    Program,
    Resolution,
    Shift,
    VarDecl,
)

__all__ = ["TypedProgram", "WindowDecl", "analyze", "OP_KINDS"]

# AST operator -> graph operator kind
OP_KINDS = {
    "+": "add",
    "-": "sub",
    "*": "mul",
    "/": "div",
    "max": "max",
    "sqrt": "sqrt",
    "log2": "log2",
    "exp2": "exp2",
    "cmp_and_swap": "cas",
    "FP_RSH": "rsh",
    "FP_LSH": "lsh",
}

_CONV_DIMS = {"conv3x3": (3, 3), "conv5x5": (5, 5)}


@dataclass
class WindowDecl:
    target: str
    source: str
    height: int
    width: int


@dataclass
class TypedProgram:
    """Analysed program; ``stmts`` hold only flat :class:`Assign` nodes."""

    fmt: FloatFormat
    inputs: list[str]
    outputs: list[str]
    symbols: dict[str, tuple]
    stmts: list[Assign]
    resolution: tuple[int, int] | None = None
    window: WindowDecl | None = None
    filename: str = "<input>"
    source: Program | None = field(default=None, repr=False)

    def operations(self) -> list[str]:
        """Graph operator kinds in evaluation order (conv expands to mul/add)."""
        ops: list[str] = []

        def walk(e):
            if isinstance(e, BinOp):
                walk(e.left)
                walk(e.right)
                ops.append(OP_KINDS[e.op])
            elif isinstance(e, Neg):
                walk(e.operand)
                ops.append("neg")
            elif isinstance(e, Shift):
                walk(e.arg)
                ops.append(OP_KINDS[e.func])
            elif isinstance(e, Call):
                if e.func == "sliding_window":
                    ops.append("window")
                elif e.func in ("conv", "conv3x3", "conv5x5"):
                    n = 1
                    for d in self.symbols[e.args[0].id]:
                        n *= d
                    ops.extend(["mul"] * n + ["add"] * (n - 1))
                else:
                    for a in e.args:
                        walk(a)
                    ops.append(OP_KINDS[e.func])

        for s in self.stmts:
            walk(s.value)
        return ops


class _Analyzer:
    def __init__(self, prog: Program):
        self.prog = prog
        self.filename = prog.filename
        self.fmt: FloatFormat | None = None
        self.resolution = None
        self.inputs: list[str] = []
        self.outputs: list[str] = []
        self.symbols: dict[str, tuple] = {}
        self.assigned: set[tuple] = set()
        self.window: WindowDecl | None = None
        self.out: list[Assign] = []
        self.loop_env: dict[str, int] = {}

    def error(self, msg, node=None) -> DslError:
        line, col = getattr(node, "pos", (0, 0)) if node is not None else (0, 0)
        return DslError(msg, line, col, self.filename)

    # -- declarations ------------------------------------------------------

    def declare(self, name: str, dims: tuple, node):
        if name in self.symbols and (self.symbols[name] != dims or name not in self.inputs + self.outputs):
            raise self.error(f"duplicate declaration of {name!r}", node)
        if name in BUILTINS:
            raise self.error(f"{name!r} is a builtin", node)
        if any(d < 1 for d in dims):
            raise self.error(f"array {name!r} has an empty dimension", node)
        self.symbols[name] = dims

    def run(self) -> TypedProgram:
        for s in self.prog.stmts:
            self.stmt(s)
        if self.fmt is None:
            raise self.error("missing format declaration")
        for name in self.outputs:
            if not self._fully_assigned(name):
                raise self.error(f"output {name!r} is never assigned")
        return TypedProgram(
            self.fmt,
            list(self.inputs),
            list(self.outputs),
            dict(self.symbols),
            self.out,
            self.resolution,
            self.window,
            self.filename,
            self.prog,
        )

    def _cells(self, name):
        dims = self.symbols[name]
        cells = [()]
        for d in dims:
            cells = [c + (i,) for c in cells for i in range(d)]
        return cells

    def _fully_assigned(self, name) -> bool:
        return all((name, c) in self.assigned for c in self._cells(name))

    def stmt(self, s):
        if isinstance(s, FormatDecl):
            if self.fmt is not None:
                raise self.error("duplicate format declaration", s)
            try:
                fmt = FloatFormat(s.mantissa, s.exponent)
            except ValueError as exc:
                raise self.error(str(exc), s) from None
            if fmt.width != s.width:
                raise self.error(f"float{s.width}: width must be 1 + {s.mantissa} + {s.exponent} = {fmt.width}", s)
            self.fmt = fmt
        elif isinstance(s, IODecl):
            for name in s.names:
                if name in self.inputs or name in self.outputs:
                    raise self.error(f"duplicate declaration of {name!r}", s)
                if name in self.symbols and self.symbols[name] != ():
                    raise self.error(f"{s.kind} {name!r} must be a scalar", s)
                if name not in self.symbols:
                    self.declare(name, (), s)
                (self.inputs if s.kind == "input" else self.outputs).append(name)
                if s.kind == "input":
                    self.assigned.add((name, ()))
        elif isinstance(s, VarDecl):
            for name, dims in s.items:
                if name in self.inputs + self.outputs and dims:
                    raise self.error(f"{name!r} is an input/output and must be a scalar", s)
                if name in self.symbols and name not in self.inputs + self.outputs:
                    raise self.error(f"duplicate declaration of {name!r}", s)
                self.declare(name, tuple(dims), s)
        elif isinstance(s, Resolution):
            if self.resolution is not None:
                raise self.error("duplicate image_resolution", s)
            if s.width < 1 or s.height < 1:
                raise self.error("image resolution must be positive", s)
            self.resolution = (s.width, s.height)
        elif isinstance(s, For):
            if s.var in self.symbols or s.var in self.loop_env:
                raise self.error(f"loop variable {s.var!r} shadows a name", s)
            if s.stop < s.start:
                raise self.error("empty loop range", s)
            for v in range(s.start, s.stop + 1):
                self.loop_env[s.var] = v
                for b in s.body:
                    self.stmt(b)
            del self.loop_env[s.var]
        elif isinstance(s, Assign):
            self.assign(s)
        else:  # pragma: no cover - parser never produces anything else
            raise self.error(f"unsupported statement {type(s).__name__}", s)

    # -- assignments -------------------------------------------------------

    def const_int(self, e) -> int:
        if isinstance(e, Num):
            if not float(e.value).is_integer():
                raise self.error("array index must be an integer", e)
            return int(e.value)
        if isinstance(e, Name) and e.id in self.loop_env:
            return self.loop_env[e.id]
        if isinstance(e, Neg):
            return -self.const_int(e.operand)
        if isinstance(e, BinOp) and e.op in "+-*":
            a, b = self.const_int(e.left), self.const_int(e.right)
            return a + b if e.op == "+" else a - b if e.op == "-" else a * b
        raise self.error("array index must be a constant integer expression", e)

    def lookup(self, node) -> str:
        name = node.id if isinstance(node, Name) else node.name
        if name in self.loop_env and isinstance(node, Name):
            return name
        if name not in self.symbols:
            raise self.error(f"undeclared identifier {name!r}", node)
        return name

    def resolve_index(self, node: Index) -> Index:
        name = self.lookup(node)
        dims = self.symbols[name]
        if len(node.indices) != len(dims):
            raise self.error(f"{name!r} has {len(dims)} dimensions, indexed with {len(node.indices)}", node)
        idx = [self.const_int(i) for i in node.indices]
        for k, (i, d) in enumerate(zip(idx, dims)):
            if not 0 <= i < d:
                raise self.error(f"index {i} out of range for dimension {k} of {name!r} (size {d})", node)
        return Index(name, [Num(float(i), str(i)) for i in idx], node.pos)

    def target_cells(self, t):
        """Resolved target plus the cells it writes."""
        if isinstance(t, Index):
            r = self.resolve_index(t)
            return r, [(r.name, tuple(int(i.value) for i in r.indices))]
        name = self.lookup(t)
        if name in self.loop_env:
            raise self.error(f"cannot assign to loop variable {name!r}", t)
        return Name(name, t.pos), [(name, c) for c in self._cells(name)]

    def assign(self, s: Assign):
        if self.fmt is None:
            raise self.error("missing format declaration before first assignment", s)
        value = s.value
        resolved = []
        cells = []
        for t in s.targets:
            r, c = self.target_cells(t)
            name = r.id if isinstance(r, Name) else r.name
            if name in self.inputs:
                raise self.error(f"cannot assign to input {name!r}", t)
            resolved.append(r)
            cells.append(c)
        if len(s.targets) == 2:
            if not (isinstance(value, Call) and value.func == "cmp_and_swap"):
                raise self.error("two-target assignment requires cmp_and_swap", s)
            for r in resolved:
                if isinstance(r, Name) and self.symbols[r.id] != ():
                    raise self.error(f"cmp_and_swap result {r.id!r} must be a scalar", r)
            new_value = self.expr(value, multi=True)
        elif len(s.targets) != 1:
            raise self.error("assignment takes one target, or two for cmp_and_swap", s)
        else:
            target = resolved[0]
            tdims = () if isinstance(target, Index) else self.symbols[target.id]
            new_value = self.rhs(value, target, tdims)
        # value is checked before the targets are marked, so "x = x" is a use error
        for group in cells:
            for cell in group:
                if cell in self.assigned:
                    label = cell[0] + "".join(f"[{i}]" for i in cell[1])
                    raise self.error(f"reassignment of {label!r}", s)
        for group in cells:
            self.assigned.update(group)
        self.out.append(Assign(resolved, new_value, s.pos))

    def rhs(self, value, target, tdims):
        if not tdims:
            return self.expr(value)
        name = target.id
        if isinstance(value, Call) and value.func == "sliding_window":
            if len(value.args) != 1 or not isinstance(value.args[0], Name):
                raise self.error("sliding_window takes one input stream name", value)
            src = self.lookup(value.args[0])
            if src not in self.inputs:
                raise self.error(f"sliding_window source {src!r} must be an input", value)
            if len(tdims) != 2 or tdims[0] % 2 == 0 or tdims[1] % 2 == 0:
                raise self.error(f"window {name!r} must be a 2-D array with odd dimensions", value)
            if self.window is not None:
                raise self.error("only one sliding_window per program", value)
            self.window = WindowDecl(name, src, tdims[0], tdims[1])
            return Call("sliding_window", [Name(src, value.args[0].pos)], value.pos)
        if isinstance(value, ArrayLit):
            rows = value.rows
            shape = (len(rows),) + ((len(rows[0]),) if len(tdims) == 2 else ())
            if len(tdims) == 1:
                if len(rows) != 1 or len(rows[0]) != tdims[0]:
                    raise self.error(f"array literal does not match {name!r}{list(tdims)}", value)
                return ArrayLit([[self.expr(x) for x in rows[0]]], value.pos)
            if any(len(r) != len(rows[0]) for r in rows) or shape != tdims:
                raise self.error(f"array literal shape does not match {name!r}{list(tdims)}", value)
            return ArrayLit([[self.expr(x) for x in r] for r in rows], value.pos)
        if isinstance(value, Name):
            src = self.lookup(value)
            if self.symbols.get(src) != tdims:
                raise self.error(f"cannot assign {src!r} to array {name!r}: shape mismatch", value)
            self.use_all(src, value)
            return Name(src, value.pos)
        raise self.error(f"array {name!r} needs sliding_window, an array literal or an array", value)

    def use_all(self, name, node):
        for c in self._cells(name):
            if (name, c) not in self.assigned:
                label = name + "".join(f"[{i}]" for i in c)
                raise self.error(f"{label!r} used before assignment", node)

    # -- expressions -------------------------------------------------------

    def expr(self, e, multi: bool = False):
        if isinstance(e, Num):
            return e
        if isinstance(e, Name):
            if e.id in self.loop_env:
                return Num(float(self.loop_env[e.id]), str(self.loop_env[e.id]), e.pos)
            name = self.lookup(e)
            if self.symbols[name] != ():
                raise self.error(f"array {name!r} used where a scalar is expected", e)
            self.use_all(name, e)
            return Name(name, e.pos)
        if isinstance(e, Index):
            r = self.resolve_index(e)
            cell = (r.name, tuple(int(i.value) for i in r.indices))
            if cell not in self.assigned:
                label = r.name + "".join(f"[{i}]" for i in cell[1])
                raise self.error(f"{label!r} used before assignment", e)
            return r
        if isinstance(e, BinOp):
            return BinOp(e.op, self.expr(e.left), self.expr(e.right), e.pos)
        if isinstance(e, Neg):
            return Neg(self.expr(e.operand), e.pos)
        if isinstance(e, Shift):
            return Shift(e.func, self.expr(e.arg), e.amount, e.pos)
        if isinstance(e, ArrayLit):
            raise self.error("array literal used where a scalar is expected", e)
        if isinstance(e, Call):
            return self.call(e, multi)
        raise self.error(f"unsupported expression {type(e).__name__}", e)

    def call(self, e: Call, multi: bool):
        n_args, n_res = BUILTINS[e.func]
        if len(e.args) != n_args:
            raise self.error(f"{e.func} takes {n_args} argument{'s' * (n_args != 1)}, got {len(e.args)}", e)
        if n_res == 2 and not multi:
            raise self.error(f"{e.func} returns two values; use (a, b) = {e.func}(...)", e)
        if e.func == "sliding_window":
            raise self.error("sliding_window result must be assigned to a window array", e)
        if e.func in ("conv", "conv3x3", "conv5x5"):
            arrays = []
            for a in e.args:
                if not isinstance(a, Name):
                    raise self.error(f"{e.func} takes two array names", a)
                name = self.lookup(a)
                dims = self.symbols[name]
                if len(dims) != 2:
                    raise self.error(f"{e.func} argument {name!r} must be a 2-D array", a)
                self.use_all(name, a)
                arrays.append((name, dims))
            (w, wd), (k, kd) = arrays
            if wd != kd:
                raise self.error(f"kernel {k!r}{list(kd)} does not match window {w!r}{list(wd)}", e)
            if wd[0] % 2 == 0 or wd[1] % 2 == 0:
                raise self.error(f"{e.func} needs odd kernel dimensions", e)
            if e.func in _CONV_DIMS and wd != _CONV_DIMS[e.func]:
                raise self.error(f"{e.func} needs {_CONV_DIMS[e.func]} arrays, got {wd}", e)
            return Call(e.func, [Name(w, e.args[0].pos), Name(k, e.args[1].pos)], e.pos)
        return Call(e.func, [self.expr(a) for a in e.args], e.pos)


def analyze(prog: Program) -> TypedProgram:
    """Check and flatten a parsed program; raises :class:`DslError`."""
    return _Analyzer(prog).run()
