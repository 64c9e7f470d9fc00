"""AST node types and the pretty-printer (``parse(to_source(p)) == p``)."""

from __future__ import annotations

from dataclasses import dataclass, field

__all__ = [
    "Pos",
    "Num",
    "Name",
    "Index",
    "Call",
    "BinOp",
    "Neg",
    "Shift",
    "ArrayLit",
    "FormatDecl",
    "IODecl",
    "VarDecl",
    "Resolution",
    "Assign",
    "For",
    "Program",
    "to_source",
    "BUILTINS",
]

# builtin -> (argument count, result count); shifts take one argument plus ">> k"
BUILTINS = {
    "max": (2, 1),
    "sqrt": (1, 1),
    "log2": (1, 1),
    "exp2": (1, 1),
    "cmp_and_swap": (2, 2),
    "FP_RSH": (1, 1),
    "FP_LSH": (1, 1),
    "sliding_window": (1, 1),
    "conv": (2, 1),
    "conv3x3": (2, 1),
    "conv5x5": (2, 1),
}


def _pos():
    return field(default=(0, 0), compare=False, repr=False)


Pos = tuple  # (line, col)


# -- expressions -------------------------------------------------------------


@dataclass
class Num:
    value: float
    text: str = field(default="", compare=False)
    pos: Pos = _pos()


@dataclass
class Name:
    id: str
    pos: Pos = _pos()


@dataclass
class Index:
    name: str
    indices: list
    pos: Pos = _pos()


@dataclass
class Call:
    func: str
    args: list
    pos: Pos = _pos()


@dataclass
class BinOp:
    op: str
    left: object
    right: object
    pos: Pos = _pos()


@dataclass
class Neg:
    operand: object
    pos: Pos = _pos()


@dataclass
class Shift:
    """``FP_RSH(x) >> k`` (divide by 2^k) or ``FP_LSH(x) >> k`` (multiply)."""

    func: str
    arg: object
    amount: int
    pos: Pos = _pos()


@dataclass
class ArrayLit:
    rows: list  # list of lists of expressions
    pos: Pos = _pos()


# -- statements --------------------------------------------------------------


@dataclass
class FormatDecl:
    width: int
    mantissa: int
    exponent: int
    pos: Pos = _pos()


@dataclass
class IODecl:
    kind: str  # "input" | "output"
    names: list
    pos: Pos = _pos()


@dataclass
class VarDecl:
    items: list  # (name, dims tuple)
    pos: Pos = _pos()


@dataclass
class Resolution:
    width: int
    height: int
    pos: Pos = _pos()


@dataclass
class Assign:
    targets: list  # Name/Index; two entries for multi-result calls
    value: object
    pos: Pos = _pos()


@dataclass
class For:
    var: str
    start: int
    stop: int  # inclusive
    body: list
    pos: Pos = _pos()


@dataclass
class Program:
    stmts: list
    filename: str = field(default="<input>", compare=False)


# -- printer -----------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def _num(n: Num) -> str:
    if n.text:
        return n.text
    v = n.value
    return str(int(v)) if float(v).is_integer() and abs(v) < 1e15 else repr(float(v))


def _expr(e, prec: int = 0) -> str:
    if isinstance(e, Num):
        return _num(e)
    if isinstance(e, Name):
        return e.id
    if isinstance(e, Index):
        return e.name + "".join(f"[{_expr(i)}]" for i in e.indices)
    if isinstance(e, Call):
        return f"{e.func}({', '.join(_expr(a) for a in e.args)})"
    if isinstance(e, Shift):
        return f"{e.func}({_expr(e.arg)}) >> {e.amount}"
    if isinstance(e, Neg):
        return f"-{_expr(e.operand, 3)}"
    if isinstance(e, ArrayLit):
        return "[" + ", ".join("[" + ", ".join(_expr(x) for x in row) + "]" for row in e.rows) + "]"
    if isinstance(e, BinOp):
        p = _PREC[e.op]
        text = f"{_expr(e.left, p)} {e.op} {_expr(e.right, p + 1)}"
        return f"({text})" if p < prec else text
    raise TypeError(f"not an expression: {e!r}")


def _stmt(s, indent: str) -> list[str]:
    if isinstance(s, FormatDecl):
        return [f"{indent}float{s.width}({s.mantissa},{s.exponent})"]
    if isinstance(s, IODecl):
        return [f"{indent}{s.kind} {', '.join(s.names)}"]
    if isinstance(s, VarDecl):
        items = [n + "".join(f"[{d}]" for d in dims) for n, dims in s.items]
        return [f"{indent}float {', '.join(items)}"]
    if isinstance(s, Resolution):
        return [f"{indent}image_resolution({s.width}, {s.height})"]
    if isinstance(s, Assign):
        lhs = _expr(s.targets[0]) if len(s.targets) == 1 else "(" + ", ".join(_expr(t) for t in s.targets) + ")"
        return [f"{indent}{lhs} = {_expr(s.value)}"]
    if isinstance(s, For):
        lines = [f"{indent}for {s.var} = {s.start}:{s.stop}"]
        for b in s.body:
            lines += _stmt(b, indent + "    ")
        return lines + [f"{indent}end"]
    raise TypeError(f"not a statement: {s!r}")


def to_source(p: Program) -> str:
    lines: list[str] = []
    for s in p.stmts:
        lines += _stmt(s, "")
    return "\n".join(lines) + "\n"
