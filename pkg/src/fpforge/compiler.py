"""Source-to-artifact pipeline: parse, analyse, lower, schedule."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .backend import Netlist, ResourceReport, emit_netlist, estimate_resources, render_hdl
from .dfg import DfGraph, LatencyModel, LatencyReport, latency_report, schedule
from .dsl import DslError, TypedProgram, analyze, lower, parse
from .dsl.syntax import ArrayLit, Assign, Call, Index, Name, Num
from .formats import FloatFormat, parse_format
from .polyapprox import DEFAULT_UNITS, FunctionUnits

__all__ = ["CompileResult", "compile_program", "compile_file", "override_kernel"]


@dataclass
class CompileResult:
    name: str
    program: TypedProgram
    graph: DfGraph
    scheduled: DfGraph
    report: LatencyReport
    units: FunctionUnits
    border: str

    @property
    def fmt(self) -> FloatFormat:
        return self.program.fmt

    def netlist(self) -> Netlist:
        return emit_netlist(self.scheduled, self.fmt, self.name, self.units)

    def hdl(self) -> str:
        return render_hdl(self.netlist())

    def resources(self) -> ResourceReport:
        return estimate_resources(self.netlist())


def _conv_kernels(tp: TypedProgram) -> list[str]:
    names = []

    def walk(e):
        if isinstance(e, Call):
            if e.func in ("conv", "conv3x3", "conv5x5"):
                names.append(e.args[1].id)
            for a in e.args:
                walk(a)
        for attr in ("left", "right", "operand", "arg"):
            if hasattr(e, attr):
                walk(getattr(e, attr))

    for s in tp.stmts:
        walk(s.value)
    return names


def override_kernel(tp: TypedProgram, kernel, name: str | None = None) -> TypedProgram:
    """Replace the coefficients of a convolution kernel array.

    ``name`` defaults to the kernel of the only ``conv`` call.
    """
    k = np.asarray(kernel, dtype=np.float64)
    if name is None:
        names = sorted(set(_conv_kernels(tp)))
        if len(names) != 1:
            raise DslError(f"cannot pick a kernel to override among {names or 'none'}", 0, 0, tp.filename)
        name = names[0]
    dims = tp.symbols.get(name)
    if dims is None or k.shape != tuple(dims):
        raise DslError(
            f"kernel {name!r} is {'x'.join(map(str, dims or ()))}, override is {'x'.join(map(str, k.shape))}",
            0, 0, tp.filename,
        )

    def targets_kernel(s: Assign) -> bool:
        t = s.targets[0]
        return len(s.targets) == 1 and (
            (isinstance(t, Name) and t.id == name) or (isinstance(t, Index) and t.name == name)
        )

    rows = [[Num(float(v), repr(float(v))) for v in row] for row in k]
    new = Assign([Name(name)], ArrayLit(rows))
    stmts, placed = [], False
    for s in tp.stmts:
        if targets_kernel(s):
            if not placed:
                stmts.append(new)
                placed = True
            continue
        stmts.append(s)
    if not placed:
        raise DslError(f"kernel {name!r} is never assigned", 0, 0, tp.filename)
    return dataclasses.replace(tp, stmts=stmts)


def compile_program(
    source: str,
    filename: str = "<input>",
    *,
    fmt: FloatFormat | str | None = None,
    latency: LatencyModel | str = "default",
    border: str = "constant:0",
    resolution: tuple[int, int] | None = None,
    kernel=None,
    units: FunctionUnits = DEFAULT_UNITS,
    name: str | None = None,
) -> CompileResult:
    """Compile DSL text; ``resolution`` is (width, height) and overrides the
    program's ``image_resolution``."""
    tp = analyze(parse(source, filename))
    if fmt is not None:
        tp = dataclasses.replace(tp, fmt=parse_format(fmt) if isinstance(fmt, str) else fmt)
    if kernel is not None:
        tp = override_kernel(tp, kernel)
    lm = LatencyModel.profile(latency) if isinstance(latency, str) else latency
    g = lower(tp, border=border, resolution=resolution, units=units)
    sg = schedule(g, lm)
    if name is None:
        name = "top" if filename.startswith("<") else Path(filename).stem
    return CompileResult(name, tp, g, sg, latency_report(sg), units, border)


def compile_file(path, **kw) -> CompileResult:
    path = Path(path)
    return compile_program(path.read_text(), str(path), **kw)
