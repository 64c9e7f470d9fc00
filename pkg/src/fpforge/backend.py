"""Artifacts emitted from a scheduled graph.

:func:`emit_netlist` builds the canonical structural netlist (a JSON
document with a fixed field order), :func:`render_hdl` prints it as a
Verilog-flavoured module and :func:`estimate_resources` derives coarse
resource counts from it.

Stream port convention: ``clock``, ``reset``, ``in_valid`` (one flag per input
pixel/value) and ``out_valid``, which is ``in_valid`` delayed by the window
formation delay (when there is a window generator) plus the pipeline depth.
"""

from __future__ import annotations

import json
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .dfg import DfGraph, GraphError, Signal
from .formats import FloatFormat
from .polyapprox import DEFAULT_UNITS, FunctionUnits

__all__ = [
    "Netlist",
    "ResourceReport",
    "INSTANCE_TYPES",
    "emit_netlist",
    "render_hdl",
    "estimate_resources",
    "instance_census",
    "hdl_census",
]

# graph node kind -> library module name
INSTANCE_TYPES = {
    "add": "FP_ADD",
    "sub": "FP_SUB",
    "mul": "FP_MULT",
    "div": "FP_DIV",
    "sqrt": "FP_SQRT",
    "log2": "FP_LOG2",
    "exp2": "FP_EXP2",
    "max": "FP_MAX",
    "cas": "FP_CAS",
    "rsh": "FP_RSH",
    "lsh": "FP_LSH",
    "neg": "FP_NEG",
    "window": "generateWindow",
}

_IN_PORTS = ("a", "b")
_OUT_PORTS = {"cas": ("lo", "hi")}

# polynomial tables each unit instantiates
_UNIT_TABLES = {"div": ("recip",), "log2": ("log2",), "sqrt": ("sqrt",)}


@dataclass
class Netlist:
    module: str
    parameters: dict
    ports: list = field(default_factory=list)
    nets: list = field(default_factory=list)
    literals: list = field(default_factory=list)
    registers: list = field(default_factory=list)
    instances: list = field(default_factory=list)
    assigns: list = field(default_factory=list)
    valid: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "Netlist":
        return cls(**json.loads(text))

    def save(self, path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path) -> "Netlist":
        return cls.from_json(Path(path).read_text())

    @property
    def fmt(self) -> FloatFormat:
        p = self.parameters
        return FloatFormat(p["MANTISSA_WIDTH"], p["EXP_WIDTH"], p["BIAS"])


def _ident(text: str) -> str:
    s = re.sub(r"[^0-9A-Za-z_]+", "_", text).strip("_")
    if not s or s[0].isdigit():
        s = "n_" + s
    return s


def _hex(bits: int, width: int) -> str:
    return f"{width}'h{bits:0{(width + 3) // 4}x}"


class _Namer:
    def __init__(self, reserved):
        self.used = set(reserved)

    def fresh(self, base: str) -> str:
        name, k = base, 1
        while name in self.used:
            name = f"{base}_{k}"
            k += 1
        self.used.add(name)
        return name


def emit_netlist(
    g: DfGraph,
    fmt: FloatFormat | None = None,
    name: str = "top",
    units: FunctionUnits = DEFAULT_UNITS,
) -> Netlist:
    """Structural netlist of a scheduled graph."""
    if not g.scheduled:
        raise GraphError("emit_netlist needs a scheduled graph")
    fmt = fmt or g.fmt
    if fmt is None:
        raise GraphError("no float format given")
    fw = fmt.width
    params = {
        "FLOAT_WIDTH": fw,
        "MANTISSA_WIDTH": fmt.mantissa_bits,
        "EXP_WIDTH": fmt.exp_bits,
        "BIAS": fmt.bias,
    }
    nl = Netlist(_ident(name), params)
    order = g.topo_order()

    # ports
    in_names = [_ident(g.nodes[s.node].names[0]) for s in g.inputs]
    out_names = [_ident(k) for k in g.outputs]
    nl.ports.append({"name": "clock", "dir": "input", "width": 1})
    nl.ports.append({"name": "reset", "dir": "input", "width": 1})
    nl.ports.append({"name": "in_valid", "dir": "input", "width": 1})
    for p in in_names:
        nl.ports.append({"name": p, "dir": "input", "width": fw})
    nl.ports.append({"name": "out_valid", "dir": "output", "width": 1})
    for p in out_names:
        nl.ports.append({"name": p, "dir": "output", "width": fw})
    namer = _Namer(["clock", "reset", "in_valid", "out_valid", "window_valid", "valid_reg"]
                   + in_names + out_names)

    # one net name per signal; outputs driven directly when the label matches
    port_of = {s: _ident(k) for k, s in g.outputs.items()}
    net: dict[Signal, str] = {}
    for s, p in zip(g.inputs, in_names):
        net[s] = p
    for i in order:
        n = g.nodes[i]
        if n.kind in ("input", "delay"):
            continue
        for s in n.outputs():
            base = _ident(g.name(s))
            if port_of.get(s) == base:
                net[s] = base
                continue
            net[s] = namer.fresh(base)
            if n.kind == "const":
                nl.literals.append({"name": net[s], "value": _hex(n.params["bits"], fw),
                                    "real": n.params.get("value")})
            else:
                nl.nets.append({"name": net[s], "width": fw})

    # delays become register arrays; consumers read the last stage
    for i in order:
        n = g.nodes[i]
        if n.kind != "delay":
            continue
        src = n.inputs[0]
        cons = n.params.get("consumer")
        if cons is not None and cons in g.nodes:
            c = g.nodes[cons]
            port = next((k for k, s in enumerate(c.inputs) if s == n.outputs()[0]), 0)
            base = f"{_ident(n.params['signal'])}_{c.kind}_i{port}_reg"
        else:
            base = f"{_ident(n.params['signal'])}_out_reg"
        reg = namer.fresh(base)
        depth = n.params["cycles"]
        nl.registers.append({"name": reg, "width": fw, "depth": depth, "source": net[src]})
        net[n.outputs()[0]] = f"{reg}[{depth - 1}]"

    # instances
    counters: dict[str, int] = {}
    for i in order:
        n = g.nodes[i]
        if n.kind in ("input", "const", "delay"):
            continue
        typ = INSTANCE_TYPES[n.kind]
        k = counters.get(n.kind, 0)
        counters[n.kind] = k + 1
        inst = {"name": f"u_{n.kind}{k}", "type": typ, "latency": g.model.latency(n.kind) if g.model else 0}
        conns: dict[str, str] = {}
        sequential = inst["latency"] > 0 or n.kind == "window"
        if sequential:
            conns["clock"] = "clock"
            conns["reset"] = "reset"
        if n.kind == "window":
            p = n.params
            inst["parameters"] = {
                "H": p["height"],
                "W": p["width"],
                "IMAGE_HEIGHT": p["image_height"],
                "IMAGE_WIDTH": p["image_width"],
                "BORDER": p["border"],
            }
            inst["attributes"] = {"ram_write_edge": "negedge", "ram_read_edge": "posedge"}
            conns["in_valid"] = "in_valid"
            conns["pix"] = net[n.inputs[0]]
            conns["out_valid"] = "window_valid"
            for j, s in enumerate(n.outputs()):
                conns[f"w{j}"] = net[s]
        else:
            for j, s in enumerate(n.inputs):
                conns[_IN_PORTS[j]] = net[s]
            outs = _OUT_PORTS.get(n.kind, ("y",))
            for j, s in enumerate(n.outputs()):
                conns[outs[j]] = net[s]
            if n.kind in ("rsh", "lsh"):
                inst["parameters"] = {"SHIFT": n.params["n"]}
            tables = _UNIT_TABLES.get(n.kind)
            if n.kind == "exp2":
                tables = ("exp2", "recip") if units.exp2_negative == "reciprocal" else ("exp2",)
            if tables:
                tab = units.tables()
                inst["tables"] = [
                    {"name": t, "degree": tab[t].degree, "segments": tab[t].segments} for t in tables
                ]
        inst["ports"] = conns
        nl.instances.append(inst)

    for k, s in g.outputs.items():
        if net[s] != _ident(k):
            nl.assigns.append({"lhs": _ident(k), "rhs": net[s]})

    depth = g.depth()
    win = g.windows()
    nl.valid = {
        "source": "window_valid" if win else "in_valid",
        "depth": depth,
    }
    return nl


# --------------------------------------------------------------------------
# rendering


def render_hdl(n: Netlist) -> str:
    """Verilog-flavoured text of ``n``; byte-stable for equal netlists."""
    fw_decl = "[FLOAT_WIDTH-1:0] "
    out = [f"// {n.module}: generated structural netlist", f"module {n.module} #("]
    plist = list(n.parameters.items())
    for k, (key, val) in enumerate(plist):
        sep = "," if k < len(plist) - 1 else ""
        out.append(f"    parameter {key} = {val}{sep}")
    out.append(") (")
    for k, p in enumerate(n.ports):
        width = fw_decl if p["width"] > 1 else ""
        kw = "input " if p["dir"] == "input" else "output"
        sep = "," if k < len(n.ports) - 1 else ""
        out.append(f"    {kw} wire {width}{p['name']}{sep}")
    out.append(");")

    if n.literals:
        out.append("")
        for lit in n.literals:
            out.append(f"    localparam {fw_decl}{lit['name']} = {lit['value']};")
    if n.nets or any(i["type"] == "generateWindow" for i in n.instances):
        out.append("")
        if any(i["type"] == "generateWindow" for i in n.instances):
            out.append("    wire window_valid;")
        for w in n.nets:
            out.append(f"    wire {fw_decl}{w['name']};")

    if n.registers:
        out.append("")
        for r in n.registers:
            out.append(f"    reg {fw_decl}{r['name']} [0:{r['depth'] - 1}];")
        out.append("    integer i;")
        out.append("    always @(posedge clock) begin")
        for r in n.registers:
            out.append(f"        {r['name']}[0] <= {r['source']};")
            if r["depth"] > 1:
                out.append(f"        for (i = 1; i < {r['depth']}; i = i + 1) {r['name']}[i] <= {r['name']}[i-1];")
        out.append("    end")

    for inst in n.instances:
        out.append("")
        if "attributes" in inst:
            attrs = ", ".join(f"{k}={v}" for k, v in inst["attributes"].items())
            out.append(f"    // line buffers: {attrs}")
        params = {"FLOAT_WIDTH": "FLOAT_WIDTH", "MANTISSA_WIDTH": "MANTISSA_WIDTH",
                  "EXP_WIDTH": "EXP_WIDTH", "BIAS": "BIAS"}
        for k, v in inst.get("parameters", {}).items():
            params[k] = f'"{v}"' if isinstance(v, str) else str(v)
        ptxt = ", ".join(f".{k}({v})" for k, v in params.items())
        conns = list(inst["ports"].items())
        out.append(f"    {inst['type']} #({ptxt}) {inst['name']} (")
        for k, (port, sig) in enumerate(conns):
            sep = "," if k < len(conns) - 1 else ""
            out.append(f"        .{port}({sig}){sep}")
        out.append("    );")

    depth = n.valid.get("depth", 0) if n.valid else 0
    src = n.valid.get("source", "in_valid") if n.valid else "in_valid"
    out.append("")
    if depth > 0:
        out.append(f"    reg valid_reg [0:{depth - 1}];")
        out.append("    integer v;")
        out.append("    always @(posedge clock) begin")
        out.append(f"        valid_reg[0] <= reset ? 1'b0 : {src};")
        if depth > 1:
            out.append(f"        for (v = 1; v < {depth}; v = v + 1) valid_reg[v] <= reset ? 1'b0 : valid_reg[v-1];")
        out.append("    end")
        out.append(f"    assign out_valid = valid_reg[{depth - 1}];")
    else:
        out.append(f"    assign out_valid = {src};")
    for a in n.assigns:
        out.append(f"    assign {a['lhs']} = {a['rhs']};")
    out.append("endmodule")
    return "\n".join(out) + "\n"


def instance_census(n: Netlist) -> dict[str, int]:
    """Graph-kind counts recovered from a netlist (delays as ``delay``)."""
    back = {v: k for k, v in INSTANCE_TYPES.items()}
    out: dict[str, int] = {}
    for inst in n.instances:
        k = back[inst["type"]]
        out[k] = out.get(k, 0) + 1
    if n.registers:
        out["delay"] = len(n.registers)
    return dict(sorted(out.items()))


def hdl_census(text: str) -> dict[str, int]:
    """Instance counts read back from rendered text (by module name)."""
    back = {v: k for k, v in INSTANCE_TYPES.items()}
    out: dict[str, int] = {}
    for m in re.finditer(r"^    (\w+) #\(", text, flags=re.M):
        k = back.get(m.group(1))
        if k:
            out[k] = out.get(k, 0) + 1
    regs = len(re.findall(r"^    reg \[", text, flags=re.M))
    if regs:
        out["delay"] = regs
    return dict(sorted(out.items()))


# --------------------------------------------------------------------------
# resources


@dataclass
class ResourceReport:
    multipliers: int
    line_buffer_bits: int
    register_bits: int
    table_entries: int
    instances: dict

    def text(self) -> str:
        rows = [
            ("multipliers (DSP proxy)", self.multipliers),
            ("line-buffer bits (BRAM proxy)", self.line_buffer_bits),
            ("register bits (FF proxy)", self.register_bits),
            ("coefficient table entries", self.table_entries),
        ]
        rows += [(f"instances {k}", v) for k, v in self.instances.items()]
        width = max(len(k) for k, _ in rows)
        return "\n".join(f"{k:<{width}}  {v:>10}" for k, v in rows) + "\n"

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2) + "\n"


def estimate_resources(n: Netlist) -> ResourceReport:
    """Coarse counts: multipliers, line buffers, flip-flops and table sizes.

    Register bits cover delay chains, operator pipeline stages (latency times
    output width), window registers and the valid-flag chain.
    """
    fw = n.parameters["FLOAT_WIDTH"]
    muls = sum(1 for i in n.instances if i["type"] == "FP_MULT")
    lb = 0
    regs = sum(r["depth"] * r["width"] for r in n.registers)
    entries = 0
    for inst in n.instances:
        if inst["type"] == "generateWindow":
            p = inst["parameters"]
            lb += (p["H"] - 1) * p["IMAGE_WIDTH"] * fw
            regs += p["H"] * p["W"] * fw
            continue
        n_out = 2 if inst["type"] == "FP_CAS" else 1
        regs += inst["latency"] * n_out * fw
        for t in inst.get("tables", ()):
            entries += t["segments"] * (t["degree"] + 1)
    regs += n.valid.get("depth", 0) if n.valid else 0
    return ResourceReport(muls, lb, regs, entries, instance_census(n))
