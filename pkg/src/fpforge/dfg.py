"""Dataflow-graph IR, latency model and the latency-matching scheduler.

Nodes produce one or more output :class:`Signal` references.  After
:func:`schedule`, every signal carries a latency (cycles since the pipeline
input) and every multi-input node sees equal latencies on its inputs, with
explicit ``delay`` nodes padding the early operands.  Constants are timeless:
they never take part in the latency match and are never delayed.
"""

from __future__ import annotations

import copy
from collections import deque
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "LatencyModel",
    "Signal",
    "Node",
    "DfGraph",
    "GraphError",
    "schedule",
    "add_tree",
    "tree_reduce",
    "build_adder_tree",
    "sort5",
    "build_sort5",
    "SORT5_NETWORK",
    "stage_count",
    "ceil_log2",
    "LatencyReport",
    "latency_report",
    "evaluate",
    "ARITY",
]


class GraphError(ValueError):
    """Malformed graph (cycles, bad arity, unscheduled use)."""


# kind -> (number of inputs, number of outputs)
ARITY = {
    "input": (0, 1),
    "const": (0, 1),
    "window": (1, None),  # H*W outputs
    "delay": (1, 1),
    "neg": (1, 1),
    "add": (2, 1),
    "sub": (2, 1),
    "mul": (2, 1),
    "div": (2, 1),
    "max": (2, 1),
    "cas": (2, 2),
    "rsh": (1, 1),
    "lsh": (1, 1),
    "sqrt": (1, 1),
    "log2": (1, 1),
    "exp2": (1, 1),
}

# kinds with no arithmetic content
STRUCTURAL = frozenset({"input", "const", "window", "delay"})


@dataclass(frozen=True)
class LatencyModel:
    """Cycles per operator kind; polynomial units add their degree."""

    add: int = 6
    mul: int = 2
    max: int = 1
    fp_shift: int = 1
    cas: int = 2
    float2fix: int = 1
    fix2float: int = 1
    d_div: int = 3
    d_exp: int = 2
    d_log: int = 2
    d_sqrt: int = 2
    name: str = "default"

    PROFILES = ("default", "table1")

    @classmethod
    def profile(cls, name: str = "default") -> "LatencyModel":
        if name == "default":
            return cls()
        if name == "table1":
            return cls(mul=1, name="table1")
        raise ValueError(f"unknown latency profile {name!r}; expected one of {cls.PROFILES}")

    def latency(self, kind: str) -> int:
        table = {
            "add": self.add,
            "sub": self.add,
            "mul": self.mul,
            "max": self.max,
            "rsh": self.fp_shift,
            "lsh": self.fp_shift,
            "cas": self.cas,
            "div": self.d_div + 4,
            "exp2": self.d_exp + 4,
            "log2": self.d_log + 3,
            "sqrt": self.d_sqrt + 3,
            "float2fix": self.float2fix,
            "fix2float": self.fix2float,
            "neg": 0,
            "input": 0,
            "const": 0,
            "window": 0,
        }
        try:
            return table[kind]
        except KeyError:
            raise GraphError(f"no latency for operator kind {kind!r}") from None


@dataclass(frozen=True, order=True)
class Signal:
    """Reference to output ``port`` of node ``node``."""

    node: int
    port: int = 0


@dataclass
class Node:
    id: int
    kind: str
    inputs: list[Signal]
    params: dict = field(default_factory=dict)
    n_out: int = 1
    names: list[str | None] = field(default_factory=list)

    def outputs(self) -> list[Signal]:
        return [Signal(self.id, p) for p in range(self.n_out)]


class DfGraph:
    """Mutable graph under construction; :func:`schedule` returns a timed copy."""

    def __init__(self, width: int = 16, fmt=None):
        self.width = fmt.width if fmt is not None else width
        self.fmt = fmt
        self.nodes: dict[int, Node] = {}
        self.inputs: list[Signal] = []
        self.outputs: dict[str, Signal] = {}
        self.latency: dict[Signal, int] | None = None
        self.model: LatencyModel | None = None
        self._next = 0

    # -- construction ------------------------------------------------------

    def add(self, kind: str, inputs=(), params=None, name=None, n_out=None):
        """Append a node; returns its Signal (or list of Signals if n_out > 1)."""
        if kind not in ARITY:
            raise GraphError(f"unknown operator kind {kind!r}")
        n_in, default_out = ARITY[kind]
        inputs = list(inputs)
        if len(inputs) != n_in:
            raise GraphError(f"{kind} takes {n_in} inputs, got {len(inputs)}")
        for s in inputs:
            if s.node not in self.nodes or s.port >= self.nodes[s.node].n_out:
                raise GraphError(f"{kind}: dangling input {s}")
        n_out = n_out or default_out or 1
        names = list(name) if isinstance(name, (list, tuple)) else [name] + [None] * (n_out - 1)
        node = Node(self._next, kind, inputs, dict(params or {}), n_out, names)
        self.nodes[node.id] = node
        self._next += 1
        self.latency = None
        outs = node.outputs()
        return outs[0] if n_out == 1 else outs

    def input(self, name: str) -> Signal:
        s = self.add("input", name=name)
        self.inputs.append(s)
        return s

    def const(self, bits: int, value: float | None = None, name: str | None = None) -> Signal:
        return self.add("const", params={"bits": int(bits), "value": value}, name=name)

    def output(self, name: str, sig: Signal) -> None:
        if name in self.outputs:
            raise GraphError(f"output {name!r} bound twice")
        self.outputs[name] = sig

    def copy(self) -> "DfGraph":
        return copy.deepcopy(self)

    # -- queries -----------------------------------------------------------

    def node(self, sig: Signal) -> Node:
        return self.nodes[sig.node]

    def name(self, sig: Signal) -> str:
        n = self.nodes[sig.node]
        label = n.names[sig.port] if sig.port < len(n.names) else None
        return label or f"n{sig.node}" + (f".{sig.port}" if n.n_out > 1 else "")

    def is_const(self, sig: Signal) -> bool:
        return self.nodes[sig.node].kind == "const"

    def count(self, kind: str) -> int:
        return sum(1 for n in self.nodes.values() if n.kind == kind)

    def census(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for n in self.nodes.values():
            out[n.kind] = out.get(n.kind, 0) + 1
        return dict(sorted(out.items()))

    def consumers(self) -> dict[Signal, list[int]]:
        use: dict[Signal, list[int]] = {}
        for n in self.nodes.values():
            for s in n.inputs:
                use.setdefault(s, []).append(n.id)
        return use

    def topo_order(self) -> list[int]:
        indeg = {i: 0 for i in self.nodes}
        succ: dict[int, list[int]] = {i: [] for i in self.nodes}
        for n in self.nodes.values():
            for s in n.inputs:
                indeg[n.id] += 1
                succ[s.node].append(n.id)
        ready = deque(sorted(i for i, d in indeg.items() if d == 0))
        order = []
        while ready:
            i = ready.popleft()
            order.append(i)
            for j in succ[i]:
                indeg[j] -= 1
                if indeg[j] == 0:
                    ready.append(j)
        if len(order) != len(self.nodes):
            raise GraphError("cycle detected in dataflow graph")
        return order

    @property
    def scheduled(self) -> bool:
        return self.latency is not None

    def depth(self) -> int:
        """Pipeline depth: largest output latency."""
        self._need_schedule()
        lats = [self.latency[s] for s in self.outputs.values() if not self.is_const(s)]
        return max(lats, default=0)

    def windows(self) -> list[Node]:
        return [n for n in self.nodes.values() if n.kind == "window"]

    def _need_schedule(self):
        if self.latency is None:
            raise GraphError("graph is not scheduled")

    def dump(self) -> str:
        """One node per line: id, kind, params, input ids, latency."""
        lines = []
        for i in self.topo_order():
            n = self.nodes[i]
            params = ",".join(f"{k}={n.params[k]}" for k in sorted(n.params) if k != "value")
            ins = " ".join(f"{s.node}.{s.port}" for s in n.inputs) or "-"
            if self.latency is None:
                lat = "-"
            else:
                lat = " ".join(str(self.latency[s]) for s in n.outputs()[:1])
            label = ",".join(x for x in n.names if x) or "-"
            lines.append(f"{n.id}\t{n.kind}\t{label}\t{params or '-'}\t{ins}\t{lat}")
        for name, s in self.outputs.items():
            lines.append(f"out\t{name}\t{s.node}.{s.port}")
        return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# scheduling


def schedule(g: DfGraph, lm: LatencyModel | None = None, align_outputs: bool = True) -> DfGraph:
    """Latency-match every fan-in by inserting (merged, shared) delay nodes."""
    lm = lm or LatencyModel()
    out = g.copy()
    lat: dict[Signal, int] = {}
    cache: dict[tuple[Signal, int], Signal] = {}

    def delayed(sig: Signal, n: int, against: Signal | None, consumer: int | None) -> Signal:
        src = out.nodes[sig.node]
        base, total = sig, n
        if src.kind == "delay":
            base, total = src.inputs[0], src.params["cycles"] + n
        key = (base, total)
        if key not in cache:
            params = {"cycles": total, "signal": out.name(base)}
            if against is not None:
                params["against"] = out.name(against)
            if consumer is not None:
                params["consumer"] = consumer
            d = out.add("delay", [base], params)
            lat[d] = lat[base] + total
            cache[key] = d
        return cache[key]

    for i in g.topo_order():
        node = out.nodes[i]
        timed = [s for s in node.inputs if not out.is_const(s)]
        if node.kind == "delay":
            lat[node.outputs()[0]] = lat[node.inputs[0]] + node.params["cycles"]
            cache.setdefault((node.inputs[0], node.params["cycles"]), node.outputs()[0])
            continue
        target = max((lat[s] for s in timed), default=0)
        ref = next((s for s in timed if lat[s] == target), None)
        new_inputs = []
        for s in node.inputs:
            if not out.is_const(s) and lat[s] < target:
                s = delayed(s, target - lat[s], ref, node.id)
            new_inputs.append(s)
        node.inputs = new_inputs
        for o in node.outputs():
            lat[o] = target + lm.latency(node.kind)

    if align_outputs and out.outputs:
        timed = {k: s for k, s in out.outputs.items() if not out.is_const(s)}
        target = max((lat[s] for s in timed.values()), default=0)
        for k, s in timed.items():
            if lat[s] < target:
                out.outputs[k] = delayed(s, target - lat[s], None, None)

    _prune_delays(out)
    for s in list(lat):
        if s.node not in out.nodes:
            del lat[s]
    for n in out.nodes.values():
        if n.kind == "const":
            lat[n.outputs()[0]] = 0
    out.latency = lat
    out.model = lm
    return out


def _prune_delays(g: DfGraph) -> None:
    """Drop delay nodes nothing reads any more."""
    while True:
        used = {s.node for n in g.nodes.values() for s in n.inputs}
        used |= {s.node for s in g.outputs.values()}
        dead = [i for i, n in g.nodes.items() if n.kind == "delay" and i not in used]
        if not dead:
            return
        for i in dead:
            del g.nodes[i]


# --------------------------------------------------------------------------
# structural builders


def tree_reduce(items: list, fn):
    """Reduce in adder-tree order: split N into N0 = 2^floor(log2 N) (halved
    when N is itself a power of two) and the remainder, recursively."""
    n = len(items)
    if n == 0:
        raise GraphError("adder tree needs at least one input")
    if n == 1:
        return items[0]
    n0 = 1 << (n.bit_length() - 1)
    if n0 == n:
        n0 //= 2
    return fn(tree_reduce(items[:n0], fn), tree_reduce(items[n0:], fn))


def add_tree(g: DfGraph, signals: list[Signal]) -> Signal:
    """Balanced adder tree over ``signals`` (see :func:`tree_reduce`)."""
    return tree_reduce(list(signals), lambda a, b: g.add("add", [a, b]))


def build_adder_tree(n: int, lm: LatencyModel | None = None) -> DfGraph:
    """Scheduled graph summing inputs ``x0..x{n-1}`` into output ``sum``."""
    if n < 1:
        raise GraphError("adder tree needs at least one input")
    g = DfGraph()
    xs = [g.input(f"x{i}") for i in range(n)]
    g.output("sum", add_tree(g, xs))
    return schedule(g, lm)


# Bose-Nelson network for five inputs: 9 compare-and-swaps in 6 stages
SORT5_NETWORK = ((0, 1), (3, 4), (2, 4), (2, 3), (0, 3), (0, 2), (1, 4), (1, 3), (1, 2))


def sort5(g: DfGraph, signals: list[Signal]) -> list[Signal]:
    """Ascending order of five signals; index 2 is the median."""
    if len(signals) != 5:
        raise GraphError("sort5 takes exactly five inputs")
    wires = list(signals)
    for i, j in SORT5_NETWORK:
        wires[i], wires[j] = g.add("cas", [wires[i], wires[j]])
    return wires


def build_sort5(lm: LatencyModel | None = None) -> DfGraph:
    g = DfGraph()
    xs = [g.input(f"x{i}") for i in range(5)]
    for k, s in enumerate(sort5(g, xs)):
        g.output(f"a{k}", s)
    return schedule(g, lm)


def stage_count(g: DfGraph, kind: str) -> int:
    """Longest chain of ``kind`` nodes through the graph."""
    depth: dict[int, int] = {}
    for i in g.topo_order():
        n = g.nodes[i]
        d = max((depth[s.node] for s in n.inputs), default=0)
        depth[i] = d + (n.kind == kind)
    return max(depth.values(), default=0)


# --------------------------------------------------------------------------
# reporting


@dataclass
class LatencyReport:
    rows: list[tuple[str, int]]
    delays: list[tuple[str, str | None, int]]
    depth: int
    model: str

    def delay(self, signal: str, against: str | None = None) -> int:
        """Total cycles inserted on ``signal`` (optionally versus one sibling)."""
        hits = [c for s, a, c in self.delays if s == signal and (against is None or a == against)]
        if not hits:
            return 0
        return max(hits)

    def latency(self, signal: str) -> int:
        for s, lam in self.rows:
            if s == signal:
                return lam
        raise KeyError(signal)

    def text(self) -> str:
        lines = [f"latency profile: {self.model}", "signal\tlatency"]
        lines += [f"{s}\t{lam}" for s, lam in self.rows]
        lines.append("delays")
        for s, a, c in self.delays:
            lines.append(f"Δ({s},{a})={c}" if a else f"Δ({s})={c}")
        lines.append(f"pipeline depth: {self.depth}")
        return "\n".join(lines) + "\n"


def latency_report(g: DfGraph) -> LatencyReport:
    g._need_schedule()
    rows = []
    delays = []
    for i in g.topo_order():
        n = g.nodes[i]
        if n.kind == "delay":
            delays.append((n.params["signal"], n.params.get("against"), n.params["cycles"]))
            continue
        if n.kind == "const":
            continue
        for p, s in enumerate(n.outputs()):
            if p < len(n.names) and n.names[p]:
                rows.append((g.name(s), g.latency[s]))
    for name, s in g.outputs.items():
        if name not in {r[0] for r in rows}:
            rows.append((name, g.latency[s]))
    return LatencyReport(rows, delays, g.depth(), g.model.name if g.model else "default")


# --------------------------------------------------------------------------
# untimed evaluation


def evaluate(g: DfGraph, inputs: dict, arith, windows=None) -> dict:
    """Evaluate the graph combinationally (delays are identities).

    ``inputs`` maps input names to pattern arrays; ``windows`` maps window node
    ids (or a single array for the only window) to tap arrays of shape
    ``(..., H*W)``.  Returns output name -> pattern array.
    """
    vals: dict[Signal, object] = {}
    wins = windows
    for i in g.topo_order():
        n = g.nodes[i]
        ins = [vals[s] for s in n.inputs]
        k = n.kind
        if k == "input":
            # a stream that only feeds the window generator may be omitted
            res = arith.asarray(inputs[n.names[0]]) if n.names[0] in inputs or wins is None else None
        elif k == "const":
            res = n.params["bits"]
        elif k == "window":
            taps = wins[n.id] if isinstance(wins, dict) else wins
            for p in range(n.n_out):
                vals[Signal(i, p)] = taps[..., p]
            continue
        elif k == "delay":
            res = ins[0]
        elif k == "cas":
            lo, hi = arith.cas(*ins)
            vals[Signal(i, 0)], vals[Signal(i, 1)] = lo, hi
            continue
        elif k in ("rsh", "lsh"):
            res = getattr(arith, k)(ins[0], n.params["n"])
        else:
            res = getattr(arith, k)(*ins)
        vals[Signal(i, 0)] = res
    shape = None
    for v in vals.values():
        if isinstance(v, np.ndarray):
            shape = v.shape
            break
    out = {}
    for name, s in g.outputs.items():
        v = vals[s]
        if not isinstance(v, np.ndarray) and shape is not None:
            v = np.full(shape, v, dtype=arith.dtype)
        out[name] = v
    return out


def ceil_log2(n: int) -> int:
    return (n - 1).bit_length() if n > 1 else 0
