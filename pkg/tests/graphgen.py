"""Random dataflow graphs for scheduling properties."""

import numpy as np

from fpforge.dfg import DfGraph
from fpforge.formats import FLOAT16, from_real

BINARY = ("add", "sub", "mul", "div", "max", "cas")
UNARY = ("neg", "sqrt", "log2", "exp2", "rsh", "lsh")


def random_graph(rng: np.random.Generator, max_nodes: int = 20) -> DfGraph:
    """Up to ``max_nodes`` nodes: 1-3 inputs, occasional constants, 1-3 outputs."""
    g = DfGraph(fmt=FLOAT16)
    pool = [g.input(f"x{i}") for i in range(int(rng.integers(1, 4)))]
    while len(g.nodes) < max_nodes:
        r = rng.random()
        if r < 0.1:
            pool.append(g.const(from_real(float(rng.uniform(-4, 4)), FLOAT16).bits))
            continue
        pick = lambda: pool[int(rng.integers(len(pool)))]  # noqa: E731
        if r < 0.6:
            kind = BINARY[int(rng.integers(len(BINARY)))]
            out = g.add(kind, [pick(), pick()])
            pool.extend(out if isinstance(out, list) else [out])
        else:
            kind = UNARY[int(rng.integers(len(UNARY)))]
            params = {"n": int(rng.integers(1, 4))} if kind in ("rsh", "lsh") else None
            pool.append(g.add(kind, [pick()], params))
    timed = [s for s in pool if not g.is_const(s) and g.node(s).kind != "input"] or pool
    for k in range(int(rng.integers(1, 4))):
        g.output(f"y{k}", timed[-1 - int(rng.integers(min(len(timed), 6)))])
    return g


def random_inputs(g: DfGraph, rng: np.random.Generator, n: int = 256) -> dict:
    return {g.node(s).names[0]: rng.integers(0, 1 << 16, n) for s in g.inputs}


def fanin_balanced(g: DfGraph) -> bool:
    """Every node sees one latency on all of its non-constant inputs."""
    for node in g.nodes.values():
        lats = {g.latency[s] for s in node.inputs if not g.is_const(s)}
        if len(lats) > 1:
            return False
    return True
