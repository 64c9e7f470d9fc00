import numpy as np
import pytest

from fpforge.compiler import compile_file, compile_program, override_kernel
from fpforge.dfg import evaluate
from fpforge.dsl import DslError, analyze, interpret, lower, parse, parse_border, to_source, tokenize
from fpforge.filters import CORPUS, corpus_path
from fpforge.formats import FLOAT16, FloatFormat, from_real
from fpforge.kernels import ArrayArith

HEADER = "float16(10,5)\ninput x\noutput z\nfloat x, z\n"


def analyse(text, filename="t.dsl"):
    return analyze(parse(text, filename))


@pytest.mark.parametrize("name", CORPUS)
def test_corpus_round_trips_through_printer(name):
    text = corpus_path(name).read_text()
    p = parse(text)
    again = parse(to_source(p))
    assert to_source(again) == to_source(p)
    assert analyze(again).outputs == analyze(p).outputs


def test_tokenizer_positions():
    toks = tokenize("z = x >> 1\n")
    assert [(t.text, t.line, t.col) for t in toks[:3]] == [("z", 1, 1), ("=", 1, 3), ("x", 1, 5)]
    with pytest.raises(DslError, match="unexpected character"):
        tokenize("z = x $ 1\n")


@pytest.mark.parametrize(
    "body,where,msg",
    [
        ("z = y + 1\n", "5:5", "undeclared identifier 'y'"),
        ("z = x +\n", "5:8", "expected an expression"),
        ("x = 1\nz = x\n", "5:1", "cannot assign to input 'x'"),
        ("z = x\nz = x\n", "6:1", "reassignment of 'z'"),
        ("z = sqrt(x, x)\n", "5:5", "sqrt takes 1 argument"),
        ("z = cmp_and_swap(x, x)\n", "5:5", "returns two values"),
        ("for i = 0:1\nz = x\n", "", "missing 'end'"),
        ("float a[2]\nz = a[2]\n", "6:5", "out of range"),
    ],
)
def test_diagnostics_carry_positions(body, where, msg):
    with pytest.raises(DslError) as exc:
        analyse(HEADER + body)
    text = str(exc.value)
    assert text.startswith("t.dsl:" + where)
    assert msg in text


def test_missing_format_and_width_mismatch():
    with pytest.raises(DslError, match="missing format declaration"):
        analyse("input x\noutput z\nfloat x, z\n")
    with pytest.raises(DslError, match="width must be"):
        analyse("float16(10,4)\n")


def test_output_must_be_assigned():
    with pytest.raises(DslError, match="never assigned"):
        analyse(HEADER)


def test_custom_format_declared():
    tp = analyse("float24(16,7)\ninput x\noutput z\nfloat x, z\nz = x * x\n")
    assert tp.fmt == FloatFormat(16, 7)


def test_loops_unroll_and_constants_fold():
    tp = analyse(HEADER + "float a[3]\nfor i = 0:2\na[i] = x * (i + 1)\nend\nz = a[0] + a[2]\n")
    g = lower(tp)
    # a[1] stays in the graph and no algebraic simplification is attempted
    assert g.census() == {"add": 1, "const": 3, "input": 1, "mul": 3}
    g = lower(analyse(HEADER + "z = x * (2 + 1)\n"))
    consts = [n for n in g.nodes.values() if n.kind == "const"]
    assert [n.params["bits"] for n in consts] == [from_real(3.0, FLOAT16).bits]


@pytest.mark.parametrize(
    "name,census",
    [
        ("fp_func", {"add": 1, "div": 1, "mul": 1, "sqrt": 1}),
        ("conv3x3", {"add": 8, "mul": 9}),
        ("conv5x5", {"add": 24, "mul": 25}),
        ("median", {"add": 1, "cas": 18, "rsh": 1}),
        ("nlfilter", {"cas": 1, "div": 1, "exp2": 1, "log2": 2, "sqrt": 2, "max": 9}),
    ],
)
def test_lowered_operator_counts(name, census):
    g = compile_file(corpus_path(name)).graph
    for kind, n in census.items():
        assert g.count(kind) == n, kind


def test_interpreter_matches_graph_evaluation(rng):
    res = compile_file(corpus_path("fp_func"))
    a = ArrayArith(FLOAT16)
    xs = a.from_float(rng.uniform(0.1, 100, 64))
    ys = a.from_float(rng.uniform(0.1, 100, 64))
    graph = evaluate(res.scheduled, {"x": xs, "y": ys}, a)["z"]
    for k in range(64):
        fx = res.program.fmt
        out = interpret(res.program, {"x": from_real(float(a.to_float(xs[k])), fx),
                                      "y": from_real(float(a.to_float(ys[k])), fx)})
        assert out["z"].bits == graph[k]


def test_interpreter_on_a_window(rng):
    res = compile_file(corpus_path("nlfilter"))
    a = ArrayArith(FLOAT16)
    win = rng.integers(0, 256, (3, 3)).astype(float)
    taps = a.from_float(win.reshape(1, 9))
    graph = evaluate(res.scheduled, {}, a, windows=taps)["pix_o"][0]
    cells = [[from_real(float(v), FLOAT16) for v in row] for row in win]
    assert interpret(res.program, window=cells)["pix_o"].bits == graph


def test_parse_border():
    assert parse_border("constant:7") == ("constant", 7.0)
    assert parse_border("mirror") == ("mirror", 0.0)
    assert parse_border("reflect") == ("reflect", 0.0)
    with pytest.raises(ValueError):
        parse_border("wrap")


def test_window_needs_resolution():
    text = HEADER.replace("float x, z", "float x, z\nfloat w[3][3]") + "w = sliding_window(x)\nz = w[1][1]\n"
    with pytest.raises(DslError, match="6:5: sliding_window needs image_resolution"):
        compile_program(text)
    g = compile_program(text, resolution=(8, 6)).graph
    win = g.windows()[0]
    assert (win.params["image_width"], win.params["image_height"]) == (8, 6)


def test_kernel_override():
    tp = analyze(parse(corpus_path("conv3x3").read_text()))
    k = np.arange(9, dtype=float).reshape(3, 3)
    res = compile_program(corpus_path("conv3x3").read_text(), kernel=k)
    vals = sorted(n.params["value"] for n in res.graph.nodes.values() if n.kind == "const")
    assert vals == sorted(k.reshape(-1).tolist())
    with pytest.raises(DslError, match="override is 5x5"):
        override_kernel(tp, np.ones((5, 5)))


def test_program_name_defaults():
    assert compile_program(HEADER + "z = x\n").name == "top"
    assert compile_file(corpus_path("median")).name == "median"
