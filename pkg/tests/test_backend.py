import json

import numpy as np
import pytest

from fpforge.backend import (
    INSTANCE_TYPES,
    Netlist,
    emit_netlist,
    estimate_resources,
    hdl_census,
    instance_census,
    render_hdl,
)
from fpforge.compiler import compile_file, compile_program
from fpforge.dfg import DfGraph, GraphError
from fpforge.filters import CORPUS, corpus_path


@pytest.fixture(scope="module")
def compiled():
    return {name: compile_file(corpus_path(name)) for name in CORPUS}


def test_fp_func_netlist(compiled):
    n = compiled["fp_func"].netlist()
    assert n.module == "fp_func"
    assert n.parameters == {"FLOAT_WIDTH": 16, "MANTISSA_WIDTH": 10, "EXP_WIDTH": 5, "BIAS": 15}
    assert [p["name"] for p in n.ports] == ["clock", "reset", "in_valid", "x", "y", "out_valid", "z"]
    assert n.registers == [{"name": "m_div_i0_reg", "width": 16, "depth": 4, "source": "m"}]
    div = next(i for i in n.instances if i["type"] == "FP_DIV")
    assert div["ports"]["a"] == "m_div_i0_reg[3]" and div["ports"]["b"] == "s"
    assert div["latency"] == 7
    assert n.valid == {"source": "in_valid", "depth": 18}


@pytest.mark.parametrize("name", CORPUS)
def test_census_matches_graph(compiled, name):
    res = compiled[name]
    n = res.netlist()
    census = {k: v for k, v in res.scheduled.census().items() if k not in ("input", "const")}
    assert instance_census(n) == census
    assert hdl_census(render_hdl(n)) == census
    assert all(i["type"] in INSTANCE_TYPES.values() for i in n.instances)


@pytest.mark.parametrize("name", CORPUS)
def test_json_round_trip_and_determinism(compiled, name, tmp_path):
    n = compiled[name].netlist()
    n.save(tmp_path / "a.netlist")
    again = Netlist.load(tmp_path / "a.netlist")
    assert again == n
    assert json.loads(n.to_json())["module"] == name
    assert render_hdl(again) == render_hdl(compiled[name].netlist())


def test_literal_hex_of_kernel_override():
    k = np.full((3, 3), 0.11111)
    k[1, 1] = 6.75
    n = compile_file(corpus_path("conv3x3"), kernel=k).netlist()
    lit = {x["name"]: x for x in n.literals}
    assert lit["K_1_1"]["value"] == "16'h46c0"
    assert "localparam [FLOAT_WIDTH-1:0] K_1_1 = 16'h46c0;" in render_hdl(n)


def test_window_instance(compiled):
    n = compiled["median"].netlist()
    (win,) = [i for i in n.instances if i["type"] == "generateWindow"]
    assert win["parameters"]["H"] == 3 and win["parameters"]["IMAGE_WIDTH"] == 1920
    assert win["attributes"] == {"ram_write_edge": "negedge", "ram_read_edge": "posedge"}
    assert [win["ports"][f"w{k}"] for k in (0, 4, 8)] == ["w_0_0", "w_1_1", "w_2_2"]
    assert win["ports"]["pix"] == "pix_i"


def test_passthrough_is_a_wire():
    res = compile_program("float16(10,5)\ninput x\noutput z\nfloat x, z\nz = x\n")
    n = res.netlist()
    assert n.instances == [] and n.registers == []
    assert n.assigns == [{"lhs": "z", "rhs": "x"}]
    assert "assign z = x;" in render_hdl(n)


def test_unscheduled_graph_rejected():
    g = DfGraph()
    g.output("y", g.add("neg", [g.input("x")]))
    with pytest.raises(GraphError):
        emit_netlist(g)


def test_resources(compiled):
    fp = estimate_resources(compiled["fp_func"].netlist())
    # 4-deep delay + per-unit output registers + valid chain
    assert fp.register_bits == 4 * 16 + (2 + 6 + 7 + 5) * 16 + 18
    assert fp.multipliers == 1 and fp.line_buffer_bits == 0
    assert fp.table_entries == 2 * 3 * 4
    med = estimate_resources(compiled["median"].netlist())
    assert med.multipliers == 0
    assert med.line_buffer_bits == 2 * 1920 * 16
    c5 = estimate_resources(compiled["conv5x5"].netlist())
    assert c5.multipliers == 25 and c5.line_buffer_bits == 4 * 1920 * 16
    nl = estimate_resources(compiled["nlfilter"].netlist())
    assert nl.table_entries == 84
    assert "multipliers" in nl.text() and json.loads(nl.to_json())["multipliers"] == nl.multipliers


def test_resolution_scales_line_buffers():
    r = compile_file(corpus_path("conv3x3"), resolution=(640, 480))
    assert r.resources().line_buffer_bits == 2 * 640 * 16
