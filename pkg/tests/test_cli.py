import json

import numpy as np
import pytest

from fpforge.cli import main
from fpforge.sim import read_pnm, write_pnm


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_compile_writes_artifacts(capsys, tmp_path):
    code, out, _ = run(capsys, "compile", "fp_func", "--out", tmp_path)
    assert code == 0
    assert "Δ(m,s)=4" in out and "pipeline depth: 18" in out
    for ext in ("netlist", "sv", "latency.txt", "resources.txt", "resources.json"):
        assert (tmp_path / f"fp_func.{ext}").exists()
    assert json.loads((tmp_path / "fp_func.netlist").read_text())["module"] == "fp_func"


def test_compile_table1_profile(capsys, tmp_path):
    code, out, _ = run(capsys, "compile", "fp_func", "--latency-profile", "table1", "--out", tmp_path)
    assert code == 0 and "mul=1" in out and "latency profile: table1" in out


def test_compile_kernel_override(capsys, tmp_path):
    k = tmp_path / "k.txt"
    k.write_text("0.11111 0.11111 0.11111\n0.11111 6.75 0.11111\n0.11111 0.11111 0.11111\n")
    code, _, _ = run(capsys, "compile", "conv3x3", "--kernel", k, "--out", tmp_path)
    assert code == 0
    assert "16'h46c0" in (tmp_path / "conv3x3.sv").read_text()
    k.write_text("1 1 1 1 1\n" * 5)
    code, _, err = run(capsys, "compile", "conv3x3", "--kernel", k, "--out", tmp_path)
    assert code == 1 and "override is 5x5" in err


def test_missing_file_and_syntax_error(capsys, tmp_path):
    code, _, err = run(capsys, "compile", tmp_path / "nope.dsl")
    assert code == 2 and "no such file" in err
    bad = tmp_path / "bad.dsl"
    bad.write_text("float16(10,5)\ninput x\noutput z\nfloat x, z\nz = x +\n")
    code, _, err = run(capsys, "compile", bad, "--out", tmp_path)
    assert code == 1 and err.strip().endswith("bad.dsl:5:8: expected an expression, got end of line")


def test_bad_format_flag(capsys):
    code, _, err = run(capsys, "compile", "fp_func", "--format", "float16(10,4)")
    assert code == 1 and err


@pytest.mark.parametrize("name", ["sobel", "median"])
def test_simulate_random_frames(capsys, tmp_path, name):
    code, out, _ = run(capsys, "simulate", name, "--geometry", "24x16@30x18", "--frames", "2",
                       "--check-oracle", "--out", tmp_path)
    assert code == 0 and "PASS bit-exact" in out
    assert "540 cycles/frame" in out
    assert read_pnm(tmp_path / f"{name}_001.pgm").shape == (16, 24)


def test_simulate_image_file(capsys, tmp_path):
    img = np.random.default_rng(3).integers(0, 256, (9, 11, 3)).astype(np.uint8)
    write_pnm(tmp_path / "in.ppm", img)
    code, out, _ = run(capsys, "simulate", "nlfilter", "--input", tmp_path / "in.ppm", "--border", "mirror",
                       "--check-oracle", "--backend", "numpy", "--out", tmp_path)
    assert code == 0 and "PASS bit-exact" in out
    assert read_pnm(tmp_path / "nlfilter_000.ppm").shape == img.shape
    code, _, err = run(capsys, "simulate", "nlfilter", "--input", tmp_path / "in.ppm", "--geometry", "720p")
    assert code == 1 and "resolution mismatch" in err


def test_simulate_values(capsys, tmp_path):
    vals = tmp_path / "v.csv"
    vals.write_text("x,y\n1.5,2.5\n3,4\n100,0.25\n")
    code, out, _ = run(capsys, "simulate", "fp_func", "--values", vals, "--check-oracle", "--out", tmp_path)
    assert code == 0 and "PASS bit-exact" in out
    assert "first valid output cycle: 18" in out
    assert (tmp_path / "fp_func.out.csv").read_text().startswith("z\n")
    code, _, err = run(capsys, "simulate", "fp_func")
    assert code == 1 and "--values" in err


def test_fit(capsys, tmp_path):
    code, out, _ = run(capsys, "fit", "--func", "sqrt", "-d", "2", "-n", "4")
    assert code == 0 and "max abs error" in out and "builtin table max abs error" in out
    code, out, _ = run(capsys, "fit", "--func", "expr", "--expr", "sin(x)", "--domain", "0", "1.5",
                       "-n", "8", "--out", tmp_path / "sin.csv")
    assert code == 0 and float(out.split("max abs error:")[1].split()[0]) < 1e-3
    assert (tmp_path / "sin.csv").exists()
    code, _, err = run(capsys, "fit", "--func", "recip", "-n", "3")
    assert code == 1 and "power of two" in err


def test_report(capsys):
    code, out, _ = run(capsys, "report")
    assert code == 0 and "353.57" in out and "120.00" in out and "60.00" in out
    code, out, _ = run(capsys, "report", "median", "--json")
    assert code == 0 and json.loads(out)["multipliers"] == 0
    code, out, _ = run(capsys, "report", "conv5x5", "--geometry", "720p")
    assert code == 0 and "pipeline depth: 32" in out and "multipliers" in out
