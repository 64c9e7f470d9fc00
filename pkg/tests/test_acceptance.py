"""Acceptance suite: one PASS/FAIL line per criterion.

Run with ``pytest -s tests/test_acceptance.py`` (the lines are printed even
without ``-s``).  Each check also asserts its wall-clock budget; JIT
compilation happens in the session warm-up fixture, not inside the timers.
"""

import time

import numpy as np
import pytest
from graphgen import fanin_balanced, random_graph, random_inputs

from fpforge.arith import fp_add, fp_mul
from fpforge.compiler import compile_file
from fpforge.dfg import build_adder_tree, build_sort5, ceil_log2, evaluate, latency_report, schedule, stage_count
from fpforge.filters import FILTERS, corpus_path, oracle_for
from fpforge.formats import FLOAT16, decode, encode, from_real
from fpforge.kernels import ArrayArith
from fpforge.polyapprox import (
    DOMAINS,
    EXP2_TABLE,
    LOG2_TABLE,
    RECIP_TABLE,
    SQRT_TABLE,
    TRUE_FUNCTIONS,
    fit_coefficients,
    poly_eval,
)
from fpforge.sim import PRESETS, BorderMode, StreamGeometry, WindowSpec, ingest, run_stream

L_ADD = 6


@pytest.fixture
def verdict(capsys):
    def emit(n: int, title: str, ok: bool, detail: str, elapsed: float, limit: float):
        ok = ok and elapsed < limit
        line = f"{'PASS' if ok else 'FAIL'}  criterion {n:>2}  {title}: {detail}  ({elapsed * 1e3:.2f} ms, limit {limit * 1e3:g} ms)"
        with capsys.disabled():
            print("\n" + line)
        assert ok, line

    return emit


def test_criterion_01_hex_anchor(verdict):
    t = time.perf_counter()
    v = from_real(6.75, FLOAT16)
    code = encode(v)
    dt = time.perf_counter() - t
    verdict(1, "hex anchor", code == 0x46C0, f"from_real(6.75) -> 0x{code:04x}", dt, 1e-3)


def test_criterion_02_latency_ledger(verdict):
    t = time.perf_counter()
    fp = latency_report(compile_file(corpus_path("fp_func")).scheduled)
    nl = latency_report(compile_file(corpus_path("nlfilter")).scheduled)
    dt = time.perf_counter() - t
    got = {
        "Δ(m,s)": fp.delay("m", "s"),
        "λ(f_beta)": nl.latency("f1"),
        "λ(f_delta)": nl.latency("f2"),
        "delay before cmp": nl.delay("f2", "f1"),
        "λ(f_phi)": nl.latency("g"),
        "delay on f_alpha": nl.delay("f0", "g"),
    }
    want = dict(zip(got, (4, 15, 9, 6, 24, 9)))
    detail = ", ".join(f"{k}={v}" for k, v in got.items())
    verdict(2, "latency ledger", got == want, detail, dt, 1.0)


def test_criterion_03_adder_tree(verdict):
    t = time.perf_counter()
    bad = []
    for n in range(1, 65):
        g = build_adder_tree(n)
        if g.count("add") != n - 1 or g.depth() != L_ADD * ceil_log2(n):
            bad.append(n)
    d9, d25 = build_adder_tree(9).depth(), build_adder_tree(25).depth()
    dt = time.perf_counter() - t
    ok = not bad and d9 == 4 * L_ADD and d25 == 5 * L_ADD
    verdict(3, "adder-tree law", ok, f"N=1..64 violations {bad}, N=9 -> {d9}, N=25 -> {d25}", dt, 1.0)


def test_criterion_04_sorting_network(verdict):
    t = time.perf_counter()
    g = build_sort5()
    a = ArrayArith(FLOAT16)
    bits = np.array([[(v >> k) & 1 for k in range(5)] for v in range(32)])
    out = evaluate(g, {f"x{k}": a.from_float(bits[:, k].astype(float)) for k in range(5)}, a)
    got = np.stack([a.to_float(out[f"a{k}"]) for k in range(5)], axis=1)
    sorted_ok = bool(np.array_equal(got, np.sort(bits, axis=1)))
    cas, stages, depth = g.count("cas"), stage_count(g, "cas"), g.depth()
    dt = time.perf_counter() - t
    ok = (cas, stages, depth) == (9, 6, 12) and sorted_ok
    verdict(4, "sorting network", ok, f"{cas} cas, {stages} stages, latency {depth}, 0-1 sorted {sorted_ok}", dt, 1.0)


ANCHORS = [
    ("recip@0", RECIP_TABLE, 0.0, 0.99947),
    ("recip@0.25", RECIP_TABLE, 0.25, 0.799765),
    ("log2@0.25", LOG2_TABLE, 0.25, 0.3253),
    ("exp2@0", EXP2_TABLE, 0.0, 1.0004),
    ("exp2@-1", EXP2_TABLE, -1.0, 0.5002),
    ("sqrt@1", SQRT_TABLE, 1.0, 1.00068),
    ("sqrt@2.0", SQRT_TABLE, 2.0, 1.41750),
    ("sqrt@4-", SQRT_TABLE, float(np.nextafter(4.0, 0.0)), 2.0000),
]


def test_criterion_05_polynomial_anchors(verdict):
    t = time.perf_counter()
    got = [(label, poly_eval(tab, x), want) for label, tab, x, want in ANCHORS]
    dt = time.perf_counter() - t
    misses = [f"{label} got {v:.6f} want {w}" for label, v, w in got if abs(v - w) >= 1e-4]
    detail = "all 8 within 1e-4" if not misses else "; ".join(misses)
    verdict(5, "polynomial anchors", not misses, detail, dt, 1e-3)


def test_criterion_06_accuracy_envelope(verdict):
    t = time.perf_counter()
    rows = []
    ok = True
    for name, tab in (("recip", RECIP_TABLE), ("log2", LOG2_TABLE), ("exp2", EXP2_TABLE), ("sqrt", SQRT_TABLE)):
        func = TRUE_FUNCTIONS[name]
        builtin = tab.max_error(func, 100_000)
        fitted = fit_coefficients(func, DOMAINS[name], tab.degree, tab.segments).max_error(func, 100_000)
        ok &= builtin < 1e-2 and fitted <= 2 * builtin
        rows.append(f"{name} {builtin:.2e}/{fitted:.2e}")
    dt = time.perf_counter() - t
    verdict(6, "approximation envelope", ok, "builtin/fitted max error " + ", ".join(rows), dt, 5.0)


def test_criterion_07_oracle_equivalence(verdict):
    images, h, w = 5, 16, 16
    rng = np.random.default_rng(2024)
    t = time.perf_counter()
    counts = {}
    for name in FILTERS:
        res = compile_file(corpus_path(name), resolution=(w, h))
        a = ArrayArith(res.fmt)
        win = res.scheduled.windows()[0].params
        ws = WindowSpec(win["height"], win["width"], BorderMode.parse(win["border"]))
        frames = [ingest(rng.integers(0, 256, (h, w)), a) for _ in range(images)]
        # blanking of at least half a window in each direction flushes the last rows
        sr = run_stream(res.scheduled, frames, StreamGeometry(w, h, w + 8, h + 4), ws, a, window_impl="cycle")
        oracle = oracle_for(name)
        counts[name] = sum(
            int(np.count_nonzero(out != oracle(img, ws, per_pixel=True))) for img, out in zip(frames, sr.frames)
        )
    dt = time.perf_counter() - t
    ok = not any(counts.values())
    detail = f"{images} images x {len(FILTERS)} filters, mismatching pixels " + ", ".join(
        f"{k}={v}" for k, v in counts.items()
    )
    verdict(7, "oracle equivalence", ok, detail, dt, 30.0)


def test_criterion_08_throughput(verdict):
    t = time.perf_counter()
    p1080, p720, p480 = PRESETS["1080p"], PRESETS["720p"], PRESETS["480p"]
    arith_ok = (
        p1080.cycles_per_frame == 2_475_000
        and f"{p1080.fps:.2f}" == "60.00"
        and f"{p720.fps:.2f}" == "120.00"
        and f"{p480.fps:.2f}" == "353.57"
    )
    geom = p1080.scaled(64, 48)
    res = compile_file(corpus_path("median"), resolution=(64, 48))
    a = ArrayArith(res.fmt)
    frames = [ingest(np.random.default_rng(8).integers(0, 256, (48, 64)), a) for _ in range(2)]
    rep = run_stream(res.scheduled, frames, geom, arith=a).report
    dt = time.perf_counter() - t
    rate_ok = rep.output_rate == 1.0 and rep.valid_outputs == rep.active_pixels and rep.aligned
    detail = (
        f"1080p {p1080.cycles_per_frame} cycles/frame = {p1080.fps:.2f} fps, 720p {p720.fps:.2f}, 480p {p480.fps:.2f}; "
        f"{geom.label()} rate {rep.output_rate:.3f} valid/active cycle"
    )
    verdict(8, "throughput and timing", arith_ok and rate_ok, detail, dt, 10.0)


def test_criterion_09_scheduling_preserves_semantics(verdict):
    t = time.perf_counter()
    a = ArrayArith(FLOAT16)
    diffs = unbalanced = 0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        g = random_graph(rng, max_nodes=20)
        ins = random_inputs(g, rng)
        before = evaluate(g, ins, a)
        sg = schedule(g)
        after = evaluate(sg, ins, a)
        diffs += sum(not np.array_equal(before[k], after[k]) for k in before)
        unbalanced += not fanin_balanced(sg)
    dt = time.perf_counter() - t
    verdict(9, "scheduling preserves semantics", diffs == 0 and unbalanced == 0,
            f"100 graphs, {diffs} differing outputs, {unbalanced} unbalanced fan-ins", dt, 5.0)


def _one_ulp_violations(op, a_bits, b_bits, ref):
    bad = 0
    for x, y, s in zip(a_bits, b_bits, ref):
        r = op(decode(x, FLOAT16), decode(y, FLOAT16))
        if r.is_inf:
            bad += not (abs(s) >= 2.0 ** (FLOAT16.max_exp + 1) and (s < 0) == bool(r.sign))
        elif r.is_zero:
            bad += not (abs(s) < 2.0 ** FLOAT16.min_exp)
        else:
            bad += not (abs(float(r) - s) < 2.0 ** (r.exponent - FLOAT16.mantissa_bits))
    return bad


def test_criterion_10_arithmetic_soundness(verdict):
    rng = np.random.default_rng(10)
    finite = np.arange(1 << 16)
    finite = finite[((finite >> 10) & 0x1F) != 0x1F]
    a_bits = rng.choice(finite, 100_000).tolist()
    b_bits = rng.choice(finite, 100_000).tolist()
    t = time.perf_counter()
    fa = [float(decode(x, FLOAT16)) for x in a_bits]
    fb = [float(decode(y, FLOAT16)) for y in b_bits]
    add_bad = _one_ulp_violations(fp_add, a_bits, b_bits, [x + y for x, y in zip(fa, fb)])
    mul_bad = _one_ulp_violations(fp_mul, a_bits, b_bits, [x * y for x, y in zip(fa, fb)])
    trips = sum(encode(decode(b, FLOAT16)) != b for b in range(1 << 16))
    dt = time.perf_counter() - t
    ok = add_bad == 0 and mul_bad == 0 and trips == 0
    verdict(10, "arithmetic soundness", ok,
            f"1e5 pairs: add {add_bad}, mul {mul_bad} beyond 1 ulp; {trips} of 65536 patterns fail round-trip",
            dt, 10.0)
