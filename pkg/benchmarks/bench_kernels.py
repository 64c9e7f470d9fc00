"""Throughput of the numba and numpy backends on float16 array operators and
on a full 1080p stream simulation.

    python3 benchmarks/bench_kernels.py [--size N] [--repeat R] [--skip-stream]
"""

import argparse
import time

import numpy as np

from fpforge.compiler import compile_file
from fpforge.filters import corpus_path
from fpforge.formats import FLOAT16
from fpforge.kernels import BACKENDS, ArrayArith, numba_available, use_backend
from fpforge.sim import PRESETS, ingest, run_stream

OPS = ("add", "mul", "div", "sqrt", "log2", "exp2", "max")


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def bench_ops(size, repeat):
    rng = np.random.default_rng(0)
    x = rng.uniform(0.5, 200.0, size)
    y = rng.uniform(0.5, 200.0, size)
    rows = {}
    for be in BACKENDS:
        if be == "numba" and not numba_available():
            continue
        with use_backend(be):
            a = ArrayArith(FLOAT16)
            px, py = a.from_float(x), a.from_float(y)
            for op in OPS:
                fn = getattr(a, op)
                call = (lambda: fn(px, py)) if op in ("add", "mul", "div", "max") else (lambda: fn(px))
                call()  # warm-up, includes JIT compilation
                rows.setdefault(op, {})[be] = size / best_of(call, repeat) / 1e6
    print(f"{'op':<8}" + "".join(f"{be + ' Mop/s':>16}" for be in BACKENDS) + f"{'speedup':>10}")
    for op, r in rows.items():
        cells = "".join(f"{r.get(be, float('nan')):>16.1f}" for be in BACKENDS)
        speed = r.get("numba", float("nan")) / r["numpy"]
        print(f"{op:<8}{cells}{speed:>10.2f}")


def bench_stream(name):
    res = compile_file(corpus_path(name))
    small = compile_file(corpus_path(name), resolution=(16, 16))
    img = np.random.default_rng(1).integers(0, 256, (1080, 1920))
    for be in BACKENDS:
        if be == "numba" and not numba_available():
            continue
        with use_backend(be):
            a = ArrayArith(res.fmt)
            frame = ingest(img, a)
            # warm-up on a tiny frame so JIT compilation is not timed
            run_stream(small.scheduled, [frame[:16, :16]], PRESETS["1080p"].scaled(16, 16), arith=a)
            t = time.perf_counter()
            sr = run_stream(res.scheduled, [frame], PRESETS["1080p"], arith=a, check_tags=False)
            dt = time.perf_counter() - t
        print(f"{name} 1080p frame on {be}: {dt:.2f} s ({sr.report.cycles_simulated / dt / 1e6:.1f} Mcycles/s)")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=1 << 20)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--skip-stream", action="store_true")
    args = ap.parse_args()
    bench_ops(args.size, args.repeat)
    if not args.skip_stream:
        for name in ("median", "nlfilter"):
            bench_stream(name)


if __name__ == "__main__":
    main()
