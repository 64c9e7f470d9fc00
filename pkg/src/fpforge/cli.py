"""``fpforge`` command line: compile, simulate, fit, report.

Exit status: 0 on success, 1 for diagnostics (source errors, bad flags,
oracle mismatches), 2 when an input file does not exist.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import io
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .compiler import CompileResult, compile_program
from .dfg import GraphError, LatencyModel, evaluate
from .dsl import DslError, interpret
from .filters import FILTERS, corpus_path, load_kernel, oracle_for
from .formats import decode, from_real, parse_format
from .kernels import BACKENDS, ArrayArith, use_backend
from .polyapprox import DEFAULT_UNITS, DOMAINS, TRUE_FUNCTIONS, FitError, fit_coefficients
from .sim import (
    PRESETS,
    BorderMode,
    SimulationError,
    StreamGeometry,
    WindowSpec,
    egress,
    fps_report,
    ingest,
    read_pnm,
    run_stream,
    run_values,
    window_stack,
    write_pnm,
)

__all__ = ["main", "build_parser"]


class CliError(Exception):
    def __init__(self, message: str, code: int = 1):
        super().__init__(message)
        self.code = code


def _source(path: str) -> Path:
    p = Path(path)
    if not p.exists():
        # bare corpus names resolve against the corpus directory
        try:
            if not p.suffix and p.parent == Path("."):
                return corpus_path(path)
        except FileNotFoundError:
            pass
        raise CliError(f"{path}: no such file", 2)
    return p


def _compile(args, resolution=None) -> CompileResult:
    src = _source(args.source)
    kernel = None
    if getattr(args, "kernel", None):
        kp = Path(args.kernel)
        if not kp.exists():
            raise CliError(f"{args.kernel}: no such file", 2)
        kernel = load_kernel(kp)
    return compile_program(
        src.read_text(),
        str(src),
        fmt=args.format,
        latency=args.latency_profile,
        border=args.border,
        resolution=resolution or getattr(args, "resolution", None),
        kernel=kernel,
    )


def _resolution(text: str) -> tuple[int, int]:
    try:
        w, h = text.lower().split("x")
        return int(w), int(h)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected WxH, got {text!r}") from None


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# --------------------------------------------------------------------------
# compile


def cmd_compile(args) -> int:
    res = _compile(args)
    out = _out_dir(args)
    nl = res.netlist()
    nl.save(out / f"{res.name}.netlist")
    (out / f"{res.name}.sv").write_text(res.hdl())
    report = res.report.text()
    (out / f"{res.name}.latency.txt").write_text(report)
    rr = res.resources()
    (out / f"{res.name}.resources.txt").write_text(rr.text())
    (out / f"{res.name}.resources.json").write_text(rr.to_json())
    sys.stdout.write(report)
    lm = res.scheduled.model
    print(f"operator latencies: add={lm.add} mul={lm.mul} max={lm.max} cas={lm.cas} "
          f"div={lm.latency('div')} sqrt={lm.latency('sqrt')} log2={lm.latency('log2')} exp2={lm.latency('exp2')}")
    exts = ("netlist", "sv", "latency.txt", "resources.txt", "resources.json")
    print(f"wrote {', '.join(f'{res.name}.{e}' for e in exts)} to {out}")
    return 0


# --------------------------------------------------------------------------
# simulate


def _read_values(path: Path, names: list[str]) -> dict[str, np.ndarray]:
    rows = list(csv.reader(path.read_text().splitlines()))
    rows = [r for r in rows if r and not r[0].lstrip().startswith("#")]
    if not rows:
        raise CliError(f"{path}: empty value file")
    header = [h.strip() for h in rows[0]]
    missing = [n for n in names if n not in header]
    if missing:
        raise CliError(f"{path}: missing columns {missing}")
    data = np.array([[float(x) for x in r] for r in rows[1:]], dtype=np.float64).reshape(-1, len(header))
    return {n: data[:, header.index(n)] for n in names}


def _simulate_values(args, res: CompileResult) -> int:
    if not args.values:
        raise CliError("program has no sliding window; pass --values FILE")
    vp = Path(args.values)
    if not vp.exists():
        raise CliError(f"{args.values}: no such file", 2)
    g = res.scheduled
    a = ArrayArith(res.fmt, res.units)
    names = [g.nodes[s.node].names[0] for s in g.inputs]
    reals = _read_values(vp, names)
    pats = {k: a.from_float(v) for k, v in reals.items()}
    outs, first = run_values(g, pats, a)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(outs))
    for row in zip(*[a.to_float(v) for v in outs.values()]):
        w.writerow([repr(float(x)) for x in row])
    out = _out_dir(args)
    (out / f"{res.name}.out.csv").write_text(buf.getvalue())
    sys.stdout.write(buf.getvalue())
    print(f"pipeline depth: {g.depth()}")
    print(f"first valid output cycle: {first}")
    if args.check_oracle:
        bad = 0
        n = len(next(iter(pats.values()))) if pats else 0
        for i in range(n):
            env = {k: decode(int(pats[k][i]), res.fmt) for k in names}
            ref = interpret(res.program, env, units=res.units)
            for k, v in outs.items():
                if ref[k].bits != int(v[i]):
                    bad += 1
        if bad:
            print(f"FAIL {bad} values differ from the untimed interpreter")
            return 1
        print("PASS bit-exact")
    return 0


def _images(args, h: int, w: int) -> tuple[list[np.ndarray], str]:
    if args.input:
        p = Path(args.input)
        if not p.exists():
            raise CliError(f"{args.input}: no such file", 2)
        img = read_pnm(p)
        return [img] * args.frames, ("ppm" if img.ndim == 3 else "pgm")
    rng = np.random.default_rng(args.seed)
    return [rng.integers(0, 256, (h, w), dtype=np.uint8) for _ in range(args.frames)], "pgm"


def cmd_simulate(args) -> int:
    with use_backend(args.backend) if args.backend else contextlib.nullcontext():
        return _simulate(args)


def _simulate(args) -> int:
    geom = StreamGeometry.parse(args.geometry) if args.geometry else None
    # the window generator is sized for the image being streamed
    size = None
    if args.input and Path(args.input).exists():
        img = read_pnm(args.input)
        size = (img.shape[1], img.shape[0])
        if geom is not None and (geom.active_w, geom.active_h) != size:
            raise CliError(
                f"resolution mismatch: image is {size[0]}x{size[1]}, geometry {geom.label()} "
                f"is {geom.active_w}x{geom.active_h}"
            )
    elif geom is not None:
        size = (geom.active_w, geom.active_h)
    res = _compile(args, resolution=size)
    g = res.scheduled
    if not g.windows():
        return _simulate_values(args, res)
    win = g.windows()[0].params
    h, w = win["image_height"], win["image_width"]
    if geom is None:
        geom = PRESETS["1080p"].scaled(w, h) if (w, h) != (1920, 1080) else PRESETS["1080p"]
    if (geom.active_w, geom.active_h) != (w, h):
        raise CliError(f"resolution mismatch: program expects {w}x{h}, geometry is {geom.active_w}x{geom.active_h}")
    frames, kind = _images(args, h, w)
    a = ArrayArith(res.fmt, res.units)
    ws = WindowSpec(win["height"], win["width"], BorderMode.parse(win["border"]))
    planes = 3 if kind == "ppm" else 1
    outputs = [np.zeros_like(f) for f in frames]
    report = None
    mismatches = 0
    name = res.name
    oracle = None
    if args.check_oracle and name in FILTERS:
        kernel = load_kernel(args.kernel) if args.kernel else None
        oracle = oracle_for(name, kernel)
    for ch in range(planes):
        pats = [ingest(f[..., ch] if planes == 3 else f, a) for f in frames]
        sr = run_stream(g, pats, geom, ws, a)
        report = sr.report
        for i, (src, o) in enumerate(zip(pats, sr.frames)):
            if planes == 3:
                outputs[i][..., ch] = egress(o, a)
            else:
                outputs[i] = egress(o, a)
            if args.check_oracle:
                if oracle is not None:
                    ref = oracle(src, ws, res.fmt, res.units)
                else:
                    fill = a.const(ws.border.value)
                    ref = evaluate(res.graph, {g.nodes[g.inputs[0].node].names[0]: src}, a,
                                   windows=window_stack(src, ws, fill))[next(iter(g.outputs))]
                mismatches += int(np.count_nonzero(ref != o))
    out = _out_dir(args)
    for i, o in enumerate(outputs):
        write_pnm(out / f"{name}_{i:03d}.{kind}", o)
    text = report.text()
    (out / f"{name}.timing.txt").write_text(text)
    sys.stdout.write(text)
    if args.check_oracle:
        if mismatches:
            print(f"FAIL {mismatches} pixels differ from the oracle")
            return 1
        print("PASS bit-exact")
    return 0


# --------------------------------------------------------------------------
# fit


_SAFE = {k: getattr(np, k) for k in ("sin", "cos", "tan", "exp", "exp2", "log", "log2", "log10", "sqrt",
                                     "abs", "tanh", "arctan", "pi", "e")}


def cmd_fit(args) -> int:
    if args.func == "expr":
        if not args.expr or args.domain is None:
            raise CliError("--func expr needs --expr and --domain")
        text = args.expr

        def func(x):
            return eval(text, {"__builtins__": {}}, {**_SAFE, "x": x})

        domain = tuple(args.domain)
        builtin = None
    else:
        func = TRUE_FUNCTIONS[args.func]
        domain = tuple(args.domain) if args.domain else DOMAINS[args.func]
        builtin = DEFAULT_UNITS.tables()[args.func]
    try:
        table = fit_coefficients(func, domain, args.degree, args.segments, args.samples, args.func)
    except FitError as exc:
        raise CliError(f"fit error: {exc}") from None
    x = np.linspace(domain[0], domain[1], 100_000, endpoint=False)
    err = table(x) - func(x)
    csv_text = table.to_csv()
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(csv_text)
    else:
        sys.stdout.write(csv_text)
    print(f"max abs error: {np.max(np.abs(err)):.6g}")
    print(f"rms error: {np.sqrt(np.mean(err ** 2)):.6g}")
    if builtin is not None and (builtin.degree, builtin.segments) == (args.degree, args.segments):
        print(f"builtin table max abs error: {builtin.max_error(func):.6g}")
        print(f"max deviation from builtin table: {np.max(np.abs(table(x) - builtin(x))):.6g}")
    return 0


# --------------------------------------------------------------------------
# report


def cmd_report(args) -> int:
    if args.source is None:
        geom = StreamGeometry.parse(args.geometry) if args.geometry else None
        sys.stdout.write(fps_report(geom))
        return 0
    res = _compile(args)
    rr = res.resources()
    if args.json:
        sys.stdout.write(rr.to_json())
        return 0
    sys.stdout.write(res.report.text())
    sys.stdout.write(rr.text())
    if args.geometry:
        sys.stdout.write(fps_report(StreamGeometry.parse(args.geometry)))
    return 0


# --------------------------------------------------------------------------


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", help="override the float format, e.g. float16(10,5)")
    p.add_argument("--latency-profile", default="default", choices=LatencyModel.PROFILES)
    p.add_argument("--border", default="constant:0", help="constant:<v> | mirror | reflect")
    p.add_argument("--kernel", help="kernel matrix file replacing the program's conv kernel")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fpforge", description="custom floating-point filter toolchain")
    ap.add_argument("--version", action="version", version=f"fpforge {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compile", help="emit netlist, HDL and latency report")
    p.add_argument("source")
    _common(p)
    p.add_argument("--resolution", type=_resolution, help="override image_resolution, WxH")
    p.add_argument("--out", default="build")
    p.set_defaults(fn=cmd_compile)

    p = sub.add_parser("simulate", help="cycle-level simulation over frames or values")
    p.add_argument("source")
    _common(p)
    p.add_argument("--input", help="PGM/PPM image (random frames when omitted)")
    p.add_argument("--geometry", help="480p | 720p | 1080p | WxH@TWxTH")
    p.add_argument("--frames", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--values", help="CSV of input values for programs without a window")
    p.add_argument("--check-oracle", action="store_true")
    p.add_argument("--backend", choices=BACKENDS)
    p.add_argument("--out", default="sim_out")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("fit", help="fit a piecewise polynomial table")
    p.add_argument("--func", required=True, choices=["recip", "log2", "exp2", "sqrt", "expr"])
    p.add_argument("-d", "--degree", type=int, default=2)
    p.add_argument("-n", "--segments", type=int, default=4)
    p.add_argument("--samples", type=int, default=1024)
    p.add_argument("--domain", type=float, nargs=2, metavar=("XI", "XF"))
    p.add_argument("--expr", help="numpy expression in x for --func expr")
    p.add_argument("--out", help="write the CSV here instead of stdout")
    p.set_defaults(fn=cmd_fit)

    p = sub.add_parser("report", help="latency, resources and fps tables")
    p.add_argument("source", nargs="?")
    _common(p)
    p.add_argument("--resolution", type=_resolution)
    p.add_argument("--geometry")
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=cmd_report)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        if getattr(args, "format", None):
            parse_format(args.format)
        return args.fn(args)
    except CliError as exc:
        print(f"fpforge: {exc}", file=sys.stderr)
        return exc.code
    except DslError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"fpforge: {exc.filename or exc}: no such file", file=sys.stderr)
        return 2
    except (GraphError, SimulationError, ValueError) as exc:
        print(f"fpforge: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
