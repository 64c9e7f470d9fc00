"""Cycle-level execution of scheduled graphs over raster video.

The simulator advances one pixel clock per input sample.  A frame occupies
``total_w * total_h`` cycles: the active pixels in raster order followed by
horizontal and vertical blanking.  The window generator models ``H-1`` line
buffers plus a register window, its write enable driven by an advance strobe
that is high on active pixels and on the flush positions just past the right
and bottom edges (blanking pixels are bypassed).  Out-of-frame taps are then
replaced by border multiplexers.  Every operator with latency ``L`` emits at
cycle ``t`` the result of its inputs at ``t - L``.

Time is processed in blocks; each node carries ``L`` cycles of state between
blocks, so results do not depend on the block size.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _vector
from .dfg import DfGraph, GraphError, Signal
from .dsl.lower import parse_border
from .kernels import ArrayArith, jit_core

__all__ = [
    "SimulationError",
    "StreamGeometry",
    "PRESETS",
    "BorderMode",
    "WindowSpec",
    "window_reference",
    "window_stack",
    "border_mux",
    "TimingReport",
    "StreamResult",
    "run_stream",
    "run_values",
    "fps_report",
    "fps_table",
    "ingest",
    "egress",
    "read_pnm",
    "write_pnm",
]


class SimulationError(ValueError):
    """Graph, geometry and images disagree."""


# --------------------------------------------------------------------------
# geometry


@dataclass(frozen=True)
class StreamGeometry:
    active_w: int
    active_h: int
    total_w: int
    total_h: int
    clock_hz: float = 148.5e6
    name: str = ""

    def __post_init__(self):
        if self.active_w < 1 or self.active_h < 1:
            raise ValueError("active area must be at least 1x1")
        if self.total_w < self.active_w or self.total_h < self.active_h:
            raise ValueError("total raster must cover the active area")

    @property
    def cycles_per_frame(self) -> int:
        return self.total_w * self.total_h

    @property
    def fps(self) -> float:
        return self.clock_hz / self.cycles_per_frame

    @property
    def pixel_rate_60(self) -> float:
        """Pixel clock needed for 60 frames per second on this raster."""
        return 60.0 * self.cycles_per_frame

    def label(self) -> str:
        return self.name or f"{self.active_w}x{self.active_h}@{self.total_w}x{self.total_h}"

    def scaled(self, active_w: int, active_h: int) -> "StreamGeometry":
        """Same blanking proportions around a different active area."""
        tw = -(-active_w * self.total_w // self.active_w)
        th = -(-active_h * self.total_h // self.active_h)
        return StreamGeometry(active_w, active_h, tw, th, self.clock_hz)

    @classmethod
    def parse(cls, text: str, clock_hz: float = 148.5e6) -> "StreamGeometry":
        """Preset name (``480p``, ``720p``, ``1080p``, ``1080p60``) or ``WxH@TWxTH``."""
        key = text.strip().lower()
        if key in PRESETS:
            return PRESETS[key]
        m = re.fullmatch(r"(\d+)x(\d+)@(\d+)x(\d+)", key)
        if not m:
            raise ValueError(f"bad geometry {text!r}; expected a preset or WxH@TWxTH")
        w, h, tw, th = map(int, m.groups())
        return cls(w, h, tw, th, clock_hz)


PRESETS = {
    "480p": StreamGeometry(640, 480, 800, 525, name="480p"),
    "720p": StreamGeometry(1280, 720, 1650, 750, name="720p"),
    "1080p": StreamGeometry(1920, 1080, 2200, 1125, name="1080p"),
}
PRESETS["1080p60"] = PRESETS["1080p"]


def fps_table(clock_hz: float = 148.5e6) -> list[tuple[str, float, float]]:
    """(preset, nominal 60 Hz pixel clock, fps at ``clock_hz``) per preset."""
    rows = []
    for key in ("480p", "720p", "1080p"):
        g = PRESETS[key]
        f_i = g.pixel_rate_60
        rows.append((key, f_i, 60.0 * clock_hz / f_i))
    return rows


def fps_report(geom: StreamGeometry | None = None) -> str:
    """Plain-text fps table for the presets, plus ``geom`` when given."""
    clock = geom.clock_hz if geom is not None else 148.5e6
    lines = [f"{'geometry':<20}{'raster':>12}{'f_i MHz':>10}{'cycles/frame':>14}{'fps':>10}"]
    geoms = [PRESETS[k] for k in ("480p", "720p", "1080p")]
    if geom is not None and geom not in geoms:
        geoms.append(geom)
    for g in geoms:
        raster = f"{g.total_w}x{g.total_h}"
        lines.append(
            f"{g.label():<20}{raster:>12}{g.pixel_rate_60 / 1e6:>10.2f}"
            f"{g.cycles_per_frame:>14}{clock / g.cycles_per_frame:>10.2f}"
        )
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# windows and borders


@dataclass(frozen=True)
class BorderMode:
    kind: str = "constant"
    value: float = 0.0

    def __post_init__(self):
        if self.kind not in ("constant", "mirror", "reflect"):
            raise ValueError(f"unknown border mode {self.kind!r}")

    @classmethod
    def parse(cls, text: str) -> "BorderMode":
        return cls(*parse_border(text))

    def __str__(self) -> str:
        return f"constant:{self.value!r}" if self.kind == "constant" else self.kind


@dataclass(frozen=True)
class WindowSpec:
    height: int
    width: int
    border: BorderMode = field(default_factory=BorderMode)

    def __post_init__(self):
        if self.height < 1 or self.width < 1 or self.height % 2 == 0 or self.width % 2 == 0:
            raise ValueError(f"window dimensions must be odd, got {self.height}x{self.width}")

    @property
    def border_registers(self) -> int:
        return self.height * (self.width - 1) // 2

    @property
    def mux_count(self) -> int:
        return self.height * (self.width + 1) - 1

    def formation_delay(self, total_w: int) -> int:
        """Cycles from a pixel entering to its window being complete."""
        return (self.height // 2) * total_w + self.width // 2


_PAD_MODES = {"mirror": "reflect", "reflect": "symmetric"}


def _fill(image: np.ndarray, border: BorderMode, fill):
    if fill is not None:
        return fill
    return border.value


def window_stack(image, ws: WindowSpec, fill=None) -> np.ndarray:
    """All windows of ``image`` as an ``(h, w, H*W)`` array (row-major taps)."""
    image = np.asarray(image)
    hy, hx = ws.height // 2, ws.width // 2
    pad = ((hy, hy), (hx, hx))
    if ws.border.kind == "constant":
        c = _fill(image, ws.border, fill)
        padded = np.pad(image, pad, mode="constant", constant_values=c) if image.dtype != object else _pad_obj(image, pad, c)
    else:
        if image.shape[0] <= hy or image.shape[1] <= hx:
            raise SimulationError("image too small for the window with this border mode")
        padded = np.pad(image, pad, mode=_PAD_MODES[ws.border.kind])
    view = np.lib.stride_tricks.sliding_window_view(padded, (ws.height, ws.width))
    return view.reshape(image.shape[0], image.shape[1], ws.height * ws.width)


def _pad_obj(image, pad, c):
    out = np.full((image.shape[0] + pad[0][0] + pad[0][1], image.shape[1] + pad[1][0] + pad[1][1]), c, dtype=object)
    out[pad[0][0]: pad[0][0] + image.shape[0], pad[1][0]: pad[1][0] + image.shape[1]] = image
    return out


def window_reference(image, ws: WindowSpec, row: int, col: int, fill=None) -> np.ndarray:
    """H x W neighbourhood of ``(row, col)`` with the border mode applied.

    ``fill`` replaces the constant-mode value (e.g. with its bit pattern when
    ``image`` holds patterns).
    """
    image = np.asarray(image)
    h, w = image.shape
    if not (0 <= row < h and 0 <= col < w):
        raise IndexError(f"({row}, {col}) outside a {h}x{w} image")
    hy, hx = ws.height // 2, ws.width // 2
    out = np.empty((ws.height, ws.width), dtype=image.dtype)
    for i in range(ws.height):
        for j in range(ws.width):
            r, c = _fold(row + i - hy, h, ws.border.kind), _fold(col + j - hx, w, ws.border.kind)
            if r is None or c is None:
                out[i, j] = _fill(image, ws.border, fill)
            else:
                out[i, j] = image[r, c]
    return out


def _fold(k: int, n: int, kind: str):
    if 0 <= k < n:
        return k
    if kind == "constant":
        return None
    if kind == "mirror":  # edge pixel not repeated: -1 -> 1
        return -k if k < 0 else 2 * (n - 1) - k
    return -k - 1 if k < 0 else 2 * n - 1 - k  # reflect: edge repeated, -1 -> 0


def border_mux(taps: np.ndarray, center: np.ndarray, ws: WindowSpec, h: int, w: int, fill) -> np.ndarray:
    """Replace out-of-frame taps using in-frame taps of the same window.

    ``center`` holds the raster index of each cycle's window centre (-1 when
    none); cycles without a window get all-zero taps.
    """
    hh, ww = ws.height, ws.width
    hy, hx = hh // 2, ww // 2
    valid = center >= 0
    rc = np.where(valid, center // w, 0)
    cc = np.where(valid, center % w, 0)
    out = np.zeros_like(taps)
    kind = ws.border.kind
    for i in range(hh):
        r = rc + i - hy
        r_in = (r >= 0) & (r < h)
        if kind != "constant":
            r_src = np.where(r < 0, -r if kind == "mirror" else -r - 1, r)
            r_src = np.where(r >= h, 2 * (h - 1) - r if kind == "mirror" else 2 * h - 1 - r, r_src)
            si = r_src - rc + hy
        for j in range(ww):
            c = cc + j - hx
            inside = r_in & (c >= 0) & (c < w)
            col = taps[:, i * ww + j]
            if kind == "constant":
                val = np.where(inside, col, fill)
            else:
                c_src = np.where(c < 0, -c if kind == "mirror" else -c - 1, c)
                c_src = np.where(c >= w, 2 * (w - 1) - c if kind == "mirror" else 2 * w - 1 - c, c_src)
                sj = c_src - cc + hx
                src = taps[np.arange(taps.shape[0]), si * ww + sj]
                val = np.where(inside, col, src)
            out[:, i * ww + j] = np.where(valid, val, 0)
    return out


# --------------------------------------------------------------------------
# pixel conversion and image files


def ingest(image, arith: ArrayArith) -> np.ndarray:
    """8-bit (or real) pixel values to patterns of the arithmetic's format."""
    return arith.from_float(np.asarray(image, dtype=np.float64))


def egress(patterns, arith: ArrayArith) -> np.ndarray:
    """Patterns to 8-bit pixels: truncate toward zero, clamp, NaN -> 0."""
    x = arith.to_float(patterns)
    x = np.where(np.isnan(x), 0.0, x)
    return np.clip(np.trunc(x), 0, 255).astype(np.uint8)


def _pnm_tokens(data: bytes, count: int):
    vals, pos = [], 2
    while len(vals) < count:
        while data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while data[pos:pos + 1] not in (b"\n", b"\r", b""):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        vals.append(int(data[start:pos]))
    return vals, pos + 1


def read_pnm(path) -> np.ndarray:
    """Binary PGM (P5) as ``(h, w)`` or PPM (P6) as ``(h, w, 3)`` uint8."""
    data = Path(path).read_bytes()
    magic = data[:2]
    if magic not in (b"P5", b"P6"):
        raise ValueError(f"{path}: not a binary PGM/PPM file")
    (w, h, maxval), pos = _pnm_tokens(data, 3)
    if maxval != 255:
        raise ValueError(f"{path}: only 8-bit images are supported (maxval {maxval})")
    ch = 1 if magic == b"P5" else 3
    pix = np.frombuffer(data, dtype=np.uint8, count=w * h * ch, offset=pos)
    return pix.reshape((h, w) if ch == 1 else (h, w, 3)).copy()


def write_pnm(path, image) -> None:
    image = np.asarray(image, dtype=np.uint8)
    magic = b"P5" if image.ndim == 2 else b"P6"
    h, w = image.shape[:2]
    Path(path).write_bytes(magic + f"\n{w} {h}\n255\n".encode() + image.tobytes())


# --------------------------------------------------------------------------
# engine


class _Shift:
    """Fixed delay line carried across blocks."""

    def __init__(self, n: int, fill, dtype):
        self.n = n
        self.state = np.full(n, fill, dtype=dtype)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        if self.n == 0:
            return x
        buf = np.concatenate([self.state, x])
        self.state = buf[buf.shape[0] - self.n:]
        return buf[: x.shape[0]]


class _Engine:
    """Evaluates every non-source node of a scheduled graph block by block."""

    def __init__(self, g: DfGraph, arith: ArrayArith, check_tags: bool):
        self.g = g
        self.arith = arith
        self.check = check_tags
        self.order = [i for i in g.topo_order() if g.nodes[i].kind not in ("input", "window")]
        self.lines: dict[Signal, _Shift] = {}
        self.tag_lines: dict[Signal, _Shift] = {}
        for i in self.order:
            n = g.nodes[i]
            if n.kind == "const":
                continue
            lat = n.params["cycles"] if n.kind == "delay" else g.model.latency(n.kind)
            for s in n.outputs():
                self.lines[s] = _Shift(lat, 0, arith.dtype)
                self.tag_lines[s] = _Shift(lat, -1, np.int64)

    def step(self, vals: dict, tags: dict) -> None:
        """Extend ``vals``/``tags`` (source signals filled in) to every signal."""
        g, a = self.g, self.arith
        for i in self.order:
            n = g.nodes[i]
            if n.kind == "const":
                vals[n.outputs()[0]] = n.params["bits"]
                continue
            ins = [vals[s] for s in n.inputs]
            timed = [tags[s] for s in n.inputs if not g.is_const(s)]
            k = n.kind
            if k == "delay":
                res = [ins[0]]
            elif k == "cas":
                res = list(a.cas(*ins))
            elif k in ("rsh", "lsh"):
                res = [getattr(a, k)(ins[0], n.params["n"])]
            else:
                res = [getattr(a, k)(*ins)]
            tag = timed[0] if timed else None
            if self.check and len(timed) > 1:
                for other in timed[1:]:
                    live = (tag >= 0) | (other >= 0)
                    if not np.array_equal(tag[live], other[live]):
                        raise SimulationError(f"misaligned operands at node {i} ({k})")
            for s, r in zip(n.outputs(), res):
                if not isinstance(r, np.ndarray) or r.ndim == 0:
                    r = np.full(tag.shape[0] if tag is not None else 1, r, dtype=a.dtype)
                vals[s] = self.lines[s](r)
                if tag is not None:
                    tags[s] = self.tag_lines[s](tag)


@dataclass
class TimingReport:
    geometry: str
    cycles_per_frame: int
    clock_hz: float
    fps: float
    frames: int
    cycles_simulated: int
    pipeline_depth: int
    window_delay: int
    first_valid_in: int
    first_valid_out: int
    valid_outputs: int
    active_pixels: int
    output_rate: float
    aligned: bool
    backend: str

    @property
    def observed_latency(self) -> int:
        return self.first_valid_out - self.first_valid_in

    def summary(self) -> str:
        return f"{self.cycles_per_frame} cycles/frame, {self.fps:.2f} fps"

    def text(self) -> str:
        rows = [
            ("geometry", self.geometry),
            ("clock", f"{self.clock_hz / 1e6:.2f} MHz"),
            ("cycles/frame", str(self.cycles_per_frame)),
            ("fps", f"{self.fps:.2f}"),
            ("frames", str(self.frames)),
            ("cycles simulated", str(self.cycles_simulated)),
            ("pipeline depth", str(self.pipeline_depth)),
            ("window formation delay", str(self.window_delay)),
            ("first valid input cycle", str(self.first_valid_in)),
            ("first valid output cycle", str(self.first_valid_out)),
            ("observed latency", str(self.observed_latency)),
            ("valid outputs", str(self.valid_outputs)),
            ("outputs per active cycle", f"{self.output_rate:.3f}"),
            ("output strobe aligned", "yes" if self.aligned else "no"),
            ("backend", self.backend),
        ]
        width = max(len(k) for k, _ in rows)
        return self.summary() + "\n" + "\n".join(f"{k:<{width}}  {v}" for k, v in rows) + "\n"


@dataclass
class StreamResult:
    frames: list  # per output name: list of (h, w) pattern arrays
    outputs: dict
    report: TimingReport


def _window_node(g: DfGraph):
    wins = g.windows()
    if len(wins) != 1:
        raise SimulationError(f"stream simulation needs exactly one sliding window, found {len(wins)}")
    win = wins[0]
    if len(g.inputs) != 1 or win.inputs[0] != g.inputs[0]:
        raise SimulationError("the window must read the program's only input")
    return win


def run_stream(
    g: DfGraph,
    frames,
    geom: StreamGeometry,
    ws: WindowSpec | None = None,
    arith: ArrayArith | None = None,
    block: int = 1 << 15,
    check_tags: bool = True,
    window_impl: str | None = None,
) -> StreamResult:
    """Stream pattern images through the window generator and the pipeline.

    ``frames`` holds ``(h, w)`` arrays of bit patterns.  ``window_impl``
    chooses the line-buffer model (``"cycle"``, compiled per-cycle loop) or
    the equivalent delay formulation (``"delay"``); it defaults to the loop on
    the numba backend.
    """
    if not g.scheduled:
        raise GraphError("run_stream needs a scheduled graph")
    win = _window_node(g)
    p = win.params
    hh, ww = p["height"], p["width"]
    h, w = p["image_height"], p["image_width"]
    graph_ws = WindowSpec(hh, ww, BorderMode.parse(p["border"]))
    ws = ws or graph_ws
    if (ws.height, ws.width) != (hh, ww):
        raise SimulationError(f"window spec {ws.height}x{ws.width} does not match the graph's {hh}x{ww}")
    if (geom.active_w, geom.active_h) != (w, h):
        raise SimulationError(f"geometry active area {geom.active_w}x{geom.active_h} does not match the graph's {w}x{h}")
    hy, hx = hh // 2, ww // 2
    tw, th = geom.total_w, geom.total_h
    if tw < w + hx or th < h + hy:
        raise SimulationError(f"blanking too short to flush a {hh}x{ww} window")
    arith = arith or ArrayArith(g.fmt)
    frames = [arith.asarray(f) for f in frames]
    for f in frames:
        if f.shape != (h, w):
            raise SimulationError(f"image is {f.shape[1]}x{f.shape[0]}, expected {w}x{h}")
    if ws.border.kind != "constant" and (h <= hy or w <= hx):
        raise SimulationError("image too small for the window with this border mode")
    fill = arith.const(ws.border.value) if ws.border.kind == "constant" else 0

    nf = len(frames)
    stack = np.stack(frames) if nf else np.zeros((1, h, w), dtype=arith.dtype)
    fpc = tw * th
    depth = g.depth()
    wdelay = ws.formation_delay(tw)
    total = nf * fpc + depth + 1
    impl = window_impl or ("cycle" if arith.backend == "numba" else "delay")
    if impl not in ("cycle", "delay"):
        raise ValueError(f"unknown window implementation {impl!r}")

    engine = _Engine(g, arith, check_tags)
    out_names = list(g.outputs)
    results = {k: np.zeros((max(nf, 1), h * w), dtype=arith.dtype) for k in out_names}
    seen = np.zeros((max(nf, 1), h * w), dtype=np.int64)
    center_line = _Shift(depth, -1, np.int64)
    frame_line = _Shift(depth, -1, np.int64)
    span = (hh - 1) * tw + (ww - 1)
    history = np.zeros(span, dtype=arith.dtype)
    lines = np.zeros((hh - 1, w), dtype=arith.dtype)
    regs = np.zeros((hh, ww), dtype=arith.dtype)
    kern = jit_core() if not arith.wide else None
    from . import _core

    first_out = -1
    valid_count = 0
    aligned = True
    for t0 in range(0, total, block):
        n = min(block, total - t0)
        tt = np.arange(t0, t0 + n, dtype=np.int64)
        fi, q = np.divmod(tt, fpc)
        r, c = np.divmod(q, tw)
        live = fi < nf
        active = live & (r < h) & (c < w)
        fclip = np.minimum(fi, max(nf - 1, 0))
        pix = np.where(active, stack[fclip, np.minimum(r, h - 1), np.minimum(c, w - 1)], 0).astype(arith.dtype)

        if impl == "cycle":
            adv = (live & (r < h + hy) & (c < w + hx)).astype(np.uint8)
            taps = np.empty((n, hh * ww), dtype=arith.dtype)
            center = np.empty(n, dtype=np.int64)
            core = _core if arith.wide else kern
            core.window_stream(pix, adv, h, w, tw, th, hh, ww, int(r[0]), int(c[0]), lines, regs, taps, center)
        else:
            taps, history = _vector.window_stream(pix, history, tw, hh, ww)
            cr, cc = r - hy, c - hx
            ok = live & (cr >= 0) & (cr < h) & (cc >= 0) & (cc < w)
            center = np.where(ok, cr * w + cc, -1)
        taps = border_mux(taps, center, ws, h, w, fill)

        vals: dict = {}
        tags: dict = {}
        tag0 = np.where(center >= 0, tt, -1)
        vals[g.inputs[0]] = pix
        tags[g.inputs[0]] = np.where(active, tt, -1)
        for j, s in enumerate(win.outputs()):
            vals[s] = taps[:, j]
            tags[s] = tag0
        engine.step(vals, tags)

        c_out = center_line(center)
        f_out = frame_line(np.where(center >= 0, fi, -1))
        ok = c_out >= 0
        if ok.any():
            if first_out < 0:
                first_out = t0 + int(np.argmax(ok))
            valid_count += int(ok.sum())
            for k, s in g.outputs.items():
                v = vals.get(s)
                if v is None or np.ndim(v) == 0:
                    v = np.full(n, g.nodes[s.node].params["bits"] if g.is_const(s) else 0, dtype=arith.dtype)
                results[k][f_out[ok], c_out[ok]] = v[ok]
                if check_tags and not g.is_const(s):
                    if not np.array_equal(tags[s][ok], tt[ok] - depth):
                        aligned = False
            seen[f_out[ok], c_out[ok]] += 1
            # output strobe must trail the active input strobe by a fixed offset
            src = tt[ok] - depth - wdelay
            sf, sq = np.divmod(src, fpc)
            sr, sc = np.divmod(sq, tw)
            if not np.array_equal(sr * w + sc, c_out[ok]) or not np.array_equal(sf, f_out[ok]):
                aligned = False

    if nf and not np.all(seen[:nf] == 1):
        raise SimulationError("not every pixel produced exactly one output")
    out_frames = {k: [v[f].reshape(h, w) for f in range(nf)] for k, v in results.items()}
    report = TimingReport(
        geometry=geom.label(),
        cycles_per_frame=fpc,
        clock_hz=geom.clock_hz,
        fps=geom.fps,
        frames=nf,
        cycles_simulated=total,
        pipeline_depth=depth,
        window_delay=wdelay,
        first_valid_in=0,
        first_valid_out=first_out,
        valid_outputs=valid_count,
        active_pixels=nf * h * w,
        output_rate=valid_count / (nf * h * w) if nf else 0.0,
        aligned=aligned,
        backend=arith.backend,
    )
    primary = out_frames[out_names[0]] if out_names else []
    return StreamResult(primary, out_frames, report)


def run_values(
    g: DfGraph,
    inputs: dict,
    arith: ArrayArith | None = None,
    block: int = 1 << 15,
    check_tags: bool = True,
) -> tuple[dict, int]:
    """Feed one value per cycle to each scalar input; returns the outputs and
    the observed latency (cycles from the first input to the first output)."""
    if not g.scheduled:
        raise GraphError("run_values needs a scheduled graph")
    if g.windows():
        raise SimulationError("program has a sliding window; use run_stream")
    arith = arith or ArrayArith(g.fmt)
    names = [g.nodes[s.node].names[0] for s in g.inputs]
    missing = [k for k in names if k not in inputs]
    if missing:
        raise SimulationError(f"no values for inputs {missing}")
    arrays = {k: arith.asarray(inputs[k]).reshape(-1) for k in names}
    lengths = {a.shape[0] for a in arrays.values()}
    if len(lengths) > 1:
        raise SimulationError("input value lists differ in length")
    count = lengths.pop() if lengths else 1
    depth = g.depth()
    total = count + depth
    engine = _Engine(g, arith, check_tags)
    outs = {k: [] for k in g.outputs}
    first_out = -1
    for t0 in range(0, total, block):
        n = min(block, total - t0)
        tt = np.arange(t0, t0 + n, dtype=np.int64)
        live = tt < count
        vals, tags = {}, {}
        for s, k in zip(g.inputs, names):
            a = arrays[k]
            vals[s] = np.where(live, a[np.minimum(tt, max(count - 1, 0))] if count else 0, 0).astype(arith.dtype)
            tags[s] = np.where(live, tt, -1)
        engine.step(vals, tags)
        ok = (tt >= depth) & (tt - depth < count)
        if ok.any() and first_out < 0:
            first_out = t0 + int(np.argmax(ok))
        for k, s in g.outputs.items():
            v = vals.get(s)
            if v is None or np.ndim(v) == 0:
                v = np.full(n, g.nodes[s.node].params["bits"], dtype=arith.dtype)
            elif check_tags and not g.is_const(s) and not np.array_equal(tags[s][ok], tt[ok] - depth):
                raise SimulationError(f"output {k!r} misaligned with the pipeline depth")
            outs[k].append(v[ok])
    return {k: np.concatenate(v) for k, v in outs.items()}, first_out
