"""GSRC bookshelf I/O: .blocks, .nets and .pl readers, result writer and SVG view.

Parse errors carry the 1-based line number of the offending record.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable
from xml.sax.saxutils import escape

import numpy as np

from .model import Floorplan, ModuleSpec, Netlist, Outline, Terminal, outline_for


class BookshelfError(ValueError):
    def __init__(self, message: str, line: int | None = None, source: str = ""):
        where = f"{source}:" if source else ""
        where += f"{line}: " if line is not None else (" " if where else "")
        super().__init__(f"{where}{message}")
        self.line = line


_HEADER = re.compile(r"^\s*(\w+)\s*:\s*(\S+)\s*$")
_VERTEX = re.compile(r"\(\s*([-+0-9.eE]+)\s*,\s*([-+0-9.eE]+)\s*\)")


def _records(text: str):
    """Yield (line_number, stripped line) skipping blanks, comments and format banners."""
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line or line.startswith(("UCSC", "UCLA")):
            continue
        yield no, line


def _number(tok: str, no: int, source: str) -> float:
    try:
        return float(tok)
    except ValueError:
        raise BookshelfError(f"expected a number, got {tok!r}", no, source) from None


def _count(value: str, no: int, source: str) -> int:
    try:
        c = int(value)
    except ValueError:
        raise BookshelfError(f"count header needs an integer, got {value!r}", no, source) from None
    if c < 0:
        raise BookshelfError("negative count", no, source)
    return c


@dataclass
class BlocksFile:
    modules: list[ModuleSpec]
    terminals: list[str]


def parse_blocks(text: str, ar_lo: float | None = None, ar_hi: float | None = None,
                 source: str = "") -> BlocksFile:
    """Read a GSRC .blocks file.

    Soft blocks keep the aspect window from the file unless ``ar_lo`` /
    ``ar_hi`` override it; hard blocks take width and height from their
    four-vertex outline.
    """
    expect = {}
    modules: list[ModuleSpec] = []
    terminals: list[str] = []
    seen: dict[str, int] = {}
    soft = hard = 0
    last = 0
    for no, line in _records(text):
        last = no
        m = _HEADER.match(line)
        if m and m.group(1).startswith("Num"):
            key = m.group(1)
            if key not in ("NumSoftRectangularBlocks", "NumHardRectilinearBlocks", "NumTerminals"):
                raise BookshelfError(f"unknown header {key!r}", no, source)
            expect[key] = (_count(m.group(2), no, source), no)
            continue
        parts = line.split()
        if len(parts) < 2:
            raise BookshelfError(f"malformed record {line!r}", no, source)
        name, kind = parts[0], parts[1].lower()
        if name in seen:
            raise BookshelfError(f"duplicate name {name!r} (first on line {seen[name]})", no, source)
        seen[name] = no
        if kind == "softrectangular":
            if len(parts) != 5:
                raise BookshelfError("soft block needs: name softrectangular area ar_min ar_max", no, source)
            area, lo, hi = (_number(t, no, source) for t in parts[2:5])
            if area <= 0 or not 0 < lo <= hi:
                raise BookshelfError(f"bad soft block parameters for {name!r}", no, source)
            modules.append(ModuleSpec.soft_block(name, area, lo if ar_lo is None else ar_lo,
                                                 hi if ar_hi is None else ar_hi))
            soft += 1
        elif kind == "hardrectilinear":
            verts = [(float(a), float(b)) for a, b in _VERTEX.findall(line)]
            declared = parts[2] if len(parts) > 2 else ""
            if declared != "4" or len(verts) != 4:
                raise BookshelfError(f"hard block {name!r} must list exactly 4 vertices", no, source)
            xs = sorted({v[0] for v in verts})
            ys = sorted({v[1] for v in verts})
            corners = {(x, y) for x in xs for y in ys}
            if len(xs) != 2 or len(ys) != 2 or set(verts) != corners:
                raise BookshelfError(f"hard block {name!r} is not an axis-aligned rectangle", no, source)
            modules.append(ModuleSpec.hard_block(name, xs[1] - xs[0], ys[1] - ys[0]))
            hard += 1
        elif kind == "terminal":
            terminals.append(name)
        else:
            raise BookshelfError(f"unknown block kind {parts[1]!r}", no, source)
    found = {"NumSoftRectangularBlocks": soft, "NumHardRectilinearBlocks": hard, "NumTerminals": len(terminals)}
    for key, got in found.items():
        if key in expect and expect[key][0] != got:
            raise BookshelfError(f"{key} says {expect[key][0]} but {got} records follow", expect[key][1], source)
        if key not in expect and got:
            raise BookshelfError(f"missing {key} header", last or None, source)
    return BlocksFile(modules, terminals)


def parse_nets(text: str, modules: Iterable[ModuleSpec], terminals: Iterable[str], source: str = "") -> Netlist:
    """Read a GSRC .nets file against known module and terminal names.

    Pin offsets ``%dx %dy`` are percentages of the module width and height
    measured from its center; they are stored as fractions.
    """
    mod_index = {m.name: i for i, m in enumerate(modules)}
    term_index = {t: i for i, t in enumerate(terminals)}
    nets: list[list[tuple]] = []
    names: list[str] = []
    num_nets = num_pins = None
    cur: list[tuple] | None = None
    degree = 0
    start = 0

    def close(no):
        if cur is not None and len(cur) != degree:
            raise BookshelfError(f"net declares degree {degree} but lists {len(cur)} pins", start, source)

    for no, line in _records(text):
        m = _HEADER.match(line)
        if m and m.group(1) in ("NumNets", "NumPins"):
            if m.group(1) == "NumNets":
                num_nets = (_count(m.group(2), no, source), no)
            else:
                num_pins = (_count(m.group(2), no, source), no)
            continue
        if line.startswith("NetDegree"):
            close(no)
            head = line.split(":", 1)
            if len(head) != 2 or not head[1].split():
                raise BookshelfError("malformed NetDegree record", no, source)
            toks = head[1].split()
            degree = _count(toks[0], no, source)
            names.append(toks[1] if len(toks) > 1 else f"net{len(nets)}")
            cur = []
            nets.append(cur)
            start = no
            continue
        if cur is None:
            raise BookshelfError(f"pin record before any NetDegree: {line!r}", no, source)
        body, _, offs = line.partition(":")
        toks = body.split()
        pin = toks[0]
        fx = fy = 0.0
        if offs.strip():
            o = offs.split()
            if len(o) != 2 or not all(t.startswith("%") for t in o):
                raise BookshelfError(f"pin offset must be '%dx %dy', got {offs.strip()!r}", no, source)
            fx = _number(o[0][1:], no, source) / 100.0
            fy = _number(o[1][1:], no, source) / 100.0
        if pin in mod_index:
            cur.append((mod_index[pin], fx, fy))
        elif pin in term_index:
            cur.append(("T", term_index[pin]))
        else:
            raise BookshelfError(f"unknown module or terminal {pin!r}", no, source)
    close(None)
    if num_nets is not None and num_nets[0] != len(nets):
        raise BookshelfError(f"NumNets says {num_nets[0]} but {len(nets)} nets follow", num_nets[1], source)
    total = sum(len(n) for n in nets)
    if num_pins is not None and num_pins[0] != total:
        raise BookshelfError(f"NumPins says {num_pins[0]} but {total} pins follow", num_pins[1], source)
    return Netlist.from_pins(nets, names)


def parse_pl(text: str, source: str = "") -> dict[str, tuple[float, ...]]:
    """Read ``name x y [w h] [: orient]`` records into ``{name: (x, y, ...)}``."""
    out: dict[str, tuple[float, ...]] = {}
    for no, line in _records(text):
        body = line.split(":", 1)[0].split()
        if len(body) not in (3, 5):
            raise BookshelfError(f"placement record needs 'name x y' or 'name x y w h', got {line!r}", no, source)
        if body[0] in out:
            raise BookshelfError(f"duplicate placement for {body[0]!r}", no, source)
        out[body[0]] = tuple(_number(t, no, source) for t in body[1:])
    return out


def write_pl(fp: Floorplan) -> str:
    """One ``name xl yl w h`` line per module in module order; values use repr precision."""
    lines = ["UCLA pl 1.0", "# name lower_left_x lower_left_y width height", ""]
    r = fp.rects()
    for i, m in enumerate(fp.modules):
        lines.append(f"{m.name} {_fmt(r.xl[i])} {_fmt(r.yl[i])} {_fmt(r.w[i])} {_fmt(r.h[i])}")
    return "\n".join(lines) + "\n"


def _fmt(v: float) -> str:
    v = float(v)
    if v == 0:
        return "0"
    if v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def project_to_boundary(xy: np.ndarray, outline: Outline) -> np.ndarray:
    """Move every point to the nearest point on the outline's boundary."""
    W, H = outline.width, outline.height
    p = np.column_stack([np.clip(xy[:, 0], 0, W), np.clip(xy[:, 1], 0, H)]) if len(xy) else np.zeros((0, 2))
    inside = (p[:, 0] > 0) & (p[:, 0] < W) & (p[:, 1] > 0) & (p[:, 1] < H)
    if np.any(inside):
        q = p[inside]
        d = np.column_stack([q[:, 0], W - q[:, 0], q[:, 1], H - q[:, 1]])
        side = d.argmin(axis=1)
        q[side == 0, 0] = 0
        q[side == 1, 0] = W
        q[side == 2, 1] = 0
        q[side == 3, 1] = H
        p[inside] = q
    return p


def load_floorplan(blocks: str | Path, nets: str | Path | None = None, pl: str | Path | None = None,
                   whitespace: float = 0.10, aspect: float = 1.0, pads: str = "project",
                   ar_lo: float | None = None, ar_hi: float | None = None) -> Floorplan:
    """Build a floorplan from bookshelf files.

    The outline has area ``(1 + whitespace) * sum of areas`` and
    height/width ``aspect``. Terminal coordinates come from ``pl``; with
    ``pads="project"`` they are moved to the nearest outline boundary point,
    with ``pads="asis"`` they are used unchanged.
    """
    if pads not in ("project", "asis"):
        raise ValueError(f"pads must be 'project' or 'asis', got {pads!r}")
    b = parse_blocks(Path(blocks).read_text(), ar_lo, ar_hi, source=str(blocks))
    outline = outline_for(b.modules, whitespace, aspect)
    netlist = parse_nets(Path(nets).read_text(), b.modules, b.terminals, str(nets)) if nets else Netlist.empty()
    coords = parse_pl(Path(pl).read_text(), str(pl)) if pl else {}
    missing = [t for t in b.terminals if t not in coords]
    if missing and netlist.num_pins and np.any(netlist.pin_module < 0):
        used = {b.terminals[t] for t in netlist.pin_terminal[netlist.pin_module < 0]}
        if used & set(missing):
            raise BookshelfError(f"no placement for terminal {sorted(used & set(missing))[0]!r}", None, str(pl or ""))
    xy = np.array([coords.get(t, (0.0, 0.0))[:2] for t in b.terminals], dtype=float).reshape(-1, 2)
    if pads == "project":
        xy = project_to_boundary(xy, outline)
    terminals = tuple(Terminal(t, float(px), float(py)) for t, (px, py) in zip(b.terminals, xy))
    return Floorplan(outline, tuple(b.modules), netlist, terminals)


def write_blocks(modules: Iterable[ModuleSpec], terminals: Iterable[str]) -> str:
    modules = list(modules)
    terminals = list(terminals)
    soft = [m for m in modules if not m.hard]
    hard = [m for m in modules if m.hard]
    lines = ["UCSC blocks 1.0", "",
             f"NumSoftRectangularBlocks : {len(soft)}",
             f"NumHardRectilinearBlocks : {len(hard)}",
             f"NumTerminals : {len(terminals)}", ""]
    for m in modules:
        if m.hard:
            w, h = _fmt(m.width), _fmt(m.height)
            lines.append(f"{m.name} hardrectilinear 4 (0, 0) (0, {h}) ({w}, {h}) ({w}, 0)")
        else:
            lines.append(f"{m.name} softrectangular {_fmt(m.area)} {_fmt(m.ar_lo)} {_fmt(m.ar_hi)}")
    lines += [f"{t} terminal" for t in terminals]
    return "\n".join(lines) + "\n"


def write_nets(fp: Floorplan) -> str:
    nl = fp.netlist
    lines = ["UCLA nets 1.0", "", f"NumNets : {nl.num_nets}", f"NumPins : {nl.num_pins}", ""]
    for e in range(nl.num_nets):
        a, b = nl.net_ptr[e], nl.net_ptr[e + 1]
        name = nl.names[e] if e < len(nl.names) else f"n{e}"
        lines.append(f"NetDegree : {b - a} {name}")
        for k in range(a, b):
            if nl.pin_module[k] < 0:
                lines.append(f"{fp.terminals[nl.pin_terminal[k]].name} B")
            else:
                fx, fy = nl.pin_fx[k], nl.pin_fy[k]
                off = f" : %{_fmt(fx * 100)} %{_fmt(fy * 100)}" if fx or fy else ""
                lines.append(f"{fp.modules[nl.pin_module[k]].name} B{off}")
    return "\n".join(lines) + "\n"


def write_terminal_pl(fp: Floorplan) -> str:
    lines = ["UCLA pl 1.0", ""]
    lines += [f"{t.name} {_fmt(t.x)} {_fmt(t.y)}" for t in fp.terminals]
    return "\n".join(lines) + "\n"


@dataclass
class SvgOptions:
    scale: float = 1.0  # pixels per layout unit, before fitting
    max_px: float = 800.0  # longest side of the drawing
    labels: bool = True
    terminals: bool = False
    stroke: float = 1.0


def render_svg(fp: Floorplan, options: SvgOptions | None = None) -> str:
    """Outline plus one translucent rectangle per module; overlaps stay visible."""
    o = options or SvgOptions()
    W, H = fp.outline.width, fp.outline.height
    r = fp.rects()
    xs = [0.0, W, *r.xl, *r.xh]
    ys = [0.0, H, *r.yl, *r.yh]
    x0, x1, y0, y1 = min(xs), max(xs), min(ys), max(ys)
    s = o.scale * min(1.0, o.max_px / (max(x1 - x0, y1 - y0) * o.scale))
    pad = 10.0
    vw, vh = (x1 - x0) * s + 2 * pad, (y1 - y0) * s + 2 * pad

    def px(x):
        return (x - x0) * s + pad

    def py(y):  # flip so y grows upward
        return (y1 - y) * s + pad

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{vw:.1f}" height="{vh:.1f}" '
           f'viewBox="0 0 {vw:.1f} {vh:.1f}">',
           f'<rect x="{px(0):.2f}" y="{py(H):.2f}" width="{W * s:.2f}" height="{H * s:.2f}" '
           f'fill="none" stroke="black" stroke-width="{2 * o.stroke:g}"/>']
    font = max(4.0, min(12.0, 0.25 * s * float(np.median(np.minimum(r.w, r.h))) if fp.n else 12.0))
    for i, m in enumerate(fp.modules):
        fill = "#c66" if m.hard else "#69c"
        out.append(f'<rect x="{px(r.xl[i]):.2f}" y="{py(r.yh[i]):.2f}" width="{r.w[i] * s:.2f}" '
                   f'height="{r.h[i] * s:.2f}" fill="{fill}" fill-opacity="0.45" stroke="#234" '
                   f'stroke-width="{o.stroke:g}"/>')
        if o.labels:
            out.append(f'<text x="{px(fp.x[i]):.2f}" y="{py(fp.y[i]):.2f}" font-size="{font:.1f}" '
                       f'text-anchor="middle" dominant-baseline="middle">{escape(m.name)}</text>')
    if o.terminals:
        for t in fp.terminals:
            out.append(f'<circle cx="{px(t.x):.2f}" cy="{py(t.y):.2f}" r="2" fill="#333"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
