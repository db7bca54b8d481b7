"""Seeded synthetic instances for tests and benchmarks.

``gsrc_like`` builds soft-block netlists with the block/net/pin/pad counts of
the GSRC n100/n200/n300 circuits. Connectivity is local: every block and pad
gets a hidden location and nets join hidden neighbours, so wirelength
optimization has real structure to find. ``overlapping_layout`` produces the
kind of almost-spread, slightly overlapping rectangles global floorplanning
hands to the legalizer.
"""
from __future__ import annotations

import numpy as np

from .model import Floorplan, ModuleSpec, Netlist, RectArrays, Terminal, outline_for

GSRC_COUNTS = {
    "n100": (100, 885, 334),
    "n200": (200, 1585, 564),
    "n300": (300, 1893, 569),
}
GSRC_TOTAL_AREA = {"n100": 179500.0, "n200": 175769.0, "n300": 273814.0}


def _degree(rng) -> int:
    r = rng.random()
    if r < 0.62:
        return 2
    if r < 0.82:
        return 3
    if r < 0.92:
        return 4
    return int(rng.integers(5, 11))


def gsrc_like(name_or_n="n100", seed: int = 0, whitespace: float = 0.10, aspect: float = 1.0,
              pads_on_boundary: bool = True, total_area: float | None = None) -> Floorplan:
    if isinstance(name_or_n, str):
        n, num_nets, num_pads = GSRC_COUNTS[name_or_n]
        total_area = total_area or GSRC_TOTAL_AREA[name_or_n]
    else:
        n = int(name_or_n)
        num_nets, num_pads = int(round(8.8 * n)), int(round(3.3 * n))
        total_area = total_area or 1800.0 * n
    rng = np.random.default_rng(seed)
    areas = rng.lognormal(0.0, 0.8, n)
    areas = areas / areas.sum() * total_area
    modules = [ModuleSpec.soft_block(f"sb{i}", float(round(a, 1)) or 1.0) for i, a in enumerate(areas)]
    outline = outline_for(modules, whitespace, aspect)
    W, H = outline.width, outline.height

    hid = rng.random((n, 2))
    # pads sit on the boundary at hidden boundary positions
    t = rng.random(num_pads) * 4
    side = t.astype(int)
    frac = t - side
    pad_uv = np.empty((num_pads, 2))
    pad_uv[side == 0] = np.c_[frac[side == 0], np.zeros((side == 0).sum())]
    pad_uv[side == 1] = np.c_[np.ones((side == 1).sum()), frac[side == 1]]
    pad_uv[side == 2] = np.c_[frac[side == 2], np.ones((side == 2).sum())]
    pad_uv[side == 3] = np.c_[np.zeros((side == 3).sum()), frac[side == 3]]
    if pads_on_boundary:
        pxy = pad_uv * [W, H]
    else:
        pxy = rng.random((num_pads, 2)) * [W, H]
    terminals = tuple(Terminal(f"p{i + 1}", float(px), float(py)) for i, (px, py) in enumerate(pxy))

    nets = []
    pad_used = np.zeros(num_pads, dtype=bool)
    for e in range(num_nets):
        d = _degree(rng)
        seed_mod = int(rng.integers(n))
        dist = np.linalg.norm(hid - hid[seed_mod], axis=1)
        near = np.argsort(dist)[: max(2 * d, 6)]
        members = list(rng.choice(near[1:], size=min(d - 1, len(near) - 1), replace=False))
        pins = [(seed_mod, 0.0, 0.0)] + [(int(m), 0.0, 0.0) for m in members]
        if e < num_pads or rng.random() < 0.15:
            pdist = np.linalg.norm(pad_uv - hid[seed_mod], axis=1) + 0.05 * pad_used
            pk = int(np.argmin(pdist))
            pad_used[pk] = True
            pins[-1] = ("T", pk)
        nets.append(pins)
    netlist = Netlist.from_pins(nets, [f"n{i}" for i in range(num_nets)])
    return Floorplan(outline, tuple(modules), netlist, terminals)


def _slice(rng, x0, y0, x1, y1, count, out):
    if count == 1:
        out.append((x0, y0, x1, y1))
        return
    left = int(rng.integers(1, count))
    frac = left / count
    if (x1 - x0) >= (y1 - y0):
        xm = x0 + (x1 - x0) * frac
        _slice(rng, x0, y0, xm, y1, left, out)
        _slice(rng, xm, y0, x1, y1, count - left, out)
    else:
        ym = y0 + (y1 - y0) * frac
        _slice(rng, x0, y0, x1, ym, left, out)
        _slice(rng, x0, ym, x1, y1, count - left, out)


def overlapping_layout(n: int, utilization: float = 0.85, seed: int = 0, jitter: float = 0.25,
                       W: float = 100.0, H: float = 100.0) -> RectArrays:
    """Random rectangles with total area ``utilization * W * H``, lightly overlapping.

    A random slicing partition of the outline is shrunk uniformly to the
    target utilization, then each block is displaced by up to ``jitter``
    times its own size and clamped into the outline.
    """
    rng = np.random.default_rng(seed)
    cells = []
    _slice(rng, 0.0, 0.0, W, H, n, cells)
    c = np.asarray(cells)
    cw = c[:, 2] - c[:, 0]
    ch = c[:, 3] - c[:, 1]
    s = np.sqrt(utilization)
    w = cw * s
    h = ch * s
    cx = (c[:, 0] + c[:, 2]) / 2 + rng.uniform(-jitter, jitter, n) * w
    cy = (c[:, 1] + c[:, 3]) / 2 + rng.uniform(-jitter, jitter, n) * h
    cx = np.clip(cx, w / 2, W - w / 2)
    cy = np.clip(cy, h / 2, H - h / 2)
    return RectArrays(cx - w / 2, cy - h / 2, w, h)
