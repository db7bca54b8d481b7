"""Half-perimeter and log-sum-exp wirelength."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Floorplan


@dataclass(frozen=True)
class WirelengthParams:
    gamma: float

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("LSE smoothing gamma must be positive")


def pin_positions(fp: Floorplan) -> tuple[np.ndarray, np.ndarray]:
    nl = fp.netlist
    m = nl.pin_module
    is_mod = m >= 0
    px = np.empty(nl.num_pins)
    py = np.empty(nl.num_pins)
    mm = m[is_mod]
    px[is_mod] = fp.x[mm] + nl.pin_fx[is_mod] * fp.w[mm]
    py[is_mod] = fp.y[mm] + nl.pin_fy[is_mod] * fp.h[mm]
    if np.any(~is_mod):
        txy = fp.terminal_xy
        t = nl.pin_terminal[~is_mod]
        px[~is_mod] = txy[t, 0]
        py[~is_mod] = txy[t, 1]
    return px, py


def _segments(fp: Floorplan):
    ptr = fp.netlist.net_ptr
    starts = ptr[:-1]
    nonempty = np.diff(ptr) > 0
    return starts[nonempty], nonempty


def hpwl(fp: Floorplan) -> float:
    if fp.netlist.num_pins == 0:
        return 0.0
    px, py = pin_positions(fp)
    starts, _ = _segments(fp)
    total = 0.0
    for c in (px, py):
        total += float((np.maximum.reduceat(c, starts) - np.minimum.reduceat(c, starts)).sum())
    return total


def _lse_axis(c: np.ndarray, starts: np.ndarray, seg: np.ndarray, gamma: float, grad: bool):
    """gamma*ln(sum e^{c/g}) + gamma*ln(sum e^{-c/g}) per net, with max shifting."""
    cmax = np.maximum.reduceat(c, starts)
    cmin = np.minimum.reduceat(c, starts)
    ep = np.exp((c - cmax[seg]) / gamma)
    em = np.exp((cmin[seg] - c) / gamma)
    sp = np.add.reduceat(ep, starts)
    sm = np.add.reduceat(em, starts)
    val = (cmax + gamma * np.log(sp)) + (-cmin + gamma * np.log(sm))
    if not grad:
        return val, None
    return val, ep / sp[seg] - em / sm[seg]


def _pin_segments(fp: Floorplan):
    starts, nonempty = _segments(fp)
    seg = np.repeat(np.arange(len(starts)), np.diff(fp.netlist.net_ptr)[nonempty])
    return starts, seg


def lse_wirelength(fp: Floorplan, params: WirelengthParams) -> float:
    if fp.netlist.num_pins == 0:
        return 0.0
    px, py = pin_positions(fp)
    starts, seg = _pin_segments(fp)
    vx, _ = _lse_axis(px, starts, seg, params.gamma, False)
    vy, _ = _lse_axis(py, starts, seg, params.gamma, False)
    return float(vx.sum() + vy.sum())


def lse_value_and_gradient(fp: Floorplan, params: WirelengthParams):
    """Return ``(value, gx, gy, gw)`` with per-module partial derivatives.

    The width derivative follows the pin offsets: x offsets scale with ``w``
    and y offsets with ``h = A / w``. Terminal pins receive no gradient.
    """
    n = fp.n
    gx = np.zeros(n)
    gy = np.zeros(n)
    gw = np.zeros(n)
    nl = fp.netlist
    if nl.num_pins == 0:
        return 0.0, gx, gy, gw
    px, py = pin_positions(fp)
    starts, seg = _pin_segments(fp)
    vx, dpx = _lse_axis(px, starts, seg, params.gamma, True)
    vy, dpy = _lse_axis(py, starts, seg, params.gamma, True)
    is_mod = nl.pin_module >= 0
    mm = nl.pin_module[is_mod]
    dpx = dpx[is_mod]
    dpy = dpy[is_mod]
    np.add.at(gx, mm, dpx)
    np.add.at(gy, mm, dpy)
    dh_dw = -fp.areas[mm] / fp.w[mm] ** 2
    np.add.at(gw, mm, dpx * nl.pin_fx[is_mod] + dpy * nl.pin_fy[is_mod] * dh_dw)
    gw[fp.hard_mask] = 0.0
    return float(vx.sum() + vy.sum()), gx, gy, gw


def lse_gradient(fp: Floorplan, params: WirelengthParams):
    _, gx, gy, gw = lse_value_and_gradient(fp, params)
    return gx, gy, gw
