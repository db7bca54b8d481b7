"""Domain types: outline, modules, terminals, netlist and the floorplan itself.

Module placements are stored as parallel numpy arrays (centers ``x``, ``y`` and
widths ``w``); heights are always derived as ``area / w``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

SWEEP_THRESHOLD = 1000


@dataclass(frozen=True)
class Outline:
    width: float
    height: float

    def __post_init__(self):
        if not (self.width > 0 and self.height > 0):
            raise ValueError(f"outline must have positive size, got {self.width}x{self.height}")

    @property
    def area(self) -> float:
        return self.width * self.height


@dataclass(frozen=True)
class ModuleSpec:
    """A rectangular block. Hard blocks have a fixed width/height, soft blocks
    a fixed area and an aspect-ratio (height/width) window."""

    name: str
    area: float
    hard: bool = False
    width: float | None = None
    height: float | None = None
    ar_lo: float = 1.0 / 3.0
    ar_hi: float = 3.0

    def __post_init__(self):
        if not self.area > 0:
            raise ValueError(f"module {self.name!r}: area must be positive")
        if self.hard:
            if self.width is None or self.height is None or self.width <= 0 or self.height <= 0:
                raise ValueError(f"hard module {self.name!r} needs positive width and height")
        elif not (0 < self.ar_lo <= self.ar_hi):
            raise ValueError(f"soft module {self.name!r}: need 0 < ar_lo <= ar_hi")

    @classmethod
    def hard_block(cls, name: str, width: float, height: float) -> "ModuleSpec":
        return cls(name, width * height, True, width, height, height / width, height / width)

    @classmethod
    def soft_block(cls, name: str, area: float, ar_lo: float = 1 / 3, ar_hi: float = 3.0) -> "ModuleSpec":
        return cls(name, area, False, None, None, ar_lo, ar_hi)


@dataclass(frozen=True)
class Terminal:
    name: str
    x: float = 0.0
    y: float = 0.0


@dataclass(frozen=True)
class Rect:
    xl: float
    yl: float
    xh: float
    yh: float

    @property
    def width(self) -> float:
        return self.xh - self.xl

    @property
    def height(self) -> float:
        return self.yh - self.yl

    @property
    def area(self) -> float:
        return self.width * self.height


@dataclass
class Netlist:
    """Nets in CSR layout.

    Pin ``k`` belongs to net ``pin_net[k]``. ``pin_module[k]`` is a module index
    or -1 for a terminal pin, in which case ``pin_terminal[k]`` names the
    terminal. Module pin offsets are stored as fractions of the module's
    current width/height (``fx``, ``fy``) so they rescale with soft modules.
    """

    net_ptr: np.ndarray
    pin_module: np.ndarray
    pin_terminal: np.ndarray
    pin_fx: np.ndarray
    pin_fy: np.ndarray
    names: tuple[str, ...] = ()

    @classmethod
    def empty(cls) -> "Netlist":
        z = np.zeros(0)
        zi = np.zeros(0, dtype=np.int64)
        return cls(np.zeros(1, dtype=np.int64), zi, zi.copy(), z, z.copy())

    @classmethod
    def from_pins(cls, nets: Sequence[Sequence[tuple]], names: Sequence[str] = ()) -> "Netlist":
        """Build from ``nets[i] = [(module, fx, fy) | ('T', terminal), ...]``.

        A pin is either ``(module_index, fx, fy)`` or ``("T", terminal_index)``.
        """
        ptr = [0]
        mod, term, fx, fy = [], [], [], []
        for pins in nets:
            for pin in pins:
                if pin[0] == "T":
                    mod.append(-1)
                    term.append(int(pin[1]))
                    fx.append(0.0)
                    fy.append(0.0)
                else:
                    mod.append(int(pin[0]))
                    term.append(-1)
                    fx.append(float(pin[1]) if len(pin) > 1 else 0.0)
                    fy.append(float(pin[2]) if len(pin) > 2 else 0.0)
            ptr.append(len(mod))
        return cls(
            np.asarray(ptr, dtype=np.int64),
            np.asarray(mod, dtype=np.int64),
            np.asarray(term, dtype=np.int64),
            np.asarray(fx, dtype=float),
            np.asarray(fy, dtype=float),
            tuple(names),
        )

    @property
    def num_nets(self) -> int:
        return len(self.net_ptr) - 1

    @property
    def num_pins(self) -> int:
        return len(self.pin_module)

    @property
    def pin_net(self) -> np.ndarray:
        return np.repeat(np.arange(self.num_nets), np.diff(self.net_ptr))

    def degrees(self) -> np.ndarray:
        return np.diff(self.net_ptr)

    def validate(self, num_modules: int, num_terminals: int) -> None:
        m = self.pin_module
        bad = (m >= num_modules) | ((m < 0) & ((self.pin_terminal < 0) | (self.pin_terminal >= num_terminals)))
        if np.any(bad):
            k = int(np.flatnonzero(bad)[0])
            raise ValueError(f"pin {k} references an unknown module or terminal")


@dataclass
class Floorplan:
    outline: Outline
    modules: tuple[ModuleSpec, ...]
    netlist: Netlist = field(default_factory=Netlist.empty)
    terminals: tuple[Terminal, ...] = ()
    x: np.ndarray | None = None
    y: np.ndarray | None = None
    w: np.ndarray | None = None

    def __post_init__(self):
        self.modules = tuple(self.modules)
        self.terminals = tuple(self.terminals)
        n = len(self.modules)
        if self.w is None:
            self.w = np.array([m.width if m.hard else np.sqrt(m.area) for m in self.modules], dtype=float)
        if self.x is None:
            self.x = np.full(n, self.outline.width / 2)
        if self.y is None:
            self.y = np.full(n, self.outline.height / 2)
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        self.w = np.asarray(self.w, dtype=float)
        if not (len(self.x) == len(self.y) == len(self.w) == n):
            raise ValueError("state vectors must match the module count")

    @property
    def n(self) -> int:
        return len(self.modules)

    @property
    def areas(self) -> np.ndarray:
        return np.array([m.area for m in self.modules], dtype=float)

    @property
    def hard_mask(self) -> np.ndarray:
        return np.array([m.hard for m in self.modules], dtype=bool)

    @property
    def h(self) -> np.ndarray:
        return self.areas / self.w

    @property
    def terminal_xy(self) -> np.ndarray:
        if not self.terminals:
            return np.zeros((0, 2))
        return np.array([(t.x, t.y) for t in self.terminals], dtype=float)

    def with_state(self, x=None, y=None, w=None) -> "Floorplan":
        return replace(
            self,
            x=self.x.copy() if x is None else np.asarray(x, dtype=float),
            y=self.y.copy() if y is None else np.asarray(y, dtype=float),
            w=self.w.copy() if w is None else np.asarray(w, dtype=float),
        )

    def rects(self) -> "RectArrays":
        h = self.h
        return RectArrays(self.x - self.w / 2, self.y - h / 2, self.w.copy(), h)


@dataclass
class RectArrays:
    """Lower-left corner plus size for every module. Upper edges are always
    computed as ``xl + w`` so that abutting packed rectangles compare exactly."""

    xl: np.ndarray
    yl: np.ndarray
    w: np.ndarray
    h: np.ndarray

    @property
    def xh(self) -> np.ndarray:
        return self.xl + self.w

    @property
    def yh(self) -> np.ndarray:
        return self.yl + self.h

    def __len__(self) -> int:
        return len(self.xl)

    def rect(self, i: int) -> Rect:
        return Rect(self.xl[i], self.yl[i], self.xl[i] + self.w[i], self.yl[i] + self.h[i])


def occupied_rect(x: float, y: float, w: float, area: float) -> Rect:
    if not w > 0:
        raise ValueError("width must be positive")
    h = area / w
    return Rect(x - w / 2, y - h / 2, x + w / 2, y + h / 2)


def pairwise_overlap_area(a: Rect, b: Rect) -> float:
    dx = min(a.xh, b.xh) - max(a.xl, b.xl)
    dy = min(a.yh, b.yh) - max(a.yl, b.yl)
    if dx <= 0 or dy <= 0:
        return 0.0
    return dx * dy


def _overlap_naive(xl, yl, xh, yh) -> float:
    dx = np.minimum(xh[:, None], xh[None, :]) - np.maximum(xl[:, None], xl[None, :])
    dy = np.minimum(yh[:, None], yh[None, :]) - np.maximum(yl[:, None], yl[None, :])
    ov = np.clip(dx, 0, None) * np.clip(dy, 0, None)
    return float(np.triu(ov, 1).sum())


def _overlap_sweep(xl, yl, xh, yh) -> float:
    order = np.argsort(xl, kind="stable")
    xl, yl, xh, yh = xl[order], yl[order], xh[order], yh[order]
    total = 0.0
    n = len(xl)
    for i in range(n - 1):
        # candidates start before i ends (sorted by left edge)
        j_end = np.searchsorted(xl, xh[i], side="left")
        if j_end <= i + 1:
            continue
        sl = slice(i + 1, j_end)
        dx = np.minimum(xh[i], xh[sl]) - xl[sl]
        dy = np.minimum(yh[i], yh[sl]) - np.maximum(yl[i], yl[sl])
        total += float((np.clip(dx, 0, None) * np.clip(dy, 0, None)).sum())
    return total


def total_overlap(rects: RectArrays | Floorplan) -> float:
    """Sum of pairwise intersection areas over unordered module pairs."""
    if isinstance(rects, Floorplan):
        rects = rects.rects()
    if len(rects) < 2:
        return 0.0
    args = (rects.xl, rects.yl, rects.xh, rects.yh)
    if len(rects) > SWEEP_THRESHOLD:
        return _overlap_sweep(*args)
    return _overlap_naive(*args)


def inside_outline(rects: RectArrays, outline: Outline, tol: float = 0.0) -> bool:
    return bool(
        np.all(rects.xl >= -tol)
        and np.all(rects.yl >= -tol)
        and np.all(rects.xh <= outline.width + tol)
        and np.all(rects.yh <= outline.height + tol)
    )


def outline_for(modules: Sequence[ModuleSpec], whitespace: float, aspect: float = 1.0) -> Outline:
    """Outline with area (sum of module areas)*(1+whitespace) and height/width = aspect."""
    if whitespace < 0:
        raise ValueError("whitespace must be >= 0")
    if not aspect > 0:
        raise ValueError("aspect ratio must be positive")
    total = sum(m.area for m in modules)
    w = np.sqrt(total * (1 + whitespace) / aspect)
    return Outline(float(w), float(w * aspect))


def density_integrals(rects: RectArrays, i: int) -> np.ndarray:
    """Integral over module ``i`` of every module's unit density.

    Entry ``j`` is the integral of the indicator of R_j over R_i, evaluated as
    the product of the two clipped interval lengths. Entry ``i`` is Area(R_i).
    """
    dx = np.minimum(rects.xh[i], rects.xh) - np.maximum(rects.xl[i], rects.xl)
    dy = np.minimum(rects.yh[i], rects.yh) - np.maximum(rects.yl[i], rects.yl)
    out = np.clip(dx, 0, None) * np.clip(dy, 0, None)
    out[i] = rects.w[i] * rects.h[i]
    return out


def covers_only_itself(rects: RectArrays, i: int) -> bool:
    """True iff the summed density integrated over R_i equals Area(R_i).

    The sum is formed with ``math.fsum`` so that a positive contribution from
    another module can never be lost to rounding.
    """
    parts = density_integrals(rects, i)
    return math.fsum(list(parts) + [-rects.w[i] * rects.h[i]]) == 0.0
