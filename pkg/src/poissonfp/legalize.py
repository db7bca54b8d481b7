"""Constraint-graph legalization.

The global result is turned into a horizontal graph (A -> B: A left of B)
and a vertical graph (A -> B: A below B) with at least one edge per module
pair. Packing both graphs by longest path gives an overlap-free layout. When
the packed layout is wider than the outline, critical horizontal edges are
either dropped (if the pair is already separated vertically) or moved into
the vertical graph; height violations are repaired symmetrically. Shapes are
frozen throughout.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .model import Floorplan, RectArrays, inside_outline, total_overlap
from .wirelength import hpwl

USE_TABU = False
HORIZONTAL = "horizontal"
VERTICAL = "vertical"


class ConstraintGraph:
    """Directed graph over module indices with O(1) edge lookup.

    Edges live in growable arrays with an ``alive`` mask so deletions do not
    reorder anything; ``edges()`` returns the live ``(src, dst)`` arrays.
    """

    def __init__(self, direction: str, n: int, src=(), dst=()):
        if direction not in (HORIZONTAL, VERTICAL):
            raise ValueError(f"unknown direction {direction!r}")
        self.direction = direction
        self.n = int(n)
        src = np.asarray(src, dtype=np.int64).ravel()
        dst = np.asarray(dst, dtype=np.int64).ravel()
        cap = max(16, 2 * len(src))
        self._src = np.zeros(cap, dtype=np.int64)
        self._dst = np.zeros(cap, dtype=np.int64)
        self._alive = np.zeros(cap, dtype=bool)
        self._m = 0
        self._index: dict[tuple[int, int], int] = {}
        self._cache = None
        for a, b in zip(src.tolist(), dst.tolist()):
            self.add_edge(a, b)

    def __len__(self) -> int:
        return len(self._index)

    def __contains__(self, edge) -> bool:
        return tuple(edge) in self._index

    def has_edge(self, a: int, b: int) -> bool:
        return (a, b) in self._index

    def related(self, a: int, b: int) -> bool:
        """True if either ``a -> b`` or ``b -> a`` is an edge."""
        return (a, b) in self._index or (b, a) in self._index

    def add_edge(self, a: int, b: int) -> None:
        if a == b:
            raise ValueError(f"self-edge on module {a}")
        if not (0 <= a < self.n and 0 <= b < self.n):
            raise IndexError(f"edge ({a}, {b}) outside 0..{self.n - 1}")
        if (a, b) in self._index:
            raise ValueError(f"duplicate edge ({a}, {b})")
        if self._m == len(self._src):
            grow = len(self._src)
            self._src = np.concatenate([self._src, np.zeros(grow, dtype=np.int64)])
            self._dst = np.concatenate([self._dst, np.zeros(grow, dtype=np.int64)])
            self._alive = np.concatenate([self._alive, np.zeros(grow, dtype=bool)])
        k = self._m
        self._src[k] = a
        self._dst[k] = b
        self._alive[k] = True
        self._index[(a, b)] = k
        self._m += 1
        self._cache = None

    def remove_edge(self, a: int, b: int) -> None:
        k = self._index.pop((a, b))
        self._alive[k] = False
        self._cache = None

    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        if self._cache is None:
            alive = self._alive[: self._m]
            self._cache = (
                np.ascontiguousarray(self._src[: self._m][alive]),
                np.ascontiguousarray(self._dst[: self._m][alive]),
            )
        return self._cache

    def reaches(self, a: int, b: int) -> bool:
        src, dst = self.edges()
        return bool(kernels.reaches(self.n, src, dst, int(a), int(b)))

    def copy(self) -> ConstraintGraph:
        src, dst = self.edges()
        return ConstraintGraph(self.direction, self.n, src, dst)

    def edge_set(self) -> set[tuple[int, int]]:
        return set(self._index)

    def to_dot(self, names=None) -> str:
        label = (lambda i: names[i]) if names is not None else str
        arrow = "LR" if self.direction == HORIZONTAL else "BT"
        lines = [f"digraph {self.direction} {{", f"  rankdir={arrow};"]
        for i in range(self.n):
            lines.append(f'  n{i} [label="{label(i)}"];')
        for a, b in zip(*self.edges()):
            lines.append(f"  n{a} -> n{b};")
        lines.append("}")
        return "\n".join(lines) + "\n"


def _order(primary, secondary, n):
    """Rank of every module under lexicographic (primary, secondary, index)."""
    order = np.lexsort((np.arange(n), secondary, primary))
    rank = np.empty(n, dtype=np.int64)
    rank[order] = np.arange(n)
    return rank


def build_constraint_graphs(rects: RectArrays) -> tuple[ConstraintGraph, ConstraintGraph]:
    """One or two edges per module pair from the pairwise overlap case.

    Intervals sharing only an endpoint do not overlap. Horizontal edges point
    from the module earlier in (x, y, index) order, vertical edges from the
    module earlier in (y, x, index) order, so both graphs are acyclic.
    """
    n = len(rects.xl)
    hcg = ConstraintGraph(HORIZONTAL, n)
    vcg = ConstraintGraph(VERTICAL, n)
    if n < 2:
        return hcg, vcg
    i, j = np.triu_indices(n, 1)
    ox = np.minimum(rects.xh[i], rects.xh[j]) - np.maximum(rects.xl[i], rects.xl[j])
    oy = np.minimum(rects.yh[i], rects.yh[j]) - np.maximum(rects.yl[i], rects.yl[j])
    over_x = ox > 0
    over_y = oy > 0
    # neither overlaps: both; y only: H; x only: V; both: larger overlap axis decides, tie -> H
    want_h = ~over_x | (over_y & (ox <= oy))
    want_v = ~over_y | (over_x & (ox > oy))

    hr = _order(rects.xl, rects.yl, n)
    vr = _order(rects.yl, rects.xl, n)
    hi, hj = i[want_h], j[want_h]
    flip = hr[hi] > hr[hj]
    hcg = ConstraintGraph(HORIZONTAL, n, np.where(flip, hj, hi), np.where(flip, hi, hj))
    vi, vj = i[want_v], j[want_v]
    flip = vr[vi] > vr[vj]
    vcg = ConstraintGraph(VERTICAL, n, np.where(flip, vj, vi), np.where(flip, vi, vj))
    return hcg, vcg


def pack(graph: ConstraintGraph, sizes: np.ndarray) -> np.ndarray:
    """Longest-path positions: sources at 0, others after their latest predecessor."""
    src, dst = graph.edges()
    return kernels.longest_path(graph.n, src, dst, np.ascontiguousarray(sizes, dtype=float))


def pack_reversed(graph: ConstraintGraph, sizes: np.ndarray) -> np.ndarray:
    """Positions measured from the far side (all edges reversed)."""
    src, dst = graph.edges()
    return kernels.longest_path(graph.n, dst, src, np.ascontiguousarray(sizes, dtype=float))


def extents(positions: np.ndarray, sizes: np.ndarray, graph: ConstraintGraph) -> float:
    """Far edge of the packed layout, taken over modules without successors."""
    if graph.n == 0:
        return 0.0
    src, _ = graph.edges()
    sink = np.ones(graph.n, dtype=bool)
    sink[src] = False
    return float((positions + sizes)[sink].max())


@dataclass
class AxisPacking:
    pos: np.ndarray
    rpos: np.ndarray
    slack: np.ndarray
    extent: float


def slacks(graph: ConstraintGraph, sizes: np.ndarray, limit: float) -> AxisPacking:
    """Forward and reversed packing plus ``slack = limit - (pos + rpos + size)``."""
    pos = pack(graph, sizes)
    rpos = pack_reversed(graph, sizes)
    return AxisPacking(pos, rpos, limit - (pos + rpos + sizes), extents(pos, sizes, graph))


def critical_set(graph: ConstraintGraph, slack: np.ndarray, tol: float) -> np.ndarray:
    """Indices into ``graph.edges()`` whose endpoints both have zero slack.

    When the packing overflows every slack is negative and the modules on a
    longest path share the minimum ``limit - extent``; slack is then measured
    relative to that minimum, so a fitting layout uses plain ``slack <= tol``.
    """
    src, dst = graph.edges()
    if len(src) == 0:
        return np.zeros(0, dtype=np.int64)
    zero = min(0.0, float(slack.min()))
    crit = slack <= zero + tol
    return np.flatnonzero(crit[src] & crit[dst])


def compressible(lo_a, hi_a, lo_b, hi_b):
    """Closed intervals [lo_a, hi_a] and [lo_b, hi_b] are disjoint (touching is not)."""
    return (np.asarray(hi_a) < np.asarray(lo_b)) | (np.asarray(hi_b) < np.asarray(lo_a))


def edge_weight(pos_a, pos_b, slack_a, slack_b, size_a, size_b):
    """Orthogonal slack left after stacking the pair: ``S_A - size_B`` if A is lower, else ``S_B - size_A``."""
    pos_a = np.asarray(pos_a)
    return np.where(pos_a <= np.asarray(pos_b), np.asarray(slack_a) - size_b, np.asarray(slack_b) - size_a)


@dataclass
class OpCounter:
    """Work done by the repair loops, in edge/vertex visits."""

    iterations: int = 0
    visits: int = 0
    per_iteration: list[int] = field(default_factory=list)
    deletions: int = 0
    moves: int = 0


class LegalizationError(RuntimeError):
    pass


def _repair_axis(limit, graph, other, size, other_size, other_limit, counter, log=None, max_steps=None,
                 rule="extent", tabu=None, moved=None):
    """Shrink ``graph``'s packed extent to ``limit`` by editing both graphs.

    ``rule`` picks the edge to move when no critical edge can simply be
    dropped: ``"weight"`` takes the largest orthogonal-slack weight,
    ``"extent"`` (default) the smallest orthogonal extent after insertion,
    which is exact from the forward and reversed packings, with the weight
    as tie-break. Unordered pairs in ``tabu`` (typically the ones the other
    axis just moved) are only moved back when nothing else is available;
    every moved pair is added to ``moved``.

    Returns True on success. ``log`` receives ``("delete", a, b)`` and
    ``("move", a, b, c, d)`` records (``c -> d`` being the edge added to ``other``).
    """
    n = graph.n
    tol = 1e-9 * max(limit, 1.0)
    otol = 1e-9 * max(other_limit, 1.0)
    if max_steps is None:
        max_steps = 10 * (len(graph) + len(other)) + 10
    p = slacks(graph, size, limit)
    q = slacks(other, other_size, other_limit)
    steps = 0
    while p.extent > limit + tol:
        if steps >= max_steps:
            return False
        steps += 1
        src, dst = graph.edges()
        visits = 2 * (len(src) + n) + 2 * (len(other) + n)
        idx = critical_set(graph, p.slack, tol)
        # only edges that actually bind: B starts where A ends
        tight = np.abs(p.pos[dst[idx]] - (p.pos[src[idx]] + size[src[idx]])) <= tol
        idx = idx[tight]
        visits += 2 * len(src)
        if len(idx) == 0:
            raise LegalizationError("extent exceeds the outline but no critical edge exists")
        a, b = src[idx], dst[idx]
        olo, ohi = q.pos, q.pos + other_size
        comp = np.flatnonzero(compressible(olo[a], ohi[a], olo[b], ohi[b]))
        done = False
        touched_other = False
        for k in comp:
            ak, bk = int(a[k]), int(b[k])
            visits += 1
            if other.related(ak, bk):
                graph.remove_edge(ak, bk)
                counter.deletions += 1
                if log is not None:
                    log.append(("delete", ak, bk))
                done = True
                break
        if not done:
            wt = edge_weight(q.pos[a], q.pos[b], q.slack[a], q.slack[b], other_size[a], other_size[b])
            visits += len(idx)
            first = q.pos[a] <= q.pos[b]
            lo, hi = np.where(first, a, b), np.where(first, b, a)
            if rule == "weight":
                # largest weight first, insert along the current order; ties by module indices
                order = np.lexsort((b, a, -wt))
                cand_u, cand_v = lo[order], hi[order]
                cand_k = order
            else:
                # both orientations, smallest orthogonal extent after the move first
                m = len(a)
                u = np.concatenate([lo, hi])
                v = np.concatenate([hi, lo])
                path = q.pos[u] + other_size[u] + other_size[v] + q.rpos[v]
                linked = np.fromiter((other.related(int(x), int(y)) for x, y in zip(lo, hi)), bool, m)
                after = np.where(np.concatenate([linked, linked]), q.extent, np.maximum(path, q.extent))
                kk = np.concatenate([np.arange(m), np.arange(m)])
                flipped = np.repeat([0, 1], m)
                sel = np.lexsort((flipped, b[kk], a[kk], -wt[kk], after))
                if tabu:
                    banned = np.fromiter(((min(x, y), max(x, y)) in tabu for x, y in zip(a.tolist(), b.tolist())),
                                         bool, m)
                    sel = sel[np.argsort(banned[kk[sel]], kind="stable")]
                cand_u, cand_v, cand_k = u[sel], v[sel], kk[sel]
            chosen = None
            for uu, vv, k in zip(cand_u.tolist(), cand_v.tolist(), cand_k.tolist()):
                ak, bk = int(a[k]), int(b[k])
                if other.related(uu, vv):
                    chosen = (ak, bk, None)
                    break
                if other.reaches(vv, uu):
                    continue
                chosen = (ak, bk, (uu, vv))
                break
            if chosen is None:
                # every insertion would close a cycle; dropping the edge bare could overlap
                raise LegalizationError("no critical edge can move without a cycle in the other graph")
            ak, bk, ins = chosen
            if moved is not None:
                moved.add((min(ak, bk), max(ak, bk)))
            graph.remove_edge(ak, bk)
            if ins is not None:
                other.add_edge(*ins)
                touched_other = True
            counter.moves += 1
            if log is not None:
                log.append(("move", ak, bk) + (ins if ins is not None else (None, None)))
        p = slacks(graph, size, limit)
        if touched_other:
            q = slacks(other, other_size, other_limit)
        else:
            visits -= 2 * (len(other) + n)
        counter.iterations += 1
        counter.visits += visits
        counter.per_iteration.append(visits)
    return True


def lg_x(W, H, hcg, vcg, w, h, counter=None, log=None, rule="extent", tabu=None, moved=None):
    """Horizontal repair; returns ``(hcg, vcg)`` edited in place."""
    counter = counter if counter is not None else OpCounter()
    _repair_axis(W, hcg, vcg, w, h, H, counter, log, rule=rule, tabu=tabu, moved=moved)
    return hcg, vcg


def lg_y(W, H, hcg, vcg, w, h, counter=None, log=None, rule="extent", tabu=None, moved=None):
    """Vertical repair; returns ``(hcg, vcg)`` edited in place."""
    counter = counter if counter is not None else OpCounter()
    _repair_axis(H, vcg, hcg, h, w, W, counter, log, rule=rule, tabu=tabu, moved=moved)
    return hcg, vcg


@dataclass
class LegalizeResult:
    x: np.ndarray  # lower-left corners
    y: np.ndarray
    success: bool
    rounds: int
    width: float  # packed extents
    height: float
    counter: OpCounter
    hcg: ConstraintGraph
    vcg: ConstraintGraph


def legalize(W: float, H: float, hcg: ConstraintGraph, vcg: ConstraintGraph,
             w: np.ndarray, h: np.ndarray, N: int = 10, log=None, rule: str = "extent") -> LegalizeResult:
    """Alternate horizontal and vertical repair for at most ``N`` rounds.

    Returns left/bottom-packed lower-left corners. The layout is always
    overlap-free; ``success`` says whether it also fits ``W x H``.
    """
    w = np.asarray(w, dtype=float)
    h = np.asarray(h, dtype=float)
    counter = OpCounter()
    tolw, tolh = 1e-9 * max(W, 1.0), 1e-9 * max(H, 1.0)
    rounds = 0
    ok = False
    # a pair one axis just moved is not handed straight back by the other
    last: set[tuple[int, int]] = set()
    for rounds in range(1, N + 1):
        try:
            moved_x: set[tuple[int, int]] = set()
            lg_x(W, H, hcg, vcg, w, h, counter, log, rule, last if USE_TABU else None, moved_x)
            last = set()
            lg_y(W, H, hcg, vcg, w, h, counter, log, rule, moved_x if USE_TABU else None, last)
        except LegalizationError:
            break
        wd = extents(pack(hcg, w), w, hcg)
        hd = extents(pack(vcg, h), h, vcg)
        if wd <= W + tolw and hd <= H + tolh:
            ok = True
            break
    x = pack(hcg, w)
    y = pack(vcg, h)
    wd = extents(x, w, hcg) if len(w) else 0.0
    hd = extents(y, h, vcg) if len(h) else 0.0
    ok = ok and wd <= W + tolw and hd <= H + tolh
    return LegalizeResult(x, y, ok, rounds, wd, hd, counter, hcg, vcg)


def anchored_positions(graph: ConstraintGraph, sizes: np.ndarray, limit: float,
                       target: np.ndarray) -> np.ndarray:
    """Place each module as close to ``target`` as the graph allows inside ``[0, limit]``.

    Modules are visited in topological order; each is clamped between the end
    of its already placed predecessors and the latest start that still leaves
    room for its successors. Requires a packed extent of at most ``limit``.
    """
    n = graph.n
    pos = pack(graph, sizes)
    latest = limit - pack_reversed(graph, sizes) - sizes
    order = np.argsort(pos, kind="stable")  # edges strictly increase packed position
    preds_ptr, by_dst = _predecessors(graph)
    out = np.zeros(n)
    for v in order:
        p = by_dst[preds_ptr[v]:preds_ptr[v + 1]]
        lo = float((out[p] + sizes[p]).max()) if len(p) else 0.0
        hi = max(float(latest[v]), lo)
        out[v] = min(max(float(target[v]), lo), hi)
    return out


def _predecessors(graph: ConstraintGraph):
    src, dst = graph.edges()
    ptr = np.zeros(graph.n + 1, dtype=np.int64)
    np.add.at(ptr, dst + 1, 1)
    return np.cumsum(ptr), src[np.argsort(dst, kind="stable")]


def centers_from_corners(graph: ConstraintGraph, corner: np.ndarray, sizes: np.ndarray) -> np.ndarray:
    """Centers whose recomputed corners ``c - size/2`` still satisfy every edge exactly.

    ``(corner + size/2) - size/2`` can land one ulp below ``corner``; such
    centers are nudged upward in topological order until abutting modules no
    longer intersect in floating point.
    """
    c = corner + sizes / 2
    lo_edge = c - sizes / 2
    ptr, preds = _predecessors(graph)
    for v in np.argsort(corner, kind="stable"):
        p = preds[ptr[v]:ptr[v + 1]]
        if not len(p):
            continue
        lo = float((lo_edge[p] + sizes[p]).max())
        while lo_edge[v] < lo:
            c[v] = np.nextafter(c[v], np.inf)
            lo_edge[v] = c[v] - sizes[v] / 2
    return c


@dataclass
class FloorplanLegalization:
    floorplan: Floorplan
    success: bool
    result: LegalizeResult
    hpwl_before: float
    hpwl_after: float
    placement: str  # "packed" or "anchored"

    @property
    def rate_of_change(self) -> float:
        """HPWL change through legalization, in percent of the pre-legalization HPWL."""
        if self.hpwl_before == 0:
            return 0.0
        return (self.hpwl_after - self.hpwl_before) / self.hpwl_before * 100.0


def legalize_floorplan(fp: Floorplan, N: int = 10, anchored: bool = True) -> FloorplanLegalization:
    """Legalize a global floorplan with its soft shapes frozen.

    On success two overlap-free placements of the final graphs are compared,
    the left/bottom packing and the one anchored at the global positions, and
    the one with lower HPWL is kept.
    """
    r = fp.rects()
    W, H = fp.outline.width, fp.outline.height
    w, h = fp.w.copy(), fp.h.copy()
    hcg, vcg = build_constraint_graphs(r)
    res = legalize(W, H, hcg, vcg, w, h, N)
    before = hpwl(fp)

    def place(cx, cy):
        return fp.with_state(centers_from_corners(res.hcg, cx, w), centers_from_corners(res.vcg, cy, h), w)

    best, kind = place(res.x, res.y), "packed"
    if res.success and anchored and fp.n:
        cand = place(anchored_positions(res.hcg, w, W, r.xl), anchored_positions(res.vcg, h, H, r.yl))
        if hpwl(cand) < hpwl(best) and total_overlap(cand) == 0.0:
            best, kind = cand, "anchored"
    tol = 1e-9 * max(W, H)
    success = res.success and total_overlap(best) == 0.0 and inside_outline(best.rects(), fp.outline, tol)
    return FloorplanLegalization(best, success, res, before, hpwl(best), kind)
