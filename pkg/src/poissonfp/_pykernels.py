"""Pure numpy/Python versions of the hot kernels.

Used when the compiled extension is missing or ``POISSONFP_PURE=1`` is set.
Signatures and results match ``_ckernels`` exactly (up to floating-point
summation order).
"""
from __future__ import annotations

from collections import deque

import numpy as np


def up(v: float) -> int:
    if v < 0:
        raise ValueError(f"up() needs a non-negative argument, got {v}")
    if v == 0:
        return 0
    return int(np.ceil(v)) - 1


def down(v: float) -> int:
    if v < 0:
        raise ValueError(f"down() needs a non-negative argument, got {v}")
    return int(np.floor(v))


def _span(lo: float, hi: float, size: float, K: int) -> tuple[int, int]:
    a = int(np.floor(lo / size)) if lo > 0 else 0
    b_arg = hi / size
    b = int(np.ceil(b_arg)) - 1 if b_arg > 0 else 0
    a = min(max(a, 0), K - 1)
    b = min(max(b, 0), K - 1)
    if b < a:
        b = a
    return a, b


def bin_spans(xl, yl, xh, yh, wb, hb, K):
    n = len(xl)
    out = np.empty((n, 4), dtype=np.int64)
    for i in range(n):
        out[i, 0], out[i, 1] = _span(xl[i], xh[i], wb, K)
        out[i, 2], out[i, 3] = _span(yl[i], yh[i], hb, K)
    return out


def rasterize(xl, yl, xh, yh, K, wb, hb):
    """Exact bin coverage: rho[p, q] = sum_k |bin(p,q) & R_k| / |bin|."""
    if len(xl) == 0:
        return np.zeros((K, K))
    ex = np.arange(K + 1) * wb
    ey = np.arange(K + 1) * hb
    ox = np.clip(np.minimum(xh[:, None], ex[None, 1:]) - np.maximum(xl[:, None], ex[None, :-1]), 0, None)
    oy = np.clip(np.minimum(yh[:, None], ey[None, 1:]) - np.maximum(yl[:, None], ey[None, :-1]), 0, None)
    return (ox.T @ oy) / (wb * hb)


def fast_potential(xl, yl, xh, yh, w, area, psi, sat, wb, hb):
    """Bin-rule energy of each module and its (x, y, w) partial derivatives.

    The bin span is held fixed while differentiating. Returns
    ``(g, gx, gy, gw, reads)`` where ``reads`` counts psi samples touched by
    the edge/corner terms of each module.
    """
    K = psi.shape[0]
    n = len(xl)
    g = np.empty(n)
    gx = np.empty(n)
    gy = np.empty(n)
    gw = np.empty(n)
    reads = np.empty(n, dtype=np.int64)
    for i in range(n):
        XL, XU = _span(xl[i], xh[i], wb, K)
        YL, YU = _span(yl[i], yh[i], hb, K)
        left = xl[i] - XL * wb
        right = (XU + 1) * wb - xh[i]
        bot = yl[i] - YL * hb
        top = (YU + 1) * hb - yh[i]
        col_l = psi[XL, YL:YU + 1].sum()
        col_u = psi[XU, YL:YU + 1].sum()
        row_l = psi[XL:XU + 1, YL].sum()
        row_u = psi[XL:XU + 1, YU].sum()
        p_ll, p_lu, p_ul, p_uu = psi[XL, YL], psi[XL, YU], psi[XU, YL], psi[XU, YU]
        reads[i] = 2 * (YU - YL + 1) + 2 * (XU - XL + 1) + 4
        full = sat[XU + 1, YU + 1] - sat[XL, YU + 1] - sat[XU + 1, YL] + sat[XL, YL]
        g[i] = (
            wb * hb * full
            - hb * left * col_l - hb * right * col_u
            - wb * bot * row_l - wb * top * row_u
            + left * top * p_lu + left * bot * p_ll
            + right * top * p_uu + right * bot * p_ul
        )
        gx[i] = hb * (col_u - col_l) + bot * (p_ll - p_ul) + top * (p_lu - p_uu)
        gy[i] = wb * (row_u - row_l) + left * (p_ll - p_lu) + right * (p_ul - p_uu)
        c = area[i] / (2.0 * w[i] * w[i])
        gw[i] = (
            0.5 * hb * (col_l + col_u)
            - c * wb * (row_l + row_u)
            - 0.5 * bot * (p_ll + p_ul)
            - 0.5 * top * (p_lu + p_uu)
            + c * left * (p_ll + p_lu)
            + c * right * (p_ul + p_uu)
        )
    return g, gx, gy, gw, reads


def _adjacency(n, src, dst):
    succ = [[] for _ in range(n)]
    indeg = [0] * n
    for a, b in zip(src.tolist(), dst.tolist()):
        succ[a].append(b)
        indeg[b] += 1
    return succ, indeg


def longest_path(n, src, dst, size):
    """Positions pos[b] = max over edges a->b of pos[a] + size[a] (0 for sources).

    Raises ValueError when the graph has a cycle.
    """
    succ, indeg = _adjacency(n, src, dst)
    pos = [0.0] * n
    size = size.tolist()
    queue = deque(i for i in range(n) if indeg[i] == 0)
    seen = 0
    while queue:
        a = queue.popleft()
        seen += 1
        end = pos[a] + size[a]
        for b in succ[a]:
            if end > pos[b]:
                pos[b] = end
            indeg[b] -= 1
            if indeg[b] == 0:
                queue.append(b)
    if seen != n:
        raise ValueError("constraint graph has a cycle")
    return np.asarray(pos, dtype=float)


def reaches(n, src, dst, a, b):
    """True if there is a directed path a ~> b."""
    if a == b:
        return True
    succ, _ = _adjacency(n, src, dst)
    seen = [False] * n
    seen[a] = True
    stack = [a]
    while stack:
        u = stack.pop()
        for v in succ[u]:
            if v == b:
                return True
            if not seen[v]:
                seen[v] = True
                stack.append(v)
    return False
