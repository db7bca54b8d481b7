# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot kernels. See ``_pykernels`` for the reference."""
import numpy as np
cimport numpy as cnp
from libc.math cimport floor, ceil

cnp.import_array()


cdef inline void _span(double lo, double hi, double size, Py_ssize_t K,
                       Py_ssize_t* a, Py_ssize_t* b) noexcept nogil:
    cdef double v = hi / size
    if lo > 0:
        a[0] = <Py_ssize_t>floor(lo / size)
    else:
        a[0] = 0
    if v > 0:
        b[0] = <Py_ssize_t>ceil(v) - 1
    else:
        b[0] = 0
    if a[0] < 0:
        a[0] = 0
    if a[0] > K - 1:
        a[0] = K - 1
    if b[0] < 0:
        b[0] = 0
    if b[0] > K - 1:
        b[0] = K - 1
    if b[0] < a[0]:
        b[0] = a[0]


def bin_spans(double[::1] xl, double[::1] yl, double[::1] xh, double[::1] yh,
              double wb, double hb, Py_ssize_t K):
    cdef Py_ssize_t n = xl.shape[0], i, a, b
    out = np.empty((n, 4), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] o = out
    for i in range(n):
        _span(xl[i], xh[i], wb, K, &a, &b)
        o[i, 0] = a
        o[i, 1] = b
        _span(yl[i], yh[i], hb, K, &a, &b)
        o[i, 2] = a
        o[i, 3] = b
    return out


def rasterize(double[::1] xl, double[::1] yl, double[::1] xh, double[::1] yh,
              Py_ssize_t K, double wb, double hb):
    cdef Py_ssize_t n = xl.shape[0], i, p, q, XL, XU, YL, YU
    cdef double ox, oy, lo, hi, inv = 1.0 / (wb * hb)
    rho = np.zeros((K, K), dtype=np.float64)
    cdef double[:, ::1] r = rho
    with nogil:
        for i in range(n):
            _span(xl[i], xh[i], wb, K, &XL, &XU)
            _span(yl[i], yh[i], hb, K, &YL, &YU)
            for p in range(XL, XU + 1):
                lo = xl[i] if xl[i] > p * wb else p * wb
                hi = xh[i] if xh[i] < (p + 1) * wb else (p + 1) * wb
                ox = hi - lo
                if ox <= 0:
                    continue
                for q in range(YL, YU + 1):
                    lo = yl[i] if yl[i] > q * hb else q * hb
                    hi = yh[i] if yh[i] < (q + 1) * hb else (q + 1) * hb
                    oy = hi - lo
                    if oy > 0:
                        r[p, q] += ox * oy * inv
    return rho


def fast_potential(double[::1] xl, double[::1] yl, double[::1] xh, double[::1] yh,
                   double[::1] w, double[::1] area, double[:, ::1] psi,
                   double[:, ::1] sat, double wb, double hb):
    cdef Py_ssize_t n = xl.shape[0], K = psi.shape[0]
    cdef Py_ssize_t i, p, q, XL, XU, YL, YU
    cdef double left, right, bot, top, col_l, col_u, row_l, row_u
    cdef double p_ll, p_lu, p_ul, p_uu, full, c
    g_a = np.empty(n)
    gx_a = np.empty(n)
    gy_a = np.empty(n)
    gw_a = np.empty(n)
    reads_a = np.empty(n, dtype=np.int64)
    cdef double[::1] g = g_a, gx = gx_a, gy = gy_a, gw = gw_a
    cdef cnp.int64_t[::1] reads = reads_a
    with nogil:
        for i in range(n):
            _span(xl[i], xh[i], wb, K, &XL, &XU)
            _span(yl[i], yh[i], hb, K, &YL, &YU)
            left = xl[i] - XL * wb
            right = (XU + 1) * wb - xh[i]
            bot = yl[i] - YL * hb
            top = (YU + 1) * hb - yh[i]
            col_l = 0.0
            col_u = 0.0
            for q in range(YL, YU + 1):
                col_l += psi[XL, q]
                col_u += psi[XU, q]
            row_l = 0.0
            row_u = 0.0
            for p in range(XL, XU + 1):
                row_l += psi[p, YL]
                row_u += psi[p, YU]
            p_ll = psi[XL, YL]
            p_lu = psi[XL, YU]
            p_ul = psi[XU, YL]
            p_uu = psi[XU, YU]
            reads[i] = 2 * (YU - YL + 1) + 2 * (XU - XL + 1) + 4
            full = sat[XU + 1, YU + 1] - sat[XL, YU + 1] - sat[XU + 1, YL] + sat[XL, YL]
            g[i] = (wb * hb * full
                    - hb * left * col_l - hb * right * col_u
                    - wb * bot * row_l - wb * top * row_u
                    + left * top * p_lu + left * bot * p_ll
                    + right * top * p_uu + right * bot * p_ul)
            gx[i] = hb * (col_u - col_l) + bot * (p_ll - p_ul) + top * (p_lu - p_uu)
            gy[i] = wb * (row_u - row_l) + left * (p_ll - p_lu) + right * (p_ul - p_uu)
            c = area[i] / (2.0 * w[i] * w[i])
            gw[i] = (0.5 * hb * (col_l + col_u)
                     - c * wb * (row_l + row_u)
                     - 0.5 * bot * (p_ll + p_ul)
                     - 0.5 * top * (p_lu + p_uu)
                     + c * left * (p_ll + p_lu)
                     + c * right * (p_ul + p_uu))
    return g_a, gx_a, gy_a, gw_a, reads_a


cdef _csr(Py_ssize_t n, cnp.int64_t[::1] src, cnp.int64_t[::1] dst):
    cdef Py_ssize_t m = src.shape[0], e
    ptr_a = np.zeros(n + 1, dtype=np.int64)
    adj_a = np.empty(m, dtype=np.int64)
    cdef cnp.int64_t[::1] ptr = ptr_a, adj = adj_a
    fill_a = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] fill = fill_a
    for e in range(m):
        ptr[src[e] + 1] += 1
    for e in range(n):
        ptr[e + 1] += ptr[e]
        fill[e] = ptr[e]
    for e in range(m):
        adj[fill[src[e]]] = dst[e]
        fill[src[e]] += 1
    return ptr_a, adj_a


def longest_path(Py_ssize_t n, cnp.int64_t[::1] src, cnp.int64_t[::1] dst, double[::1] size):
    ptr_a, adj_a = _csr(n, src, dst)
    cdef cnp.int64_t[::1] ptr = ptr_a, adj = adj_a
    indeg_a = np.zeros(n, dtype=np.int64)
    queue_a = np.empty(n, dtype=np.int64)
    pos_a = np.zeros(n, dtype=np.float64)
    cdef cnp.int64_t[::1] indeg = indeg_a, queue = queue_a
    cdef double[::1] pos = pos_a
    cdef Py_ssize_t e, head = 0, tail = 0, a, b, k
    cdef double end
    with nogil:
        for e in range(dst.shape[0]):
            indeg[dst[e]] += 1
        for a in range(n):
            if indeg[a] == 0:
                queue[tail] = a
                tail += 1
        while head < tail:
            a = queue[head]
            head += 1
            end = pos[a] + size[a]
            for k in range(ptr[a], ptr[a + 1]):
                b = adj[k]
                if end > pos[b]:
                    pos[b] = end
                indeg[b] -= 1
                if indeg[b] == 0:
                    queue[tail] = b
                    tail += 1
    if head != n:
        raise ValueError("constraint graph has a cycle")
    return pos_a


def reaches(Py_ssize_t n, cnp.int64_t[::1] src, cnp.int64_t[::1] dst, Py_ssize_t a, Py_ssize_t b):
    if a == b:
        return True
    ptr_a, adj_a = _csr(n, src, dst)
    cdef cnp.int64_t[::1] ptr = ptr_a, adj = adj_a
    seen_a = np.zeros(n, dtype=np.uint8)
    stack_a = np.empty(n, dtype=np.int64)
    cdef unsigned char[::1] seen = seen_a
    cdef cnp.int64_t[::1] stack = stack_a
    cdef Py_ssize_t top = 0, u, v, k
    seen[a] = 1
    stack[top] = a
    top += 1
    while top > 0:
        top -= 1
        u = stack[top]
        for k in range(ptr[u], ptr[u + 1]):
            v = adj[k]
            if v == b:
                return True
            if not seen[v]:
                seen[v] = 1
                stack[top] = v
                top += 1
    return False
