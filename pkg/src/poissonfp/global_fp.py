"""Global floorplanning: projected Nesterov on positions, normalized gradient
steps on soft widths, and a wirelength-driven penalty schedule."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .field import FieldGrid, build_field, default_grid_size, rasterize_density
from .model import Floorplan
from .potential import energy_exact, energy_fast, exact_terms, fast_terms
from .wirelength import WirelengthParams, hpwl, lse_value_and_gradient, lse_wirelength

log = logging.getLogger(__name__)

# once the layout stops moving lambda grows 10% per iteration; keep it finite
LAMBDA_CEILING = 1e200


@dataclass
class SolverConfig:
    k_max: int = 1200
    o_min: float = 1.0  # overlap rate in percent
    mu0: float = 1.1
    mu_lo: float = 0.75
    mu_hi: float = 1.1
    delta_hpwl_ref: float | None = None  # default: hpwl_ref_frac * initial HPWL
    hpwl_ref_frac: float = 5e-3
    # floor for the reference: this fraction of the HPWL of a tight cluster
    # (every net spanning one mean module side per extra pin)
    hpwl_floor_frac: float = 0.02
    lambda0: float | None = None  # default: balance L1 gradient norms
    width_step: float = 1.0
    K: int | None = None
    seed: int = 0
    grad_mode: str = "fast"
    gamma_frac: float = 0.01
    gamma_decay: float = 0.98
    gamma_min_frac: float = 0.001
    jitter_frac: float = 0.01
    coincide_frac: float = 1e-3  # centers closer than this times the smallest module side get nudged apart
    max_halvings: int = 30
    kick_window: int = 50  # iterations without 1% relative overlap progress before a kick
    kick_frac: float = 0.5

    def __post_init__(self):
        if self.k_max < 1:
            raise ValueError("k_max must be >= 1")
        if not self.o_min > 0:
            raise ValueError("o_min must be positive")
        if not self.mu_lo <= self.mu_hi:
            raise ValueError("mu clamp bounds out of order")
        if self.grad_mode not in ("fast", "exact"):
            raise ValueError("grad_mode must be 'fast' or 'exact'")


# --------------------------------------------------------------------------
# projection


def project(fp: Floorplan, x=None, y=None, w=None):
    """Clamp soft widths into the aspect window, then centers into the outline.

    Returns new ``(x, y, w)`` arrays.
    """
    x = fp.x if x is None else x
    y = fp.y if y is None else y
    w = np.array(fp.w if w is None else w, dtype=float)
    areas = fp.areas
    hard = fp.hard_mask
    if np.any(hard):
        w[hard] = [m.width for m in fp.modules if m.hard]
    soft = ~hard
    if np.any(soft):
        lo = np.array([m.ar_lo for m in fp.modules])[soft]
        hi = np.array([m.ar_hi for m in fp.modules])[soft]
        a = areas[soft]
        ws = w[soft]
        ratio = a / ws ** 2
        ws = np.where(ratio < lo, np.sqrt(a / lo), ws)
        ws = np.where(ratio > hi, np.sqrt(a / hi), ws)
        w[soft] = ws
    h = areas / w
    W, H = fp.outline.width, fp.outline.height
    too_big = (w > W) | (h > H)
    if np.any(too_big):
        i = int(np.flatnonzero(too_big)[0])
        raise ValueError(f"module {fp.modules[i].name!r} ({w[i]:g} x {h[i]:g}) does not fit the outline")
    x = np.clip(x, w / 2, W - w / 2)
    y = np.clip(y, h / 2, H - h / 2)
    return x, y, w


# --------------------------------------------------------------------------
# initial placement


def initial_floorplan(fp: Floorplan, margin: float = 0.05, tol: float = 1e-6) -> Floorplan:
    """Quadratic star-model placement solved by conjugate gradients.

    Each net of degree >= 2 gets a star node tied to its pins with weight
    1/(degree-1). Terminals are fixed. A weak anchor to the outline center
    keeps the system definite when there are no terminals. The result is
    shrunk about the outline center if it leaves the margin box; soft
    widths start at sqrt(area).
    """
    n = fp.n
    W, H = fp.outline.width, fp.outline.height
    w0 = np.array([m.width if m.hard else math.sqrt(m.area) for m in fp.modules], dtype=float)
    base = fp.with_state(np.full(n, W / 2), np.full(n, H / 2), w0)
    if n == 0:
        return base
    nl = fp.netlist
    deg = nl.degrees()
    nets = np.flatnonzero(deg >= 2)
    if len(nets) == 0:
        x, y, w = project(base)
        return base.with_state(x, y, w)

    m = len(nets)
    N = n + m
    rows, cols, vals = [], [], []
    bx = np.zeros(N)
    by = np.zeros(N)
    diag = np.zeros(N)
    txy = fp.terminal_xy
    h0 = base.h
    for s, e in enumerate(nets):
        star = n + s
        wt = 1.0 / (deg[e] - 1)
        for k in range(nl.net_ptr[e], nl.net_ptr[e + 1]):
            mod = nl.pin_module[k]
            diag[star] += wt
            if mod < 0:
                tx, ty = txy[nl.pin_terminal[k]]
                bx[star] += wt * tx
                by[star] += wt * ty
                continue
            # pin = center + offset; offset moves to the right-hand side
            ox = nl.pin_fx[k] * w0[mod]
            oy = nl.pin_fy[k] * h0[mod]
            diag[mod] += wt
            rows += [mod, star]
            cols += [star, mod]
            vals += [-wt, -wt]
            bx[mod] -= wt * ox
            by[mod] -= wt * oy
            bx[star] += wt * ox
            by[star] += wt * oy
    anchor = 1e-6 * max(diag[:n].max(), 1.0)
    diag[:n] += anchor
    bx[:n] += anchor * W / 2
    by[:n] += anchor * H / 2
    # keep isolated star nodes (all-terminal nets) definite
    diag[n:] = np.maximum(diag[n:], 1e-12)
    A = sp.csr_matrix((vals, (rows, cols)), shape=(N, N)) + sp.diags(diag)
    x, _ = spla.cg(A, bx, x0=np.full(N, W / 2), rtol=tol, atol=0.0, maxiter=10 * N)
    y, _ = spla.cg(A, by, x0=np.full(N, H / 2), rtol=tol, atol=0.0, maxiter=10 * N)
    x, y = x[:n], y[:n]
    x = _fit_interval(x, W, margin)
    y = _fit_interval(y, H, margin)
    x, y, w = project(base, x, y, w0)
    return base.with_state(x, y, w)


def _fit_interval(c: np.ndarray, length: float, margin: float) -> np.ndarray:
    lo, hi = margin * length, (1 - margin) * length
    cmin, cmax = c.min(), c.max()
    if cmin >= lo and cmax <= hi:
        return c
    mid = length / 2
    span = max(cmax - mid, mid - cmin)
    if span <= 0:
        return np.full_like(c, mid)
    return mid + (c - mid) * min(1.0, (hi - mid) / span)


# --------------------------------------------------------------------------
# objective


@dataclass
class Evaluation:
    value: float
    wirelength: float
    energy: float
    gx: np.ndarray
    gy: np.ndarray
    gw: np.ndarray
    grid: FieldGrid


def evaluate(fp: Floorplan, lam: float, K: int, params: WirelengthParams, mode: str = "fast") -> Evaluation:
    """Objective LSE + lam * sum of module energies, with its gradient."""
    grid = build_field(fp, K)
    wl, wgx, wgy, wgw = lse_value_and_gradient(fp, params)
    if mode == "exact":
        g, pgx, pgy, pgw = exact_terms(fp, grid.a)
    else:
        g, pgx, pgy, pgw, _ = fast_terms(fp, grid)
    e = float(g.sum())
    gw = wgw + lam * pgw
    gw[fp.hard_mask] = 0.0
    return Evaluation(wl + lam * e, wl, e, wgx + lam * pgx, wgy + lam * pgy, gw, grid)


def objective(fp: Floorplan, lam: float, grid: FieldGrid, params: WirelengthParams, mode: str = "fast") -> float:
    e = energy_exact(fp, grid.a) if mode == "exact" else energy_fast(fp, grid)
    return lse_wirelength(fp, params) + lam * float(e.sum())


# --------------------------------------------------------------------------
# update rules


@dataclass
class NesterovState:
    u: np.ndarray
    v: np.ndarray
    a: float = 1.0
    step: float | None = None
    stalled: bool = False


def next_a(a: float) -> float:
    return (1.0 + math.sqrt(4.0 * a * a + 1.0)) / 2.0


def nesterov_step(
    state: NesterovState,
    f: Callable[[np.ndarray], float],
    f_v: float,
    grad: np.ndarray,
    precond: np.ndarray | None = None,
    project: Callable[[np.ndarray], np.ndarray] | None = None,
    max_halvings: int = 30,
) -> NesterovState:
    """One accelerated step from the reference point ``state.v``.

    The step length is found by backtracking from twice the last accepted
    step until ``f_v - f(t) >= 0.5 <g, v - t>`` where ``t`` is the projected
    trial point ``P(v - a d)`` and ``d = g / precond``. Without projection
    this is the usual ``0.5 a <g, d>`` condition; with it, components clipped
    at the outline are not credited with a decrease they cannot deliver.
    """
    d = grad if precond is None else grad / precond
    a = 1.0 if state.step is None else 2.0 * state.step
    u_new = None
    for _ in range(max_halvings + 1):
        trial = state.v - a * d
        if project is not None:
            trial = project(trial)
        moved = state.v - trial
        if not np.any(moved):
            break
        if f_v - f(trial) >= 0.5 * float(np.dot(grad, moved)):
            u_new = trial
            break
        a *= 0.5
    stalled = u_new is None
    if stalled:
        u_new = state.v.copy()
        a = state.step if state.step is not None else 1.0
    a_next = next_a(state.a)
    v_new = u_new + (state.a - 1.0) * (u_new - state.u) / a_next
    return NesterovState(u_new, v_new, a_next, a, stalled)


def width_step(w: np.ndarray, grad_w: np.ndarray, soft: np.ndarray, a: float = 1.0) -> np.ndarray:
    """Normalized gradient step on the soft widths: ``w - a * g / ||g||``."""
    g = np.where(soft, grad_w, 0.0)
    norm = float(np.linalg.norm(g))
    if norm == 0.0:
        return np.array(w, dtype=float)
    return w - (a / norm) * g


def update_lambda(lam: float, hpwl_k: float, hpwl_prev: float, ref: float,
                  mu0: float = 1.1, lo: float = 0.75, hi: float = 1.1) -> float:
    mu = mu0 ** (-(hpwl_k - hpwl_prev) / ref + 1.0)
    return min(min(max(mu, lo), hi) * lam, LAMBDA_CEILING)


def overlap_rate(rho: np.ndarray) -> float:
    """Sum over bins of the density excess above 1, in percent."""
    return float(np.maximum(rho - 1.0, 0.0).sum() * 100.0)


# --------------------------------------------------------------------------
# driver


@dataclass
class TraceRow:
    iteration: int
    hpwl: float
    overlap: float
    lam: float
    step: float
    gamma: float
    stalled: bool


@dataclass
class GlobalResult:
    floorplan: Floorplan
    trace: list[TraceRow] = field(default_factory=list)
    best_iteration: int = -1
    stalls: int = 0
    K: int = 0
    kicks: int = 0

    @property
    def overlap(self) -> float:
        return self.trace[self.best_iteration].overlap if self.trace else 0.0

    def trace_csv(self) -> str:
        lines = ["iteration,hpwl,overlap_pct,lambda,step,gamma,stalled"]
        for r in self.trace:
            lines.append(f"{r.iteration},{r.hpwl!r},{r.overlap!r},{r.lam!r},{r.step!r},{r.gamma!r},{int(r.stalled)}")
        return "\n".join(lines) + "\n"


def separate_coincident(x: np.ndarray, y: np.ndarray, w: np.ndarray, h: np.ndarray,
                        rng: np.random.Generator, eps: float, frac: float = 0.05):
    """Displacements that pull apart modules whose centers coincide.

    Concentric modules see a field that is symmetric about their common
    center, so they receive equal forces and never separate on their own.
    Every module sharing an ``eps`` cell with an earlier one gets a random
    offset of up to ``frac`` of its size. Returns ``(dx, dy)`` or None.
    """
    if len(x) < 2:
        return None
    keys = np.stack([np.floor(x / eps), np.floor(y / eps)], axis=1)
    _, first, inverse = np.unique(keys, axis=0, return_index=True, return_inverse=True)
    dup = np.flatnonzero(first[inverse.ravel()] != np.arange(len(x)))
    if len(dup) == 0:
        return None
    dx = np.zeros(len(x))
    dy = np.zeros(len(x))
    dx[dup] = rng.uniform(-1, 1, len(dup)) * frac * w[dup]
    dy[dup] = rng.uniform(-1, 1, len(dup)) * frac * h[dup]
    return dx, dy


def overlapping_modules(x: np.ndarray, y: np.ndarray, w: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Boolean mask of modules whose rectangle overlaps some other one."""
    xl, xh = x - w / 2, x + w / 2
    yl, yh = y - h / 2, y + h / 2
    ox = np.minimum(xh[:, None], xh[None, :]) - np.maximum(xl[:, None], xl[None, :])
    oy = np.minimum(yh[:, None], yh[None, :]) - np.maximum(yl[:, None], yl[None, :])
    hit = (ox > 0) & (oy > 0)
    np.fill_diagonal(hit, False)
    return hit.any(axis=1)


def kick(x: np.ndarray, y: np.ndarray, w: np.ndarray, h: np.ndarray,
         rng: np.random.Generator, frac: float):
    """Random displacement of overlapping modules, up to ``frac`` of their size.

    Used when the overlap stops improving: symmetric arrangements (a wide
    module crossing a tall one at a shared center, say) are stationary points
    of the penalty that gradient steps cannot leave.
    """
    m = overlapping_modules(x, y, w, h)
    dx = np.where(m, rng.uniform(-1, 1, len(x)) * frac * w, 0.0)
    dy = np.where(m, rng.uniform(-1, 1, len(x)) * frac * h, 0.0)
    return dx, dy


def preconditioner(fp: Floorplan) -> np.ndarray:
    """Per-module diagonal weight: area over mean area, floored at 1."""
    a = fp.areas
    return np.maximum(a / a.mean(), 1.0)


def run_global(fp: Floorplan, cfg: SolverConfig | None = None,
               callback: Callable[[int, Floorplan], None] | None = None) -> GlobalResult:
    """Run the global floorplanning loop from the state stored in ``fp``.

    ``fp`` should come from :func:`initial_floorplan`. The returned floorplan is
    the lowest-overlap iterate (HPWL breaks ties); it always satisfies the
    aspect and outline constraints.
    """
    cfg = cfg or SolverConfig()
    n = fp.n
    K = cfg.K or default_grid_size(n)
    if n == 0:
        return GlobalResult(fp.with_state(), [], -1, 0, K)
    W, H = fp.outline.width, fp.outline.height
    soft = ~fp.hard_mask
    rng = np.random.default_rng(cfg.seed)

    x, y, w = project(fp)
    if cfg.jitter_frac > 0:
        x = x + rng.uniform(-1, 1, n) * cfg.jitter_frac * W
        y = y + rng.uniform(-1, 1, n) * cfg.jitter_frac * H
        x, y, w = project(fp, x, y, w)
    cur = fp.with_state(x, y, w)
    min_side = float(min(w.min(), (fp.areas / w).min()))

    gamma = cfg.gamma_frac * min(W, H)
    gamma_min = cfg.gamma_min_frac * min(W, H)
    params = WirelengthParams(gamma)
    ev0 = evaluate(cur, 0.0, K, params, cfg.grad_mode)
    wl_g = np.abs(ev0.gx).sum() + np.abs(ev0.gy).sum()
    if cfg.grad_mode == "exact":
        _, pgx, pgy, _ = exact_terms(cur, ev0.grid.a)
    else:
        _, pgx, pgy, _, _ = fast_terms(cur, ev0.grid)
    pen_g = np.abs(pgx).sum() + np.abs(pgy).sum()
    if cfg.lambda0 is not None:
        lam = cfg.lambda0
    elif pen_g > 0 and wl_g > 0:
        lam = wl_g / pen_g
    else:
        lam = 1.0
    hpwl_prev = hpwl(cur)
    if cfg.delta_hpwl_ref:
        ref = cfg.delta_hpwl_ref
    else:
        side = float(np.sqrt(fp.areas).mean())
        cluster = float(np.maximum(fp.netlist.degrees() - 1, 0).sum()) * side
        ref = max(cfg.hpwl_ref_frac * hpwl_prev, cfg.hpwl_floor_frac * cluster, 1e-12 * (W + H))

    pre = np.concatenate([preconditioner(cur)] * 2)
    state = NesterovState(np.concatenate([x, y]), np.concatenate([x, y]))
    result = GlobalResult(cur, [], -1, 0, K)
    best_key = (math.inf, math.inf)
    progress_rate, progress_k = math.inf, 0

    def split(z):
        return z[:n], z[n:]

    for k in range(cfg.k_max):
        params = WirelengthParams(gamma)
        vx, vy = split(state.v)
        ref_fp = cur.with_state(vx, vy, w)
        ev = evaluate(ref_fp, lam, K, params, cfg.grad_mode)

        def f(z, lam=lam, params=params):
            zx, zy = split(z)
            return evaluate(cur.with_state(zx, zy, w), lam, K, params, cfg.grad_mode).value

        def proj(z):
            zx, zy, _ = project(cur, *split(z), w)
            return np.concatenate([zx, zy])

        state = nesterov_step(state, f, ev.value, np.concatenate([ev.gx, ev.gy]), pre, proj, cfg.max_halvings)
        if state.stalled:
            result.stalls += 1

        if np.any(soft):
            w = width_step(w, ev.gw, soft, cfg.width_step)
        ux, uy = split(state.u)
        ux, uy, w = project(cur, ux, uy, w)
        vx, vy = split(state.v)
        nudge = separate_coincident(ux, uy, w, cur.areas / w, rng, cfg.coincide_frac * min_side)
        if nudge is not None:
            ux, uy, _ = project(cur, ux + nudge[0], uy + nudge[1], w)
            vx, vy = vx + nudge[0], vy + nudge[1]
        vx, vy, _ = project(cur, vx, vy, w)
        state.u = np.concatenate([ux, uy])
        state.v = np.concatenate([vx, vy])
        cur = cur.with_state(ux, uy, w)

        h_k = hpwl(cur)
        rate = overlap_rate(rasterize_density(cur, K))
        lam = update_lambda(lam, h_k, hpwl_prev, ref, cfg.mu0, cfg.mu_lo, cfg.mu_hi)
        hpwl_prev = h_k
        result.trace.append(TraceRow(k, h_k, rate, lam, state.step or 0.0, gamma, state.stalled))
        key = (rate, h_k)
        if key < best_key:
            best_key = key
            result.best_iteration = k
            result.floorplan = cur
        if callback is not None:
            callback(k, cur)
        if rate <= cfg.o_min:
            break
        if rate < 0.99 * progress_rate:
            progress_rate, progress_k = rate, k
        elif cfg.kick_window and k - progress_k >= cfg.kick_window:
            dx, dy = kick(ux, uy, w, cur.areas / w, rng, cfg.kick_frac)
            ux, uy, _ = project(cur, ux + dx, uy + dy, w)
            cur = cur.with_state(ux, uy, w)
            z = np.concatenate([ux, uy])
            state = NesterovState(z, z.copy())
            progress_rate, progress_k = rate, k
            result.kicks += 1
        gamma = max(gamma * cfg.gamma_decay, gamma_min)
    result.K = K
    log.debug("global: %d iterations, best %d at %.3g%% overlap, %d stalls, %d kicks",
              len(result.trace), result.best_iteration, result.overlap, result.stalls, result.kicks)
    return result
