"""Bin density and the spectral Neumann-Poisson solution on a K x K grid.

Array convention: ``grid[p, q]`` is the bin in column ``p`` (x direction) and
row ``q`` (y direction); bin centers sit at ((p+1/2) w_b, (q+1/2) h_b).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft

from . import kernels
from .model import Floorplan, Outline


@dataclass(frozen=True)
class FieldGrid:
    outline: Outline
    K: int
    rho: np.ndarray  # raw bin density (area fraction, not clamped)
    rho_zm: np.ndarray  # mean-subtracted density
    coeff: np.ndarray  # cosine coefficients of rho_zm
    a: np.ndarray  # potential coefficients, a[0, 0] = 0
    psi: np.ndarray  # potential at bin centers
    sat: np.ndarray  # (K+1, K+1) summed-area table of psi

    @property
    def wb(self) -> float:
        return self.outline.width / self.K

    @property
    def hb(self) -> float:
        return self.outline.height / self.K


def default_grid_size(n: int) -> int:
    k = 1
    while k * k < n:
        k *= 2
    return int(min(max(k, 64), 512))


def rasterize_density(fp: Floorplan, K: int) -> np.ndarray:
    if K < 2:
        raise ValueError("grid needs K >= 2")
    r = fp.rects()
    W, H = fp.outline.width, fp.outline.height
    outside = (r.xh <= 0) | (r.xl >= W) | (r.yh <= 0) | (r.yl >= H)
    if np.any(outside):
        i = int(np.flatnonzero(outside)[0])
        raise ValueError(f"module {fp.modules[i].name!r} lies entirely outside the outline")
    return kernels.rasterize(
        np.ascontiguousarray(r.xl), np.ascontiguousarray(r.yl),
        np.ascontiguousarray(r.xh), np.ascontiguousarray(r.yh),
        K, W / K, H / K,
    )


def subtract_mean(rho: np.ndarray) -> np.ndarray:
    return rho - rho.mean()


def _weights(K: int) -> np.ndarray:
    c = np.full(K, 2.0)
    c[0] = 1.0
    return c


def cosine_coefficients(values: np.ndarray) -> np.ndarray:
    """Coefficients c[u, p] with values[i, j] = sum c[u,p] cos(u(i+1/2)pi/K) cos(p(j+1/2)pi/K).

    scipy's unnormalized DCT-II returns 2*sum_i v_i cos(pi u (2i+1)/2K) per axis,
    so each axis is rescaled by c_u / (2K) with c_0 = 1 and c_u = 2 otherwise.
    """
    K = values.shape[0]
    t = scipy.fft.dctn(values, type=2)
    wt = _weights(K) / (2.0 * K)
    return t * wt[:, None] * wt[None, :]


def cosine_synthesis(coeff: np.ndarray) -> np.ndarray:
    """Evaluate sum c[u,p] cos(u(i+1/2)pi/K) cos(p(j+1/2)pi/K) at all bin centers.

    scipy's unnormalized DCT-III computes x_0 + 2*sum_{u>=1} x_u cos(...), so
    the non-constant coefficients are halved before the transform.
    """
    K = coeff.shape[0]
    half = 1.0 / _weights(K)
    return scipy.fft.dctn(coeff * half[:, None] * half[None, :], type=3)


def spectral_inverse(coeff: np.ndarray, outline: Outline) -> np.ndarray:
    """a[u,p] = coeff[u,p] / (pi^2 (u^2/W^2 + p^2/H^2)), a[0,0] = 0."""
    K = coeff.shape[0]
    u = np.arange(K)
    lam = np.pi ** 2 * ((u[:, None] / outline.width) ** 2 + (u[None, :] / outline.height) ** 2)
    lam[0, 0] = 1.0
    a = coeff / lam
    a[0, 0] = 0.0
    return a


def solve_potential(rho_zm: np.ndarray, outline: Outline) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(a, psi)`` for a zero-mean bin density."""
    coeff = cosine_coefficients(rho_zm)
    a = spectral_inverse(coeff, outline)
    return a, cosine_synthesis(a)


def summed_area(psi: np.ndarray) -> np.ndarray:
    sat = np.zeros((psi.shape[0] + 1, psi.shape[1] + 1))
    sat[1:, 1:] = psi.cumsum(0).cumsum(1)
    return sat


def build_field(fp: Floorplan, K: int) -> FieldGrid:
    rho = rasterize_density(fp, K)
    rho_zm = subtract_mean(rho)
    coeff = cosine_coefficients(rho_zm)
    a = spectral_inverse(coeff, fp.outline)
    psi = cosine_synthesis(a)
    return FieldGrid(fp.outline, K, rho, rho_zm, coeff, a, np.ascontiguousarray(psi), summed_area(psi))


def evaluate_potential(a: np.ndarray, outline: Outline, x, y) -> np.ndarray:
    """Continuous truncated series psi(x, y) at arbitrary points (broadcast over x, y)."""
    K = a.shape[0]
    u = np.arange(K)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    cx = np.cos(np.pi * np.multiply.outer(x.ravel(), u) / outline.width)
    cy = np.cos(np.pi * np.multiply.outer(y.ravel(), u) / outline.height)
    return np.einsum("iu,up,ip->i", cx, a, cy).reshape(x.shape)


def dump_csv(grid: np.ndarray, path) -> None:
    """Write a grid with one row per y index (top row last), comma separated."""
    np.savetxt(path, grid.T, delimiter=",", fmt="%.10g")
