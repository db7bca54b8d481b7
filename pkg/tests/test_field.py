import numpy as np
import pytest
from hypothesis import given, strategies as st
from shapely.geometry import box

from poissonfp.field import (
    build_field, cosine_coefficients, cosine_synthesis, default_grid_size, dump_csv, rasterize_density,
    solve_potential, subtract_mean, summed_area,
)
from poissonfp.model import Floorplan, ModuleSpec, Outline

from conftest import random_floorplan


def single(W, H, xl, yl, w, h):
    return Floorplan(Outline(W, H), (ModuleSpec.hard_block("m", w, h),), x=[xl + w / 2], y=[yl + h / 2])


def shapely_density(fp, K):
    W, H = fp.outline.width, fp.outline.height
    wb, hb = W / K, H / K
    r = fp.rects()
    mods = [box(r.xl[i], r.yl[i], r.xh[i], r.yh[i]) for i in range(fp.n)]
    out = np.zeros((K, K))
    for p in range(K):
        for q in range(K):
            b = box(p * wb, q * hb, (p + 1) * wb, (q + 1) * hb)
            out[p, q] = sum(m.intersection(b).area for m in mods) / (wb * hb)
    return out


def laplacian_residual(psi, rho_zm, W, H):
    K = psi.shape[0]
    wb, hb = W / K, H / K
    lap = ((psi[2:, 1:-1] - 2 * psi[1:-1, 1:-1] + psi[:-2, 1:-1]) / wb ** 2
           + (psi[1:-1, 2:] - 2 * psi[1:-1, 1:-1] + psi[1:-1, :-2]) / hb ** 2)
    return np.abs(lap + rho_zm[1:-1, 1:-1]).max()


def smooth_density(K, W, H):
    xc = (np.arange(K) + 0.5) * W / K
    yc = (np.arange(K) + 0.5) * H / K
    X, Y = np.meshgrid(xc, yc, indexing="ij")
    return np.cos(np.pi * X / W) * np.cos(2 * np.pi * Y / H) + 0.5 * np.cos(3 * np.pi * X / W)


class TestRasterize:
    def test_exact_bin(self):
        rho = rasterize_density(single(4, 4, 0, 0, 1, 1), 4)
        assert rho[0, 0] == 1.0 and rho.sum() == 1.0

    def test_half_bin(self):
        rho = rasterize_density(single(4, 4, 0, 0, 0.5, 1), 4)
        assert rho[0, 0] == 0.5 and rho.sum() == 0.5

    def test_rejects_small_grid_and_outside(self):
        with pytest.raises(ValueError):
            rasterize_density(single(4, 4, 0, 0, 1, 1), 1)
        with pytest.raises(ValueError, match="outside"):
            rasterize_density(single(4, 4, 5, 0, 1, 1), 8)

    @given(st.integers(0, 10_000))
    def test_area_conservation(self, seed):
        fp = random_floorplan(12, seed)
        K = 32
        rho = rasterize_density(fp, K)
        cell = fp.outline.width * fp.outline.height / K ** 2
        assert rho.sum() * cell == pytest.approx(fp.areas.sum(), rel=1e-10)

    @pytest.mark.parametrize("seed", range(3))
    def test_matches_polygon_clipping(self, seed):
        fp = random_floorplan(6, seed)
        K = 8
        assert np.allclose(rasterize_density(fp, K), shapely_density(fp, K), atol=1e-12)

    def test_not_clamped(self):
        fp = Floorplan(Outline(4, 4), (ModuleSpec.hard_block("a", 1, 1), ModuleSpec.hard_block("b", 1, 1)),
                       x=[0.5, 0.5], y=[0.5, 0.5])
        assert rasterize_density(fp, 4)[0, 0] == 2.0


class TestSubtractMean:
    def test_examples(self):
        assert np.all(subtract_mean(np.full((3, 3), 7.0)) == 0)
        assert subtract_mean(np.array([0.0, 2.0])).tolist() == [-1.0, 1.0]

    @given(st.integers(0, 1000))
    def test_idempotent_zero_mean(self, seed):
        g = np.random.default_rng(seed).random((6, 6))
        once = subtract_mean(g)
        assert abs(once.mean()) < 1e-12
        assert np.allclose(subtract_mean(once), once, atol=1e-15)


class TestTransforms:
    @pytest.mark.parametrize("K", [4, 8, 16])
    def test_against_direct_summation(self, K):
        rng = np.random.default_rng(K)
        v = rng.standard_normal((K, K))
        i = np.arange(K) + 0.5
        C = np.cos(np.pi * np.outer(np.arange(K), i) / K)  # C[u, i]
        c = cosine_coefficients(v)
        # synthesis by the explicit double sum
        recon = np.einsum("up,ui,pj->ij", c, C, C)
        assert np.allclose(recon, v, atol=1e-12)
        assert np.allclose(cosine_synthesis(c), recon, atol=1e-12)

    def test_zero_density_zero_potential(self):
        a, psi = solve_potential(np.zeros((8, 8)), Outline(3, 5))
        assert np.all(a == 0) and np.all(psi == 0)

    @pytest.mark.parametrize("W,H", [(1.0, 1.0), (10.0, 4.0)])
    def test_eigenfunction(self, W, H):
        K = 256
        xc = (np.arange(K) + 0.5) * W / K
        rho = np.repeat(np.cos(np.pi * xc / W)[:, None], K, axis=1)
        _, psi = solve_potential(rho, Outline(W, H))
        expect = rho * W ** 2 / np.pi ** 2
        assert np.abs(psi - expect).max() <= 1e-6 * np.abs(expect).max()

    def test_compatibility_zero_mean(self):
        fp = random_floorplan(10, 4)
        g = build_field(fp, 32)
        assert g.a[0, 0] == 0.0
        assert abs(g.psi.mean()) <= 1e-9 * np.abs(g.psi).max()
        assert abs(g.rho_zm.sum()) <= 1e-9 * np.abs(g.rho).sum()

    def test_residual_second_order(self):
        W, H = 3.0, 2.0
        res = []
        for K in (64, 128, 256):
            rho = subtract_mean(smooth_density(K, W, H))
            _, psi = solve_potential(rho, Outline(W, H))
            res.append(laplacian_residual(psi, rho, W, H))
        # the 5-point stencil is second order: residual * K^2 stays bounded
        scaled = [r * K ** 2 for r, K in zip(res, (64, 128, 256))]
        assert max(scaled) <= 1.1 * min(scaled)
        assert res[1] / res[0] == pytest.approx(0.25, abs=0.05)

    def test_neumann_boundary_slope(self):
        W, H = 2.0, 2.0
        slopes = []
        for K in (32, 64, 128):
            rho = subtract_mean(smooth_density(K, W, H))
            _, psi = solve_potential(rho, Outline(W, H))
            wb = W / K
            boundary = np.abs(psi[1, :] - psi[0, :]).max() / wb
            interior = np.abs(np.diff(psi, axis=0)).max() / wb
            assert boundary <= 10 * interior / K
            slopes.append(boundary)
        assert slopes[2] < slopes[0]

    @given(st.integers(0, 10_000))
    def test_energy_nonnegative(self, seed):
        fp = random_floorplan(8, seed)
        g = build_field(fp, 16)
        assert float((g.rho_zm * g.psi).sum()) >= -1e-12

    @given(st.integers(0, 1000), st.floats(-5, 5))
    def test_constant_shift_invariant(self, seed, c):
        rho = np.random.default_rng(seed).random((16, 16))
        _, p0 = solve_potential(subtract_mean(rho), Outline(2, 3))
        _, p1 = solve_potential(subtract_mean(rho + c), Outline(2, 3))
        assert np.allclose(p0, p1, atol=1e-9)

    def test_summed_area(self):
        psi = np.arange(12.0).reshape(3, 4)
        sat = summed_area(psi)
        assert sat.shape == (4, 5) and sat[3, 4] == psi.sum() and sat[2, 3] == psi[:2, :3].sum()


class TestHelpers:
    @pytest.mark.parametrize("n,K", [(1, 64), (100, 64), (5000, 128), (10 ** 6, 512)])
    def test_default_grid_size(self, n, K):
        assert default_grid_size(n) == K

    def test_dump_csv(self, tmp_path):
        g = np.arange(6.0).reshape(2, 3)
        dump_csv(g, tmp_path / "g.csv")
        back = np.loadtxt(tmp_path / "g.csv", delimiter=",")
        assert np.array_equal(back.T, g)
