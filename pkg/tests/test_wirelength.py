import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from poissonfp.model import Floorplan, ModuleSpec, Netlist, Outline, Terminal
from poissonfp.wirelength import (
    WirelengthParams, hpwl, lse_gradient, lse_value_and_gradient, lse_wirelength, pin_positions,
)

from conftest import random_floorplan


def points_floorplan(nets_xy):
    """Each pin is its own tiny module centered at the given point."""
    mods, pins, x, y = [], [], [], []
    for pts in nets_xy:
        net = []
        for px, py in pts:
            net.append((len(mods), 0.0, 0.0))
            mods.append(ModuleSpec.soft_block(f"m{len(mods)}", 1e-4))
            x.append(px)
            y.append(py)
        pins.append(net)
    return Floorplan(Outline(100, 100), tuple(mods), Netlist.from_pins(pins), x=x, y=y)


def brute_hpwl(fp):
    px, py = pin_positions(fp)
    total = 0.0
    ptr = fp.netlist.net_ptr
    for e in range(fp.netlist.num_nets):
        s = slice(ptr[e], ptr[e + 1])
        if ptr[e + 1] - ptr[e] >= 2:
            total += px[s].max() - px[s].min() + py[s].max() - py[s].min()
    return total


def brute_lse(fp, gamma):
    px, py = pin_positions(fp)
    total = 0.0
    ptr = fp.netlist.net_ptr
    for e in range(fp.netlist.num_nets):
        for c in (px[ptr[e]:ptr[e + 1]], py[ptr[e]:ptr[e + 1]]):
            if len(c) == 0:
                continue
            total += gamma * math.log(math.fsum(math.exp(v / gamma) for v in c))
            total += gamma * math.log(math.fsum(math.exp(-v / gamma) for v in c))
    return total


class TestHpwl:
    def test_examples(self):
        assert hpwl(points_floorplan([[(0, 0), (2, 3)]])) == pytest.approx(5)
        assert hpwl(points_floorplan([[(4, 4)]])) == 0
        assert hpwl(points_floorplan([[(0, 0), (1, 1)], [(0, 0), (3, 0)]])) == pytest.approx(5)

    def test_empty(self):
        fp = Floorplan(Outline(1, 1), (ModuleSpec.soft_block("a", 1),))
        assert hpwl(fp) == 0

    @given(st.integers(0, 10_000))
    def test_matches_bruteforce(self, seed):
        fp = random_floorplan(10, seed)
        assert hpwl(fp) == pytest.approx(brute_hpwl(fp), rel=1e-12)

    def test_pin_offsets_scale_with_shape(self):
        mods = (ModuleSpec.soft_block("a", 200.0),)
        nl = Netlist.from_pins([[(0, 0.05, -0.1), ("T", 0)]])
        fp = Floorplan(Outline(100, 100), mods, nl, (Terminal("p", 0, 0),), x=[10.0], y=[30.0], w=[10.0])
        px, py = pin_positions(fp)
        assert (px[0], py[0]) == pytest.approx((10.5, 28.0))


class TestLse:
    def test_single_pin_zero(self):
        for g in (0.01, 1.0, 50.0):
            assert lse_wirelength(points_floorplan([[(3, 7)]]), WirelengthParams(g)) == pytest.approx(0, abs=1e-12)

    def test_small_gamma_limit(self):
        fp = points_floorplan([[(0, 5), (10, 5)]])
        y_term = 2 * 0.01 * math.log(2)  # two coincident y values
        assert lse_wirelength(fp, WirelengthParams(0.01)) - y_term == pytest.approx(10, abs=1e-6)

    def test_rejects_bad_gamma(self):
        with pytest.raises(ValueError):
            WirelengthParams(0.0)

    @given(st.integers(0, 10_000), st.floats(0.05, 5))
    def test_matches_bruteforce(self, seed, gamma):
        fp = random_floorplan(8, seed)
        assert lse_wirelength(fp, WirelengthParams(gamma)) == pytest.approx(brute_lse(fp, gamma), rel=1e-10)

    @given(st.integers(0, 10_000), st.floats(0.01, 5))
    def test_bounds_hpwl(self, seed, gamma):
        fp = random_floorplan(10, seed)
        lse = lse_wirelength(fp, WirelengthParams(gamma))
        h = hpwl(fp)
        slack = sum(4 * gamma * math.log(d) for d in fp.netlist.degrees() if d >= 1)
        assert h - 1e-9 <= lse <= h + slack + 1e-9

    def test_huge_coordinates_stable(self):
        fp = points_floorplan([[(1e6, 0), (1e6 + 3, 0)]])
        y_term = 2 * 0.001 * math.log(2)
        assert lse_wirelength(fp, WirelengthParams(0.001)) - y_term == pytest.approx(3, rel=1e-9)


def fd_gradient(fp, params, h):
    n = fp.n
    out = np.zeros((3, n))
    for k, name in enumerate("xyw"):
        for i in range(n):
            if name == "w" and fp.modules[i].hard:
                continue
            up, dn = [getattr(fp, a).copy() for a in "xyw"], [getattr(fp, a).copy() for a in "xyw"]
            up[k][i] += h
            dn[k][i] -= h
            fu = lse_wirelength(fp.with_state(*up), params)
            fd = lse_wirelength(fp.with_state(*dn), params)
            out[k, i] = (fu - fd) / (2 * h)
    return out


class TestLseGradient:
    @given(st.integers(0, 10_000))
    def test_matches_finite_differences(self, seed):
        fp = random_floorplan(6, seed)
        params = WirelengthParams(1.5)
        g = np.array(lse_gradient(fp, params))
        fd = fd_gradient(fp, params, 1e-5 * 20)
        scale = np.abs(fd).max()
        assert np.abs(g - fd).max() <= 1e-5 * scale + 1e-12

    def test_value_consistent(self):
        fp = random_floorplan(6, 3)
        p = WirelengthParams(0.7)
        assert lse_value_and_gradient(fp, p)[0] == pytest.approx(lse_wirelength(fp, p))

    def test_coincident_pins_zero(self):
        fp = points_floorplan([[(5, 5), (5, 5), (5, 5)]])
        gx, gy, gw = lse_gradient(fp, WirelengthParams(1.0))
        assert np.allclose(gx, 0) and np.allclose(gy, 0)

    def test_two_module_antisymmetry(self):
        fp = points_floorplan([[(1, 2), (7, 3)]])
        gx, gy, _ = lse_gradient(fp, WirelengthParams(0.8))
        assert gx[0] == pytest.approx(-gx[1]) and gy[0] == pytest.approx(-gy[1])

    @given(st.integers(0, 10_000), st.floats(-30, 30), st.floats(-30, 30))
    def test_translation_covariant(self, seed, dx, dy):
        fp = random_floorplan(6, seed, terminals=0)
        p = WirelengthParams(1.0)
        g0 = np.array(lse_gradient(fp, p))
        g1 = np.array(lse_gradient(fp.with_state(fp.x + dx, fp.y + dy), p))
        assert np.allclose(g0, g1, atol=1e-9)

    def test_terminals_get_no_gradient_hard_width_zero(self):
        fp = random_floorplan(6, 11, hard_frac=1.0)
        _, _, gw = lse_gradient(fp, WirelengthParams(1.0))
        assert np.all(gw == 0)
