import re

import numpy as np
import pytest
from hypothesis import given, strategies as st

from poissonfp.bookshelf import (
    BookshelfError, SvgOptions, load_floorplan, parse_blocks, parse_nets, parse_pl, project_to_boundary,
    render_svg, write_blocks, write_nets, write_pl, write_terminal_pl,
)
from poissonfp.instances import gsrc_like
from poissonfp.model import Floorplan, ModuleSpec, Outline

from conftest import random_floorplan

BLOCKS = """UCSC blocks 1.0
# generated

NumSoftRectangularBlocks : 2
NumHardRectilinearBlocks : 1
NumTerminals : 2

sb0 softrectangular 4 0.333 3.0
sb1 softrectangular 9 0.5 2.0
hb0 hardrectilinear 4 (0, 0) (0, 2) (3, 2) (3, 0)

p1 terminal
p2 terminal
"""

NETS = """UCLA nets 1.0
NumNets : 2
NumPins : 5
NetDegree : 2 n0
sb0 B
p1 B
NetDegree : 3
sb1 B : %5 %-10
hb0 B
p2 B
"""


def blocks():
    return parse_blocks(BLOCKS)


class TestParseBlocks:
    def test_fields(self):
        b = blocks()
        assert [m.name for m in b.modules] == ["sb0", "sb1", "hb0"]
        sb0 = b.modules[0]
        assert sb0.area == 4 and (sb0.ar_lo, sb0.ar_hi) == (0.333, 3.0) and not sb0.hard
        hb0 = b.modules[2]
        assert hb0.hard and (hb0.width, hb0.height) == (3, 2)
        assert b.terminals == ["p1", "p2"]

    def test_override_aspect_bounds(self):
        b = parse_blocks(BLOCKS, ar_lo=0.25, ar_hi=4.0)
        assert (b.modules[1].ar_lo, b.modules[1].ar_hi) == (0.25, 4.0)
        assert b.modules[2].ar_lo == pytest.approx(2 / 3)

    def test_terminal_count_mismatch(self):
        text = BLOCKS.replace("p2 terminal\n", "")
        with pytest.raises(BookshelfError, match=r"^6: NumTerminals says 2 but 1"):
            parse_blocks(text)

    def test_non_rectangular_hard_block(self):
        text = BLOCKS.replace("(3, 2) (3, 0)", "(3, 2) (4, 0)")
        with pytest.raises(BookshelfError, match=r"^10: .*axis-aligned"):
            parse_blocks(text)

    def test_duplicate_name_reports_line(self):
        text = BLOCKS.replace("p2 terminal", "sb0 terminal")
        with pytest.raises(BookshelfError) as e:
            parse_blocks(text)
        assert e.value.line == 13 and "first on line 8" in str(e.value)

    def test_malformed_header(self):
        with pytest.raises(BookshelfError, match="integer"):
            parse_blocks(BLOCKS.replace("NumTerminals : 2", "NumTerminals : two"))
        with pytest.raises(BookshelfError, match="unknown header"):
            parse_blocks(BLOCKS.replace("NumTerminals", "NumPads"))

    @pytest.mark.parametrize("key", ["NumSoftRectangularBlocks", "NumHardRectilinearBlocks", "NumTerminals"])
    @given(delta=st.sampled_from([-2, -1, 1, 3]))
    def test_every_count_mutation_rejected(self, key, delta):
        m = re.search(rf"{key} : (\d+)", BLOCKS)
        mutated = BLOCKS.replace(m.group(0), f"{key} : {int(m.group(1)) + delta}")
        with pytest.raises(BookshelfError):
            parse_blocks(mutated)


class TestParseNets:
    def test_module_and_terminal_pin(self):
        b = blocks()
        nl = parse_nets(NETS, b.modules, b.terminals)
        assert nl.num_nets == 2 and nl.names == ("n0", "net1")
        assert nl.pin_module[:2].tolist() == [0, -1] and nl.pin_terminal[1] == 0

    def test_percent_offsets_scale_with_shape(self):
        b = blocks()
        nl = parse_nets(NETS, b.modules, b.terminals)
        k = 2  # sb1 pin
        assert (nl.pin_fx[k], nl.pin_fy[k]) == pytest.approx((0.05, -0.10))
        # on a 10 x 20 module: dx = 0.5, dy = -2
        assert (nl.pin_fx[k] * 10, nl.pin_fy[k] * 20) == pytest.approx((0.5, -2.0))

    def test_degree_mismatch(self):
        b = blocks()
        text = NETS.replace("NumPins : 5\n", "").replace("hb0 B\n", "")
        with pytest.raises(BookshelfError, match="degree 3 but lists 2"):
            parse_nets(text, b.modules, b.terminals)

    def test_unknown_name(self):
        b = blocks()
        with pytest.raises(BookshelfError, match=r"^6: unknown module"):
            parse_nets(NETS.replace("p1 B", "zz B"), b.modules, b.terminals)

    @pytest.mark.parametrize("old,new", [("NumNets : 2", "NumNets : 3"), ("NumPins : 5", "NumPins : 4")])
    def test_count_headers_checked(self, old, new):
        b = blocks()
        with pytest.raises(BookshelfError):
            parse_nets(NETS.replace(old, new), b.modules, b.terminals)


class TestPlacementIO:
    def test_write_line_format(self):
        fp = Floorplan(Outline(4, 4), (ModuleSpec.soft_block("a", 4.0),), x=[1.0], y=[1.0], w=[2.0])
        assert write_pl(fp).splitlines()[-1] == "a 0 0 2 2"

    def test_empty_floorplan_header_only(self):
        text = write_pl(Floorplan(Outline(1, 1), ()))
        assert parse_pl(text) == {}
        assert all(not line or line.startswith(("UCLA", "#")) for line in text.splitlines())

    @given(st.integers(0, 10_000))
    def test_round_trip(self, seed):
        fp = random_floorplan(8, seed)
        back = parse_pl(write_pl(fp))
        for i, m in enumerate(fp.modules):
            xl, yl, w, h = back[m.name]
            assert xl + w / 2 == pytest.approx(fp.x[i], rel=1e-9, abs=1e-12)
            assert yl + h / 2 == pytest.approx(fp.y[i], rel=1e-9, abs=1e-12)
            assert w == pytest.approx(fp.w[i], rel=1e-9)

    def test_duplicate_record(self):
        with pytest.raises(BookshelfError, match="duplicate"):
            parse_pl("a 0 0\na 1 1\n")

    def test_orientation_suffix_ignored(self):
        assert parse_pl("p1 3 4 : N\n") == {"p1": (3.0, 4.0)}


class TestProjection:
    def test_nearest_edge(self):
        o = Outline(10, 6)
        pts = np.array([[1, 3], [9, 3], [5, 0.5], [5, 5.8], [-3, 2], [12, 9]], dtype=float)
        got = project_to_boundary(pts, o)
        assert got.tolist() == [[0, 3], [10, 3], [5, 0], [5, 6], [0, 2], [10, 6]]

    @given(st.floats(-20, 30), st.floats(-20, 30))
    def test_lands_on_boundary(self, x, y):
        o = Outline(10, 6)
        px, py = project_to_boundary(np.array([[x, y]]), o)[0]
        assert 0 <= px <= 10 and 0 <= py <= 6
        assert px in (0, 10) or py in (0, 6)


class TestLoadFloorplan:
    def write(self, tmp_path, fp):
        (tmp_path / "c.blocks").write_text(write_blocks(fp.modules, [t.name for t in fp.terminals]))
        (tmp_path / "c.nets").write_text(write_nets(fp))
        (tmp_path / "c.pl").write_text(write_terminal_pl(fp))
        return tmp_path / "c.blocks", tmp_path / "c.nets", tmp_path / "c.pl"

    def test_round_trip_instance(self, tmp_path):
        fp = gsrc_like(30, seed=2)
        b, n, p = self.write(tmp_path, fp)
        got = load_floorplan(b, n, p, whitespace=0.10, pads="asis")
        assert [m.name for m in got.modules] == [m.name for m in fp.modules]
        assert got.outline.width == pytest.approx(fp.outline.width, rel=1e-6)
        assert np.array_equal(got.netlist.pin_module, fp.netlist.pin_module)
        assert got.terminal_xy == pytest.approx(fp.terminal_xy)

    def test_pads_projected(self, tmp_path):
        fp = gsrc_like(20, seed=3, pads_on_boundary=False)
        b, n, p = self.write(tmp_path, fp)
        got = load_floorplan(b, n, p, pads="project")
        W, H = got.outline.width, got.outline.height
        t = got.terminal_xy
        on = np.isclose(t[:, 0], 0) | np.isclose(t[:, 0], W) | np.isclose(t[:, 1], 0) | np.isclose(t[:, 1], H)
        assert on.all()

    def test_missing_terminal_placement(self, tmp_path):
        fp = gsrc_like(20, seed=3)
        b, n, p = self.write(tmp_path, fp)
        p.write_text("")
        with pytest.raises(BookshelfError, match="no placement"):
            load_floorplan(b, n, p)


class TestSvg:
    def one(self):
        return Floorplan(Outline(4, 4), (ModuleSpec.soft_block("a", 4.0),), x=[1.0], y=[1.0], w=[2.0])

    def test_single_module_two_rects(self):
        svg = render_svg(self.one())
        assert svg.count("<rect") == 2 and "<text" in svg

    def test_no_labels(self):
        assert "<text" not in render_svg(self.one(), SvgOptions(labels=False))

    def test_overlaps_drawn_as_is(self):
        fp = Floorplan(Outline(4, 4), (ModuleSpec.soft_block("a", 4.0), ModuleSpec.soft_block("b", 4.0)),
                       x=[1.0, 1.5], y=[1.0, 1.0], w=[2.0, 2.0])
        assert render_svg(fp).count("<rect") == 3

    def test_n100_size(self):
        fp = gsrc_like("n100", seed=0)
        assert len(render_svg(fp).encode()) < 1_000_000
