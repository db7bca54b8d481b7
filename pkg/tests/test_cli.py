import json

import numpy as np
import pytest

from poissonfp.bookshelf import load_floorplan, parse_pl, write_blocks, write_nets, write_terminal_pl
from poissonfp.cli import (
    EXIT_ILLEGAL,
    EXIT_INPUT,
    EXIT_OK,
    ConfigError,
    InfeasibleError,
    PhaseTimes,
    RunConfig,
    build_parser,
    check_feasible,
    config_from_args,
    main,
    read_config_file,
    report_phase_times,
    solve,
)
from poissonfp.instances import gsrc_like
from poissonfp.model import Floorplan, ModuleSpec, Outline, inside_outline, total_overlap


@pytest.fixture
def bench(tmp_path):
    fp = gsrc_like(20, seed=4)
    (tmp_path / "small.blocks").write_text(write_blocks(fp.modules, [t.name for t in fp.terminals]))
    (tmp_path / "small.nets").write_text(write_nets(fp))
    (tmp_path / "small.pl").write_text(write_terminal_pl(fp))
    return tmp_path


def args_for(d, *extra):
    return ["--blocks", str(d / "small.blocks"), "--nets", str(d / "small.nets"), "--pl", str(d / "small.pl"),
            "--out", str(d / "out"), *extra]


# -- configuration -----------------------------------------------------------

@pytest.mark.parametrize("bad", [
    dict(whitespace=-0.1), dict(aspect=0), dict(grad="slow"), dict(pads="moved"), dict(kmax=0),
    dict(omin=0), dict(grid=1), dict(rounds=0), dict(ar_lo=2.0), dict(outline_width=5.0),
    dict(outline_width=-1.0, outline_height=2.0),
])
def test_config_rejects_bad_values(bad):
    with pytest.raises(ConfigError):
        RunConfig(**bad)


def test_config_file(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("# run settings\nwhitespace = 0.15\nkmax = 300  # fewer\ngrad = exact\n"
                 "dump-grids = yes\ngrid = none\n")
    values = read_config_file(p)
    assert values == {"whitespace": 0.15, "kmax": 300, "grad": "exact", "dump_grids": True, "grid": None}
    p.write_text("kmax = lots\n")
    with pytest.raises(ConfigError, match="kmax"):
        read_config_file(p)
    p.write_text("colour = red\n")
    with pytest.raises(ConfigError, match="unknown"):
        read_config_file(p)
    p.write_text("just words\n")
    with pytest.raises(ConfigError, match=":1:"):
        read_config_file(p)


def test_command_line_overrides_config_file(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("kmax = 300\nseed = 4\n")
    args = build_parser().parse_args(["--config", str(p), "--kmax", "50", "--outline", "30", "20", "--no-svg"])
    cfg = config_from_args(args)
    assert cfg.kmax == 50 and cfg.seed == 4
    assert (cfg.outline_width, cfg.outline_height) == (30.0, 20.0)
    assert cfg.svg is False
    assert cfg.solver().k_max == 50 and cfg.solver("exact").grad_mode == "exact"


# -- feasibility and timing --------------------------------------------------

def test_infeasible_area():
    fp = Floorplan(Outline(3, 3), (ModuleSpec.soft_block("a", 5), ModuleSpec.soft_block("b", 5)))
    with pytest.raises(InfeasibleError, match="exceeds"):
        check_feasible(fp)


def test_infeasible_hard_module():
    fp = Floorplan(Outline(10, 3), (ModuleSpec.hard_block("a", 1, 4),))
    with pytest.raises(InfeasibleError, match="'a'"):
        check_feasible(fp)


def test_infeasible_soft_shape():
    # height <= 1 forces width >= 9, wider than the flattest allowed shape (sqrt(27))
    fp = Floorplan(Outline(10, 1), (ModuleSpec.soft_block("a", 9),))
    with pytest.raises(InfeasibleError, match="any allowed shape"):
        check_feasible(fp)
    check_feasible(Floorplan(Outline(10, 10), (ModuleSpec.soft_block("a", 9),)))


def test_phase_time_percentages():
    assert report_phase_times(PhaseTimes(1, 8, 1)) == pytest.approx((10, 80, 10))
    assert report_phase_times(PhaseTimes(0, 0, 0)) == (0.0, 0.0, 0.0)
    assert sum(report_phase_times(PhaseTimes(0.3, 2.2, 0.01))) == pytest.approx(100)


# -- end to end --------------------------------------------------------------

def test_solve_small_instance():
    fp = gsrc_like(20, seed=4)
    out = solve(fp, RunConfig())
    assert out.legal
    assert total_overlap(out.floorplan) == 0.0
    assert inside_outline(out.floorplan.rects(), fp.outline, 1e-9 * fp.outline.width)
    m = out.metrics()
    assert m["modules"] == 20 and m["legal"] is True
    assert sum(m["time_pct"].values()) == pytest.approx(100)


def test_cli_end_to_end(bench, capsys):
    rc = main(args_for(bench, "--dump-grids"))
    assert rc == EXIT_OK
    assert "legal=True" in capsys.readouterr().out
    out = bench / "out"
    for suffix in (".pl", ".metrics.json", ".trace.csv", ".svg", ".density.csv", ".potential.csv"):
        assert (out / f"small{suffix}").exists()
    metrics = json.loads((out / "small.metrics.json").read_text())
    assert metrics["legal"] is True
    assert metrics["iterations"] == len((out / "small.trace.csv").read_text().splitlines()) - 1

    # the written placement is legal when read back
    fp = load_floorplan(bench / "small.blocks", bench / "small.nets", bench / "small.pl")
    coords = parse_pl((out / "small.pl").read_text())
    names = [m.name for m in fp.modules]
    xl = np.array([coords[n][0] for n in names])
    yl = np.array([coords[n][1] for n in names])
    w = np.array([coords[n][2] for n in names])
    h = np.array([coords[n][3] for n in names])
    placed = fp.with_state(xl + w / 2, yl + h / 2, w)
    assert total_overlap(placed) <= 1e-9 * fp.outline.area
    assert inside_outline(placed.rects(), fp.outline, 1e-6)


def test_cli_is_deterministic(bench):
    assert main(args_for(bench, "--no-svg")) == EXIT_OK
    first = (bench / "out" / "small.pl").read_bytes()
    assert main(args_for(bench, "--no-svg")) == EXIT_OK
    assert (bench / "out" / "small.pl").read_bytes() == first


def test_cli_input_errors(bench, tmp_path, capsys):
    assert main(["--nets", "x.nets"]) == EXIT_INPUT
    assert main(["--blocks", str(tmp_path / "missing.blocks")]) == EXIT_INPUT
    bad = tmp_path / "bad.blocks"
    bad.write_text("UCSC blocks 1.0\nNumSoftRectangularBlocks : 1\nNumHardRectilinearBlocks : 0\n"
                   "NumTerminals : 0\na softrectangular nope 0.5 2\n")
    assert main(["--blocks", str(bad)]) == EXIT_INPUT
    assert main(args_for(bench, "--outline", "1", "1")) == EXIT_INPUT
    assert main(args_for(bench, "--kmax", "0")) == EXIT_INPUT
    err = capsys.readouterr().err
    assert err.count("poissonfp: error:") == 5


def test_cli_reports_illegal_result(bench):
    rc = main(args_for(bench, "--whitespace", "0", "--kmax", "5", "--rounds", "1", "--no-escalate", "--no-svg"))
    assert rc == EXIT_ILLEGAL
    metrics = json.loads((bench / "out" / "small.metrics.json").read_text())
    assert metrics["legal"] is False
