"""End-to-end driver: bookshelf input, global floorplanning, legalization, artifacts."""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bookshelf import BookshelfError, SvgOptions, load_floorplan, render_svg, write_pl
from .field import build_field, dump_csv
from .global_fp import GlobalResult, SolverConfig, initial_floorplan, run_global
from .legalize import FloorplanLegalization, legalize_floorplan
from .model import Floorplan, Outline, inside_outline, total_overlap

log = logging.getLogger("poissonfp")

EXIT_OK = 0
EXIT_ILLEGAL = 1
EXIT_INPUT = 2


class ConfigError(ValueError):
    pass


class InfeasibleError(ValueError):
    pass


@dataclass
class RunConfig:
    blocks: str | None = None
    nets: str | None = None
    pl: str | None = None
    whitespace: float = 0.10
    aspect: float = 1.0  # outline height / width
    outline_width: float | None = None  # explicit outline overrides whitespace/aspect
    outline_height: float | None = None
    grid: int | None = None  # None: smallest power of two >= sqrt(n), at least 64
    kmax: int = 1200
    omin: float = 1.0  # stop once the overlap rate (percent) reaches this
    seed: int = 0
    grad: str = "fast"
    pads: str = "project"
    rounds: int = 10  # legalization rounds
    ar_lo: float = 1.0 / 3.0
    ar_hi: float = 3.0
    escalate: bool = True  # rerun global with exact gradients if legalization fails
    out: str = "out"
    svg: bool = True
    dump_grids: bool = False

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if not self.whitespace >= 0:
            raise ConfigError("whitespace must be >= 0")
        if not self.aspect > 0:
            raise ConfigError("aspect must be > 0")
        if self.grad not in ("fast", "exact"):
            raise ConfigError("grad must be 'fast' or 'exact'")
        if self.pads not in ("project", "asis"):
            raise ConfigError("pads must be 'project' or 'asis'")
        if self.kmax < 1:
            raise ConfigError("kmax must be >= 1")
        if not self.omin > 0:
            raise ConfigError("omin must be > 0")
        if self.grid is not None and self.grid < 2:
            raise ConfigError("grid must be >= 2")
        if self.rounds < 1:
            raise ConfigError("rounds must be >= 1")
        if not 0 < self.ar_lo <= 1 <= self.ar_hi:
            raise ConfigError("aspect-ratio bounds must satisfy 0 < lo <= 1 <= hi")
        if (self.outline_width is None) != (self.outline_height is None):
            raise ConfigError("outline_width and outline_height go together")
        if self.outline_width is not None and not (self.outline_width > 0 and self.outline_height > 0):
            raise ConfigError("outline dimensions must be positive")

    def solver(self, grad: str | None = None) -> SolverConfig:
        return SolverConfig(k_max=self.kmax, o_min=self.omin, K=self.grid, seed=self.seed,
                            grad_mode=grad or self.grad)


# --------------------------------------------------------------------------
# config file


def _coerce(name: str, text: str):
    kinds = {f.name: f.type for f in dataclasses.fields(RunConfig)}
    if name not in kinds:
        raise ConfigError(f"unknown config key {name!r}")
    kind = str(kinds[name])
    text = text.strip()
    if text.lower() in ("none", ""):
        if "None" not in kind:
            raise ConfigError(f"{name} needs a value")
        return None
    if kind.startswith("bool"):
        if text.lower() in ("1", "true", "yes", "on"):
            return True
        if text.lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{name}: not a boolean: {text!r}")
    try:
        if kind.startswith("int"):
            return int(text)
        if kind.startswith("float"):
            return float(text)
    except ValueError as exc:
        raise ConfigError(f"{name}: {exc}") from None
    return text


def read_config_file(path: str | Path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for no, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{no}: expected key = value")
        key, value = line.split("=", 1)
        key = key.strip().replace("-", "_")
        values[key] = _coerce(key, value)
    return values


# --------------------------------------------------------------------------
# pipeline


@dataclass
class PhaseTimes:
    initial: float = 0.0
    global_: float = 0.0
    legalize: float = 0.0


def report_phase_times(times: PhaseTimes) -> tuple[float, float, float]:
    """Percent of total runtime spent in the initial, global and legalization phases."""
    parts = np.array([times.initial, times.global_, times.legalize], dtype=float)
    parts = np.maximum(parts, 0.0)
    total = parts.sum()
    if total <= 0:
        return (0.0, 0.0, 0.0)
    pct = parts / total * 100.0
    return (float(pct[0]), float(pct[1]), float(pct[2]))


@dataclass
class RunOutcome:
    floorplan: Floorplan  # final placement, legal iff ``legal``
    global_result: GlobalResult
    legalization: FloorplanLegalization
    times: PhaseTimes
    escalated: bool = False
    notes: list[str] = field(default_factory=list)

    @property
    def legal(self) -> bool:
        return self.legalization.success

    def metrics(self) -> dict:
        pct = report_phase_times(self.times)
        leg = self.legalization
        return {
            "modules": self.floorplan.n,
            "nets": self.floorplan.netlist.num_nets,
            "outline": [self.floorplan.outline.width, self.floorplan.outline.height],
            "grid": self.global_result.K,
            "iterations": len(self.global_result.trace),
            "overlap_rate_pct": self.global_result.overlap,
            "hpwl_global": leg.hpwl_before,
            "hpwl_final": leg.hpwl_after,
            "rate_of_change_pct": leg.rate_of_change,
            "legal": leg.success,
            "legalization_rounds": leg.result.rounds,
            "placement": leg.placement,
            "escalated_to_exact": self.escalated,
            "time_s": {"initial": self.times.initial, "global": self.times.global_,
                       "legalize": self.times.legalize},
            "time_pct": {"initial": pct[0], "global": pct[1], "legalize": pct[2]},
            "notes": self.notes,
        }


def check_feasible(fp: Floorplan) -> None:
    W, H = fp.outline.width, fp.outline.height
    total = float(fp.areas.sum())
    if total > W * H * (1 + 1e-12):
        raise InfeasibleError(f"module area {total:g} exceeds outline area {W * H:g}")
    for m in fp.modules:
        if m.hard and (m.width > W or m.height > H):
            raise InfeasibleError(f"hard module {m.name!r} ({m.width:g}x{m.height:g}) does not fit the outline")
        if not m.hard:
            # feasible widths: inside the aspect window and short enough to fit H
            lo = max(np.sqrt(m.area / m.ar_hi), m.area / H)
            hi = min(np.sqrt(m.area / m.ar_lo), W)
            if lo > hi * (1 + 1e-12):
                raise InfeasibleError(f"soft module {m.name!r} cannot fit the outline at any allowed shape")


def solve(fp: Floorplan, cfg: RunConfig) -> RunOutcome:
    """Initial placement, global floorplanning and legalization on an in-memory floorplan."""
    check_feasible(fp)
    times = PhaseTimes()
    t0 = time.perf_counter()
    start = initial_floorplan(fp)
    times.initial = time.perf_counter() - t0

    t0 = time.perf_counter()
    glob = run_global(start, cfg.solver())
    times.global_ = time.perf_counter() - t0
    t0 = time.perf_counter()
    leg = legalize_floorplan(glob.floorplan, N=cfg.rounds)
    times.legalize = time.perf_counter() - t0
    outcome = RunOutcome(leg.floorplan, glob, leg, times)

    if not leg.success and cfg.escalate and cfg.grad == "fast":
        log.info("legalization failed after fast-gradient global run; retrying with exact gradients")
        t0 = time.perf_counter()
        glob2 = run_global(start, cfg.solver("exact"))
        times.global_ += time.perf_counter() - t0
        t0 = time.perf_counter()
        leg2 = legalize_floorplan(glob2.floorplan, N=cfg.rounds)
        times.legalize += time.perf_counter() - t0
        outcome.notes.append("fast-gradient result did not legalize; global phase rerun with exact gradients")
        if leg2.success:
            outcome = RunOutcome(leg2.floorplan, glob2, leg2, times, True, outcome.notes)
    return outcome


def load(cfg: RunConfig) -> Floorplan:
    if not cfg.blocks:
        raise ConfigError("a .blocks file is required")
    fp = load_floorplan(cfg.blocks, cfg.nets, cfg.pl, cfg.whitespace, cfg.aspect, cfg.pads,
                        cfg.ar_lo, cfg.ar_hi)
    if cfg.outline_width is not None:
        fp = Floorplan(Outline(cfg.outline_width, cfg.outline_height), fp.modules, fp.netlist, fp.terminals)
    return fp


def write_artifacts(outcome: RunOutcome, cfg: RunConfig, stem: str) -> dict[str, Path]:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "pl": out / f"{stem}.pl",
        "metrics": out / f"{stem}.metrics.json",
        "trace": out / f"{stem}.trace.csv",
    }
    paths["pl"].write_text(write_pl(outcome.floorplan))
    paths["metrics"].write_text(json.dumps(outcome.metrics(), indent=2) + "\n")
    paths["trace"].write_text(outcome.global_result.trace_csv())
    if cfg.svg:
        paths["svg"] = out / f"{stem}.svg"
        paths["svg"].write_text(render_svg(outcome.floorplan, SvgOptions()))
    if cfg.dump_grids:
        grid = build_field(outcome.global_result.floorplan, outcome.global_result.K)
        paths["density"] = out / f"{stem}.density.csv"
        paths["potential"] = out / f"{stem}.potential.csv"
        dump_csv(grid.rho, paths["density"])
        dump_csv(grid.psi, paths["potential"])
    return paths


def run(cfg: RunConfig) -> int:
    """Full run from files. Returns the process exit status."""
    try:
        fp = load(cfg)
        outcome = solve(fp, cfg)
    except (BookshelfError, ConfigError, InfeasibleError, OSError) as exc:
        print(f"poissonfp: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    stem = Path(cfg.blocks).stem
    paths = write_artifacts(outcome, cfg, stem)
    m = outcome.metrics()
    r = outcome.floorplan.rects()
    legal = outcome.legal and total_overlap(r) == 0.0 and inside_outline(
        r, outcome.floorplan.outline, 1e-9 * max(outcome.floorplan.outline.width, outcome.floorplan.outline.height))
    print(f"{stem}: legal={legal} hpwl={m['hpwl_final']:.6g} "
          f"global_overlap={m['overlap_rate_pct']:.3g}% change={m['rate_of_change_pct']:+.3f}% "
          f"-> {paths['pl']}")
    return EXIT_OK if legal else EXIT_ILLEGAL


# --------------------------------------------------------------------------
# command line


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="poissonfp", description="Fixed-outline floorplanning of bookshelf benchmarks.")
    p.add_argument("--config", help="key = value file; flags given on the command line win")
    p.add_argument("--blocks")
    p.add_argument("--nets")
    p.add_argument("--pl", help="terminal placement")
    p.add_argument("--whitespace", type=float)
    p.add_argument("--aspect", type=float, help="outline height/width")
    p.add_argument("--outline", type=float, nargs=2, metavar=("W", "H"), help="explicit outline size")
    p.add_argument("--grid", type=int, help="bins per side")
    p.add_argument("--kmax", type=int)
    p.add_argument("--omin", type=float, help="target overlap rate in percent")
    p.add_argument("--seed", type=int)
    p.add_argument("--grad", choices=("exact", "fast"))
    p.add_argument("--pads", choices=("project", "asis"))
    p.add_argument("--rounds", type=int, help="legalization rounds")
    p.add_argument("--no-escalate", dest="escalate", action="store_false", default=None)
    p.add_argument("--out")
    p.add_argument("--svg", dest="svg", action="store_true", default=None)
    p.add_argument("--no-svg", dest="svg", action="store_false")
    p.add_argument("--dump-grids", action="store_true", default=None)
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def config_from_args(args: argparse.Namespace) -> RunConfig:
    values = read_config_file(args.config) if args.config else {}
    names = {f.name for f in dataclasses.fields(RunConfig)}
    for key, value in vars(args).items():
        if key in names and value is not None:
            values[key] = value
    if args.outline is not None:
        values["outline_width"], values["outline_height"] = args.outline
    return RunConfig(**values)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = config_from_args(args)
    except (ConfigError, OSError) as exc:
        print(f"poissonfp: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
