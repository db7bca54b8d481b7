import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from poissonfp.model import Floorplan, ModuleSpec, Netlist, Outline, Terminal

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def random_floorplan(n: int, seed: int, W: float = 20.0, H: float = 14.0, nets: int | None = None,
                     hard_frac: float = 0.3, terminals: int = 3, inside: bool = True) -> Floorplan:
    """Modules of assorted size at random positions, with random pin offsets."""
    rng = np.random.default_rng(seed)
    mods = []
    for i in range(n):
        if rng.random() < hard_frac:
            mods.append(ModuleSpec.hard_block(f"h{i}", float(rng.uniform(0.5, 3)), float(rng.uniform(0.5, 3))))
        else:
            mods.append(ModuleSpec.soft_block(f"s{i}", float(rng.uniform(0.5, 6))))
    outline = Outline(W, H)
    terms = tuple(Terminal(f"p{k}", float(rng.uniform(0, W)), float(rng.uniform(0, H))) for k in range(terminals))
    net_pins = []
    for _ in range(nets if nets is not None else 2 * n):
        d = int(rng.integers(2, 6))
        pins = [(int(m), float(rng.uniform(-0.5, 0.5)), float(rng.uniform(-0.5, 0.5)))
                for m in rng.choice(n, size=min(d, n), replace=False)]
        if terminals and rng.random() < 0.3:
            pins.append(("T", int(rng.integers(terminals))))
        net_pins.append(pins)
    fp = Floorplan(outline, tuple(mods), Netlist.from_pins(net_pins), terms)
    w = np.array([m.width if m.hard else np.sqrt(m.area) * rng.uniform(0.7, 1.4) for m in mods])
    h = fp.areas / w
    if inside:
        x = rng.uniform(w / 2, W - w / 2)
        y = rng.uniform(h / 2, H - h / 2)
    else:
        x = rng.uniform(0, W, n)
        y = rng.uniform(0, H, n)
    return fp.with_state(x, y, w)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


CRITERIA_LINES: list[tuple[int, str]] = []


def pytest_terminal_summary(terminalreporter):
    if CRITERIA_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(CRITERIA_LINES):
            terminalreporter.write_line(line)
