"""Compare the compiled and pure-Python kernel backends.

Usage: python3 benchmarks/bench_kernels.py [--n 300] [--K 128] [--repeat 5]
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from poissonfp import _pykernels as pure
from poissonfp.field import build_field
from poissonfp.global_fp import initial_floorplan
from poissonfp.instances import gsrc_like, overlapping_layout
from poissonfp.legalize import build_constraint_graphs

try:
    from poissonfp import _ckernels as native
except ImportError:
    native = None


def _best(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def cases(n: int, K: int):
    fp = initial_floorplan(gsrc_like(n, seed=1))
    r = fp.rects()
    c = lambda v: np.ascontiguousarray(v, dtype=float)  # noqa: E731
    xl, yl, xh, yh = c(r.xl), c(r.yl), c(r.xh), c(r.yh)
    W, H = fp.outline.width, fp.outline.height
    grid = build_field(fp, K)
    lay = overlapping_layout(n, seed=1)
    hcg, _ = build_constraint_graphs(lay)
    src, dst = hcg.edges()
    return {
        "rasterize": lambda m: m.rasterize(xl, yl, xh, yh, K, W / K, H / K),
        "fast_potential": lambda m: m.fast_potential(xl, yl, xh, yh, c(fp.w), c(fp.areas),
                                                     grid.psi, grid.sat, grid.wb, grid.hb),
        "bin_spans": lambda m: m.bin_spans(xl, yl, xh, yh, W / K, H / K, K),
        "longest_path": lambda m: m.longest_path(n, src, dst, c(lay.w)),
        "reaches": lambda m: m.reaches(n, src, dst, 0, n - 1),
    }


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=300)
    p.add_argument("--K", type=int, default=128)
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args(argv)
    print(f"n={args.n} K={args.K} best of {args.repeat}")
    print(f"{'kernel':<16}{'python ms':>12}{'cython ms':>12}{'speedup':>10}")
    for name, fn in cases(args.n, args.K).items():
        tp = _best(lambda: fn(pure), args.repeat)
        if native is None:
            print(f"{name:<16}{tp * 1e3:>12.3f}{'n/a':>12}{'':>10}")
            continue
        tc = _best(lambda: fn(native), args.repeat)
        print(f"{name:<16}{tp * 1e3:>12.3f}{tc * 1e3:>12.3f}{tp / tc:>9.1f}x")


if __name__ == "__main__":
    main()
