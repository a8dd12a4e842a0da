"""Benchmark the compiled transport grid kernels against the pure-numpy
fallback route.

Run:  python3 bench/kernel_bench.py [--points 256] [--repeat 5]
The same comparison can be forced package-wide by setting
TRACESTAB_DISABLE_NUMBA=1 before import.
"""

import argparse
import time

import numpy as np

from tracestab import _kernels
from tracestab.transport import PhaseGrid


def timeit(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--points", type=int, default=256)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    grid = PhaseGrid.build(n=1, L=40.0, points=args.points)
    x, v, t = grid.x, grid.v, grid.t
    fs = np.exp(-0.05 * (x[:, None] ** 2 + v[None, :] ** 2))
    Gs = np.exp(-0.05 * (t[:, None] ** 2 + x[None, :] ** 2))

    rows = []
    tn, a = timeit(lambda: _kernels._vel_avg_numpy(fs, float(x[0]), grid.h, v, t),
                   args.repeat)
    rows.append(("velocity_average", "numpy", tn))
    if _kernels.USING_NUMBA:
        _kernels._vel_avg_numba(fs, float(x[0]), grid.h, v, t)  # compile
        tc, b = timeit(lambda: _kernels._vel_avg_numba(fs, float(x[0]), grid.h, v, t),
                       args.repeat)
        rows.append(("velocity_average", "numba", tc))
        assert np.allclose(a, b, atol=1e-10), "kernel routes disagree"

    tn, c = timeit(lambda: _kernels._xray_numpy(Gs, t, float(x[0]), grid.h, v),
                   args.repeat)
    rows.append(("xray_adjoint", "numpy", tn))
    if _kernels.USING_NUMBA:
        _kernels._xray_numba(Gs, t, float(x[0]), grid.h, v)  # compile
        tc, d = timeit(lambda: _kernels._xray_numba(Gs, t, float(x[0]), grid.h, v),
                       args.repeat)
        rows.append(("xray_adjoint", "numba", tc))
        assert np.allclose(c, d, atol=1e-10), "kernel routes disagree"

    print(f"grid: {x.size} x {v.size} points, {t.size} time slices, "
          f"best of {args.repeat}")
    print(f"{'kernel':<20} {'route':<8} {'seconds':>10}")
    for name, route, sec in rows:
        print(f"{name:<20} {route:<8} {sec:>10.4f}")
    for name in ("velocity_average", "xray_adjoint"):
        times = {route: sec for k, route, sec in rows if k == name}
        if "numba" in times:
            print(f"{name}: numba speedup {times['numpy'] / times['numba']:.1f}x")
    if not _kernels.USING_NUMBA:
        print("numba route disabled (TRACESTAB_DISABLE_NUMBA); "
              "only the numpy fallback was timed")


if __name__ == "__main__":
    main()
