"""Time the compiled and pure-Python RK4 kernels on the bundled networks.

    python benchmarks/bench_rk4.py [--repeat N] [--t-end T]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from regbin import fixtures
from regbin._kernels import BACKENDS
from regbin.odesim import build_ode, integrate_rk4


def best_of(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--t-end", type=float, default=50.0)
    ap.add_argument("--dt", type=float, default=0.01)
    args = ap.parse_args()

    print(f"backends available: {', '.join(sorted(BACKENDS))}")
    print(f"{'network':<15}{'genes':>6}{'steps':>8}" + "".join(f"{b + ' (s)':>14}" for b in sorted(BACKENDS)) + f"{'speedup':>10}{'max |diff|':>12}")
    for name in fixtures.NETWORKS:
        pf = fixtures.params(name)
        system = build_ode(fixtures.network(name), pf.params)
        x0 = pf.x0
        timing, finals = {}, {}
        for b in sorted(BACKENDS):
            timing[b] = best_of(lambda: integrate_rk4(system, x0, args.t_end, args.dt, backend=b), args.repeat)
            finals[b] = integrate_rk4(system, x0, args.t_end, args.dt, backend=b).states
        speed = timing["python"] / timing["cython"] if "cython" in timing else float("nan")
        diff = max(float(np.max(np.abs(finals[b] - finals["python"]))) for b in finals)
        steps = int(round(args.t_end / args.dt))
        cols = "".join(f"{timing[b]:>14.4f}" for b in sorted(BACKENDS))
        print(f"{name:<15}{system.dimension:>6}{steps:>8}{cols}{speed:>10.1f}{diff:>12.2e}")


if __name__ == "__main__":
    main()
