"""Bias of the first-passage Monte Carlo against the step size, with and without the bridge correction.

Target: E_0[exp(-q T_1)] = exp(-sqrt(2q)) for standard Brownian motion.

    python3 scripts/mc_step_study.py --paths 50000
"""

import argparse
import math

from optstop import catalog
from optstop.mc import SimConfig, hitting_laplace_mc
from optstop.model import DiffusionSpec


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--q", type=float, default=0.5)
    ap.add_argument("--paths", type=int, default=50_000)
    ap.add_argument("--steps", type=float, nargs="+", default=[0.1, 0.03, 0.01, 0.003, 0.001])
    args = ap.parse_args()

    bm = DiffusionSpec(catalog.constant(0.0), catalog.constant(1.0))
    exact = math.exp(-math.sqrt(2 * args.q))
    print(f"exact {exact:.6f}")
    print(f"{'dt':>7} {'plain':>10} {'z':>7} {'bridge':>10} {'z':>7}")
    for dt in args.steps:
        row = [f"{dt:7.3f}"]
        for bridge in (False, True):
            cfg = SimConfig(n_paths=args.paths, dt=dt, horizon=30.0, seed=4, bridge=bridge)
            est = hitting_laplace_mc(bm, 0.0, 1.0, args.q, cfg)
            row.append(f"{est.mean:10.6f} {(est.mean - exact) / est.std_error:7.2f}")
        print(" ".join(row))


if __name__ == "__main__":
    main()
