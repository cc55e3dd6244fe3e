"""Perpetual call with an exponential observation cost: threshold and value across cost levels.

Each row solves the problem twice, by the closed form for spectrally negative
processes and by the generic ratio solver, and prints both.

    python3 scripts/call_cost_sweep.py --gamma 0.5 --costs 0.02 0.05 0.1 0.2
"""

import argparse

from optstop import catalog, levy, solver
from optstop.model import CompoundPoissonExp, LevySpec


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--gamma", type=float, default=0.5)
    ap.add_argument("--strike", type=float, default=1.0)
    ap.add_argument("--costs", type=float, nargs="+", default=[0.02, 0.05, 0.1, 0.2, 0.4])
    ap.add_argument("--jumps", action="store_true", help="add exponential down-jumps (rate 1, mean 0.3)")
    args = ap.parse_args()

    spec = LevySpec(1.0, 0.0, CompoundPoissonExp(1.0, 0.3) if args.jumps else None)
    q = levy.martingale_rate(spec)
    pair = levy.exponential_pair(spec, q, -30.0, 30.0)
    print(f"q = psi(1) = {q:.6f}")
    print(f"{'alpha':>8} {'x* closed':>12} {'x* solver':>12} {'V(0) closed':>12} {'V(0) solver':>12}")
    for a in args.costs:
        cf = levy.call_with_cost(spec, args.strike, a, args.gamma, 0.0)
        d = levy.exp_cost_potential(spec, q, a, args.gamma)
        sol = solver.solve_one_sided(pair, d, catalog.call(args.strike), 0.0)
        print(f"{a:8.3f} {cf.x_star:12.6f} {sol.u_star:12.6f} {cf.value:12.8f} {float(sol.value(0.0)):12.8f}")


if __name__ == "__main__":
    main()
