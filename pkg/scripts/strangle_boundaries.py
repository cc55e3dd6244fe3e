"""Two-sided strangle under Brownian motion: continuation interval against a constant cost.

    python3 scripts/strangle_boundaries.py --costs 0 0.1 0.5 1 --mc 20000
"""

import argparse

from optstop import catalog, potential, solver, sturm
from optstop.mc import SimConfig, simulate_payoff
from optstop.model import ConstantRate, DiffusionSpec, ProblemSpec


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    # at q = 1/2 the call leg has no finite maximiser until a cost is added
    ap.add_argument("--q", type=float, default=1.0)
    ap.add_argument("--L", type=float, default=0.8)
    ap.add_argument("--K", type=float, default=1.2)
    ap.add_argument("--costs", type=float, nargs="+", default=[0.0, 0.1, 0.5, 1.0])
    ap.add_argument("--mc", type=int, default=0, help="paths for a Monte Carlo check (0 skips it)")
    args = ap.parse_args()

    bm = DiffusionSpec(catalog.constant(0.0), catalog.constant(1.0))
    pair = sturm.fundamental_solutions(bm, args.q, 0.0)
    g = catalog.strangle(args.L, args.K)
    print(f"{'cost':>6} {'lower':>10} {'upper':>10} {'p*':>8} {'V(0)':>10}  mc")
    for c in args.costs:
        cost = catalog.constant(c) if c > 0 else None
        d = potential.delta(pair, None, cost)
        sol = solver.solve_two_sided(pair, d, g, 0.0)
        v = float(sol.value(0.0))
        line = f"{c:6.2f} {sol.u1_star:10.5f} {sol.u2_star:10.5f} {sol.p_star:8.5f} {v:10.6f}"
        if args.mc:
            cfg = SimConfig(n_paths=args.mc, dt=1e-3, horizon=40.0, seed=1, bridge=True)
            est = simulate_payoff(ProblemSpec(bm, g, cost, ConstantRate(args.q)), sol.rule, cfg, 0.0)
            line += f"  {est.mean:.6f} +- {est.std_error:.6f}"
        print(line)


if __name__ == "__main__":
    main()
