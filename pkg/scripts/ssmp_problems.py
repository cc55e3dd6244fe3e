"""The five self-similar stopping problems for a Bessel process, with Monte Carlo checks.

    python3 scripts/ssmp_problems.py --nu 0 --q 0.5 --x 0.5 --paths 20000
"""

import argparse

from optstop import catalog, ssmp
from optstop.mc import SimConfig, simulate_ssmp_payoff


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nu", type=float, default=0.0)
    ap.add_argument("--q", type=float, default=0.5)
    ap.add_argument("--beta", type=float, default=1.0)
    ap.add_argument("--x", type=float, default=0.5)
    ap.add_argument("--strike", type=float, default=1.0)
    ap.add_argument("--paths", type=int, default=20_000)
    args = ap.parse_args()

    pse = ssmp.PowerSeriesEigenfunction.bessel(args.nu)
    g = catalog.call(args.strike, "level")
    res = ssmp.solve_ssmp_problems(pse, g, args.q, args.beta, args.x)
    print(f"{'problem':>11} {'a*':>9} {'value':>10} {'mc':>10} {'se':>9} {'z':>6}")
    for name, s in res.items():
        kind = ssmp.MC_KIND[name]
        dt, horizon = (3e-3, 15.0) if kind in ("U_delta", "S") else (1e-3, 40.0)
        cfg = SimConfig(n_paths=args.paths, dt=dt, horizon=horizon, seed=3, bridge=True)
        est = simulate_ssmp_payoff(pse.spec, g, args.q, s.a_star, cfg, args.x, kind=kind, beta=args.beta)
        z = (est.mean - s.value) / est.std_error if est.std_error else 0.0
        print(f"{name:>11} {s.a_star:9.5f} {s.value:10.6f} {est.mean:10.6f} {est.std_error:9.6f} {z:6.2f}")


if __name__ == "__main__":
    main()
