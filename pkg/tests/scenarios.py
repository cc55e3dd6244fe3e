"""Problem builders shared by the test modules.

The catalog at the bottom is the scenario set the property suite runs over.
"""

import math
from dataclasses import dataclass

import numpy as np

from optstop import catalog, levy, potential, solver, ssmp, sturm
from optstop.model import DiffusionSpec, LevySpec

SQRT2 = math.sqrt(2.0)


def bm(b=0.0, sigma=1.0):
    return DiffusionSpec(catalog.constant(b), catalog.constant(sigma))


def ou(kappa=1.0, sigma=1.0):
    return DiffusionSpec(catalog.expression(f"-{float(kappa)!r}*x"), catalog.constant(sigma))


def bm_pair(b=0.0, q=1.0, x0=0.0, **kw):
    return sturm.fundamental_solutions(bm(b), q, x0, **kw)


def alphas(b, q):
    root = math.sqrt(2.0 * q + b * b)
    return -b + root, -b - root


def call_foc(q):
    """Threshold and D* of (e^u - 1)^+ against e^{r u}, r = sqrt(2q), by the first-order condition.

    d/du (e^u - 1) e^{-r u} = 0 gives e^u = r / (r - 1).
    """
    r = math.sqrt(2.0 * q)
    u = math.log(r / (r - 1.0))
    return u, (math.exp(u) - 1.0) * math.exp(-r * u)


@dataclass(eq=False)
class Scenario:
    name: str
    diffusion: object
    q: float
    pair: object
    delta: object
    reward: object
    cost: object
    x: float
    mode: str

    def solve(self, pair=None):
        return solver.solve(pair or self.pair, self.delta, self.reward, self.x, self.mode)


def _diffusion_scenario(name, diffusion, q, reward, cost=None, x=0.0, mode="one_sided", half_width=30.0):
    pair = sturm.fundamental_solutions(diffusion, q, x, half_width=half_width)
    delta = None if cost is None else potential.delta(pair, None, cost)
    return Scenario(name, diffusion, q, pair, delta, reward, cost, x, mode)


def _levy_call():
    spec = LevySpec(1.0, 0.0)
    q = levy.martingale_rate(spec)
    pair = levy.exponential_pair(spec, q, -30.0, 30.0)
    delta = levy.exp_cost_potential(spec, q, 0.1, 0.5)
    return Scenario("levy_call_cost", None, q, pair, delta, catalog.call(1.0), catalog.exp_cost(0.5, 0.1),
                    0.0, "one_sided")


SCENARIO_NAMES = ("bm_call", "bm_call_drift_cost", "strangle_symmetric", "strangle_cost",
                  "ou_call", "levy_call_cost")


def scenario(name):
    if name == "bm_call":
        return _diffusion_scenario(name, bm(), 1.0, catalog.call(1.0))
    if name == "bm_call_drift_cost":
        return _diffusion_scenario(name, bm(0.25), 1.5, catalog.call(1.0), catalog.exp_cost(0.5, 0.2))
    if name == "strangle_symmetric":
        return _diffusion_scenario(name, bm(), 0.5, catalog.strangle(math.exp(-1), math.e, "state"),
                                   mode="two_sided")
    if name == "strangle_cost":
        return _diffusion_scenario(name, bm(), 0.5, catalog.strangle(0.8, 1.2), catalog.constant(1.0),
                                   mode="two_sided")
    if name == "ou_call":
        return _diffusion_scenario(name, ou(), 0.5, catalog.call(1.0), half_width=12.0)
    if name == "levy_call_cost":
        return _levy_call()
    raise KeyError(name)


def bessel_problems(q=0.5, x=0.5, beta=1.0):
    pse = ssmp.PowerSeriesEigenfunction.bessel(0.0)
    g = catalog.call(1.0, "level")
    return pse, g, ssmp.solve_ssmp_problems(pse, g, q, beta, x)
