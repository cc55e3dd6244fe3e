import functools
import time

import pytest
from hypothesis import HealthCheck, settings

import scenarios

settings.register_profile("repo", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")

# criterion number -> (passed, title, detail, seconds); filled by test_acceptance
ACCEPTANCE = {}


@pytest.fixture(scope="session")
def scenario():
    """Cached scenario builder: solving the catalog once per session is plenty."""
    return functools.lru_cache(maxsize=None)(scenarios.scenario)


@pytest.fixture(scope="session")
def warm_jit():
    """Run every Monte Carlo kernel once so timings exclude compilation."""
    from optstop import catalog
    from optstop.mc import SimConfig, hitting_laplace_mc, simulate_levy_payoff, simulate_ssmp_payoff
    from optstop.model import LevySpec, SsmpSpec

    cfg = SimConfig(n_paths=100, dt=0.01, horizon=30.0, seed=1, bridge=True)
    spec = LevySpec(1.0, 0.0)
    hitting_laplace_mc(scenarios.bm(), 0.0, 0.5, 1.0, cfg)
    hitting_laplace_mc(spec, 0.0, 0.5, 1.0, cfg)
    simulate_levy_payoff(spec, catalog.call(1.0), 0.5, 0.5, cfg, 0.0, catalog.exp_cost(0.5, 0.1),
                         check_horizon=False)
    simulate_ssmp_payoff(SsmpSpec(spec, 2.0), catalog.constant(1.0), 0.5, 1.5, cfg, 1.0, check_horizon=False)
    return True


class Criterion:
    """Records one acceptance criterion: ``with criterion(n, title) as c: ... c.check(ok, detail)``."""

    def __init__(self, number, title, budget):
        self.number, self.title, self.budget = number, title, budget
        self.details = []
        self.ok = True

    def check(self, ok, detail):
        self.ok = self.ok and bool(ok)
        self.details.append(("ok  " if ok else "FAIL") + " " + detail)
        return ok

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        dt = time.perf_counter() - self.t0
        if exc_type is not None:
            self.ok = False
            self.details.append(f"FAIL raised {exc_type.__name__}: {exc}")
        self.check(dt < self.budget, f"runtime {dt:.1f} s < {self.budget:g} s")
        ACCEPTANCE[self.number] = (self.ok, self.title, self.details, dt)
        if exc_type is None:
            assert self.ok, "\n".join(d for d in self.details if d.startswith("FAIL"))
        return False


@pytest.fixture
def criterion():
    return Criterion


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, title, details, dt = ACCEPTANCE[n]
        tr.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {title}  ({dt:.1f} s)")
        for d in details:
            tr.write_line(f"    {d}")
