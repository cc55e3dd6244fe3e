"""Command-line front end: ``optstop {solve,verify,table,simulate} --config RUN.json``.

A run config is a JSON object with four sections::

    problem   family ("diffusion", "levy" or "ssmp"), start x, reward, cost,
              discount and the family parameters
    solver    grid, half_width, rtol, mode, upper, series_tol
    mc        SimConfig fields plus an optional fixed "rule"
    output    dir, format and the value-table range

Rewards and costs are catalog specs (see ``optstop.catalog``). Unknown keys
are rejected. Exit codes: 0 success, 2 bad config, 3 solver or simulator
failure, 4 failed verification.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import warnings
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import jsonschema
import numpy as np

from . import catalog, levy, model, potential, solver, ssmp, sturm
from .errors import ConfigError, OptStopError, SimulationError, SolverError, UnsupportedFamily, VerificationFailed
from .model import (CompoundPoissonExp, ConstantRate, DiffusionSpec, LevySpec, Pochhammer, ProblemSpec,
                    RandomDiscount, SsmpSpec, StateInterval)
from .rules import FixedTime, Interval

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_VERIFY = 4

CSV_COLUMNS = ("x", "value", "reward", "delta", "stop")

# -- schema ------------------------------------------------------------------------

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_FN = {"anyOf": [
    {"type": "null"}, {"type": "number"}, {"type": "string"},
    {"type": "object", "required": ["type"], "additionalProperties": False, "properties": {
        "type": {"enum": list(catalog.KINDS)}, "K": _NUM, "L": _NUM, "gamma": _NUM, "coeff": _NUM,
        "v": _NUM, "expr": {"type": "string"}, "space": {"enum": ["log", "level", "state"]}}},
]}
_LEVY = {"type": "object", "additionalProperties": False, "properties": {
    "sigma2": {"type": "number", "minimum": 0}, "drift": _NUM,
    "jumps": {"anyOf": [
        {"type": "null"},
        {"type": "object", "additionalProperties": False, "required": ["type", "rate", "mean_jump"],
         "properties": {"type": {"const": "compound_poisson"}, "rate": _POS, "mean_jump": _POS}},
        {"type": "object", "additionalProperties": False, "required": ["type", "alpha"],
         "properties": {"type": {"const": "pochhammer"}, "alpha": _NUM, "gamma": _NUM}},
    ]}}}
_COMMON = {"family": {"enum": ["diffusion", "levy", "ssmp"]}, "x": _NUM, "reward": _FN}

PROBLEM_SCHEMAS = {
    "diffusion": {"type": "object", "additionalProperties": False, "required": ["family", "reward", "discount"],
                  "properties": {**_COMMON, "cost": _FN, "drift": _FN, "volatility": _FN,
                                 "interval": {"type": "array", "minItems": 2, "maxItems": 2,
                                              "items": {"type": ["number", "null"]}},
                                 "discount": {"type": "object", "additionalProperties": False,
                                              "minProperties": 1, "maxProperties": 1,
                                              "properties": {"q": _NUM, "a": _FN}},
                                 "mode": {"enum": ["auto", "one_sided", "two_sided"]}}},
    "levy": {"type": "object", "additionalProperties": False, "required": ["family", "reward", "q"],
             "properties": {**_COMMON, "cost": _FN, "levy": _LEVY,
                            "q": {"anyOf": [_NUM, {"const": "martingale"}]}}},
    "ssmp": {"type": "object", "additionalProperties": False, "required": ["family", "reward", "q", "x", "preset"],
             "properties": {**_COMMON, "q": _NUM, "beta": _POS, "gamma": _NUM, "lam": _POS,
                            "problem": {"enum": list(ssmp.PROBLEMS)},
                            "preset": {"type": "object", "additionalProperties": False, "required": ["type"],
                                       "properties": {"type": {"enum": ["bessel", "mittag-leffler", "pochhammer",
                                                                        "levy"]},
                                                      "nu": _NUM, "alpha": _POS, "gamma": _NUM, "levy": _LEVY}}}},
}

RUN_SCHEMA = {
    "type": "object", "additionalProperties": False, "required": ["problem"],
    "properties": {
        "problem": {"type": "object", "required": ["family"], "properties": {"family": _COMMON["family"]}},
        "solver": {"type": "object", "additionalProperties": False, "properties": {
            "grid": {"type": "integer", "minimum": 16}, "half_width": _POS, "rtol": _POS,
            "upper": _POS, "series_tol": _POS, "mode": {"enum": ["auto", "one_sided", "two_sided"]}}},
        "mc": {"type": "object", "additionalProperties": False, "properties": {
            "n_paths": {"type": "integer", "minimum": 100}, "dt": _POS, "horizon": _POS,
            "seed": {"type": "integer", "minimum": 0}, "antithetic": {"type": "boolean"},
            "bridge": {"type": "boolean"}, "kill_fraction": {"type": "number", "minimum": 0, "maximum": 1},
            "rule": {"type": "object", "additionalProperties": False, "maxProperties": 1, "minProperties": 1,
                     "properties": {"threshold": _NUM, "fixed_time": {"type": "number", "minimum": 0},
                                    "interval": {"type": "array", "minItems": 2, "maxItems": 2,
                                                 "items": {"type": ["number", "null"]}}}}}},
        "output": {"type": "object", "additionalProperties": False, "properties": {
            "dir": {"type": "string"}, "format": {"enum": ["csv", "json"]},
            "table": {"type": "object", "additionalProperties": False, "properties": {
                "n": {"type": "integer", "minimum": 2}, "lower": _NUM, "upper": _NUM}}}},
    },
}


# -- config dataclasses --------------------------------------------------------------

@dataclass(frozen=True)
class SolverSettings:
    grid: int = sturm.GRID_POINTS
    half_width: float = model.DEFAULT_HALF_WIDTH
    rtol: float = sturm.RTOL
    upper: float | None = None
    series_tol: float | None = None
    mode: str = "auto"


@dataclass(frozen=True)
class McSettings:
    n_paths: int = 100_000
    dt: float = 1e-3
    horizon: float = 50.0
    seed: int = 0
    antithetic: bool = False
    bridge: bool = True
    kill_fraction: float = 1.0
    rule: dict | None = None

    def sim_config(self):
        from .mc import SimConfig

        kw = {f.name: getattr(self, f.name) for f in fields(SimConfig)}
        return SimConfig(**kw)


@dataclass(frozen=True)
class OutputSettings:
    dir: str = "."
    format: str | None = None
    table_n: int = 201
    table_lower: float | None = None
    table_upper: float | None = None


@dataclass(frozen=True)
class RunConfig:
    problem: dict
    solver: SolverSettings = field(default_factory=SolverSettings)
    mc: McSettings = field(default_factory=McSettings)
    output: OutputSettings = field(default_factory=OutputSettings)


def _schema_error(exc: jsonschema.ValidationError, where: str) -> ConfigError:
    path = "/".join(str(p) for p in exc.absolute_path)
    loc = f"{where}/{path}" if path else where
    return ConfigError(f"config {loc}: {exc.message}")


def parse_config(raw: dict) -> RunConfig:
    """Schema-check a decoded run config and split it into settings objects."""
    try:
        jsonschema.validate(raw, RUN_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise _schema_error(exc, "") from None
    prob = raw["problem"]
    try:
        jsonschema.validate(prob, PROBLEM_SCHEMAS[prob["family"]])
    except jsonschema.ValidationError as exc:
        raise _schema_error(exc, "problem") from None
    out = dict(raw.get("output", {}))
    table = out.pop("table", {})
    return RunConfig(
        prob,
        SolverSettings(**raw.get("solver", {})),
        McSettings(**raw.get("mc", {})),
        OutputSettings(**out, table_n=table.get("n", 201), table_lower=table.get("lower"),
                       table_upper=table.get("upper")),
    )


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    return parse_config(raw)


# -- building problems ---------------------------------------------------------------

def _levy_spec(d: dict | None) -> LevySpec:
    d = d or {}
    j = d.get("jumps")
    jumps = None
    if j is not None:
        jumps = (CompoundPoissonExp(j["rate"], j["mean_jump"]) if j["type"] == "compound_poisson"
                 else Pochhammer(j["alpha"], j.get("gamma", 1.0)))
    return LevySpec(d.get("sigma2", 1.0), d.get("drift", 0.0), jumps)


def _is_zero(f) -> bool:
    return getattr(f, "exp_affine", None) == (0.0, 0.0, 0.0)


@dataclass(frozen=True, eq=False)
class Built:
    """A solved run: summary fields plus what the table and simulator need."""
    family: str
    x: float
    summary: dict
    solution: object = None
    reward: object = None
    mc_payoff: object = None
    rule: object = None
    domain: tuple = (-math.inf, math.inf)


def _interval(pair):
    return float(pair.grid[0]), float(pair.grid[-1])


def _diffusion(p: dict, s: SolverSettings):
    x = float(p.get("x", 0.0))
    lo, hi = (p.get("interval") or [None, None])
    iv = StateInterval(-math.inf if lo is None else lo, math.inf if hi is None else hi)
    diff = DiffusionSpec(catalog.from_spec(p.get("drift", 0.0)), catalog.from_spec(p.get("volatility", 1.0)), iv)
    g = catalog.from_spec(p["reward"])
    c = catalog.from_spec(p.get("cost"))
    disc = p["discount"]
    discount = ConstantRate(float(disc["q"])) if "q" in disc else RandomDiscount(catalog.from_spec(disc["a"]))
    problem = ProblemSpec(diff, g, None if _is_zero(c) else c, discount)
    model.validate(problem, x0=x, half_width=s.half_width)
    return x, g, c, problem


def build_diffusion(p: dict, s: SolverSettings, mode: str) -> Built:
    x, g, c, problem = _diffusion(p, s)
    work = model.time_change_reduce(problem) if isinstance(problem.discount, RandomDiscount) else problem
    q = work.rate
    pair = sturm.fundamental_solutions(work.diffusion, q, x0=x, half_width=s.half_width, n=s.grid, rtol=s.rtol)
    domain = _interval(pair)
    if _is_zero(g) and problem.cost is None:
        return _degenerate("diffusion", x, q, domain)
    delta = None if work.cost is None else potential.delta(pair, None, work.cost)
    sol = solver.solve(pair, delta, g, x, mode)
    summary = _solution_summary(sol, x)
    summary.update(family="diffusion", q=q, time_changed=work is not problem)

    def payoff(rule, cfg):
        from .mc import simulate_payoff

        return simulate_payoff(problem, rule, cfg, x)

    return Built("diffusion", x, summary, sol, g, payoff, sol.rule, domain)


def _exp_affine_potential(spec: LevySpec, q: float, c):
    form = getattr(c, "exp_affine", None)
    if form is None:
        raise ConfigError("Lévy costs must be constant or of the form k0 + k1*exp(gamma*x)")
    k0, k1, gam = form
    parts = [potential.ClosedFormPotential(lambda x: np.full(np.shape(x), k0 / q), lambda x: np.zeros(np.shape(x)))]
    if k1:
        parts.append(levy.exp_cost_potential(spec, q, k1, gam))
    if len(parts) == 1:
        return parts[0]
    a, b = parts
    return potential.ClosedFormPotential(lambda x: a(x) + b(x), lambda x: a.derivative(x) + b.derivative(x))


def build_levy(p: dict, s: SolverSettings) -> Built:
    x = float(p.get("x", 0.0))
    spec = _levy_spec(p.get("levy"))
    q = levy.martingale_rate(spec) if p["q"] == "martingale" else float(p["q"])
    if not q > 0:
        raise ConfigError(f"discount rate must be positive, got {q}")
    g = catalog.from_spec(p["reward"])
    c = catalog.from_spec(p.get("cost"))
    pair = levy.exponential_pair(spec, q, x - s.half_width, x + s.half_width, x0=x, n=s.grid)
    domain = _interval(pair)
    if _is_zero(g) and _is_zero(c):
        return _degenerate("levy", x, q, domain)
    delta = None if _is_zero(c) else _exp_affine_potential(spec, q, c)
    sol = solver.solve_one_sided(pair, delta, g, x)
    summary = _solution_summary(sol, x)
    summary.update(family="levy", q=q)
    closed = _closed_form(p, spec, g, c, q, x)
    if closed is not None:
        summary["closed_form"] = closed
    cost = None if _is_zero(c) else c

    def payoff(rule, cfg):
        from .mc import simulate_levy_payoff

        return simulate_levy_payoff(spec, g, q, rule, cfg, x, cost)

    return Built("levy", x, summary, sol, g, payoff, sol.rule, domain)


def _closed_form(p, spec, g, c, q, x):
    # the call with exponential cost has an explicit solution at the martingale rate
    gs, cs = getattr(g, "spec", {}), getattr(c, "spec", {})
    if not (gs.get("type") == "call" and gs.get("space") == "log" and cs.get("type") == "exp_cost"):
        return None
    if p["q"] != "martingale":
        return None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        try:
            cf = levy.call_with_cost(spec, gs["K"], cs["coeff"], cs["gamma"], x)
        except OptStopError:
            return None
    return {"x_star": cf.x_star, "value": cf.value if cf.supported else None}


def _pse(preset: dict, lam: float, s: SolverSettings):
    kind = preset["type"]
    kw = {} if s.series_tol is None else {"tol": s.series_tol}
    PSE = ssmp.PowerSeriesEigenfunction
    try:
        if kind == "bessel":
            return PSE.bessel(preset["nu"], lam, **kw)
        if kind == "mittag-leffler":
            return PSE.mittag_leffler(preset["alpha"], lam, **kw)
        if kind == "pochhammer":
            return PSE.pochhammer(preset["alpha"], preset.get("gamma", 1.0), lam, **kw)
        return PSE.from_spec(SsmpSpec(_levy_spec(preset.get("levy")), preset["alpha"], lam), **kw)
    except KeyError as exc:
        raise ConfigError(f"preset {kind} needs parameter {exc.args[0]!r}") from None


def build_ssmp(p: dict, s: SolverSettings) -> Built:
    x = float(p["x"])
    q = float(p["q"])
    if not q > 0:
        raise ConfigError(f"discount rate must be positive, got {q}")
    name = p.get("problem", "V_X")
    beta = float(p.get("beta", 1.0))
    pse = _pse(p["preset"], float(p.get("lam", 1.0)), s)
    g = catalog.from_spec(p["reward"], space="level")
    if _is_zero(g):
        return _degenerate("ssmp", x, q, (x, math.inf), problem=name)
    res = ssmp.solve_ssmp_problems(pse, g, q, beta, x, gamma=p.get("gamma"), upper=s.upper, n=s.grid,
                                   problems=[name])[name]
    sol = res.solution
    summary = {"family": "ssmp", "problem": name, "q": q, "x": x, "value": res.value, "D_star": res.D_star,
               "thresholds": [res.a_star], "attained": res.attained, "degenerate": False, "kind": "one_sided"}
    if name == "V_Sq":
        summary["beta"] = beta

    def payoff(rule, cfg):
        from .mc import simulate_ssmp_payoff

        if pse.spec is None:
            raise UnsupportedFamily("this preset has no simulator; use a Lévy-backed preset to verify")
        if not isinstance(rule, Interval) or math.isfinite(rule.lower):
            raise ConfigError("self-similar problems are simulated for upper thresholds only")
        return simulate_ssmp_payoff(pse.spec, g, q, rule.upper, cfg, x, kind=ssmp.MC_KIND[name],
                                    beta=beta if name == "V_Sq" else None)

    return Built("ssmp", x, summary, sol, sol.reward, payoff, sol.rule, _interval(sol.pair))


def _degenerate(family, x, q, domain, **extra):
    summary = {"family": family, "q": q, "x": x, "value": 0.0, "thresholds": [], "attained": True,
               "degenerate": True, "kind": "none", **extra}
    return Built(family, x, summary, None, catalog.zero(), None, None, domain)


def _solution_summary(sol, x):
    if isinstance(sol, solver.TwoSidedSolution):
        return {"x": x, "value": float(sol.value(x)), "M_star": sol.M_star, "p_star": sol.p_star,
                "thresholds": [sol.u1_star, sol.u2_star], "attained": True, "degenerate": False,
                "kind": "two_sided", "smooth_fit": dict(sol.smooth_fit)}
    v = float(sol.value(x)) if sol.attained else sol.D_star * float(sol.pair.h_plus(x))
    return {"x": x, "value": v, "D_star": sol.D_star, "thresholds": [sol.u_star], "attained": sol.attained,
            "degenerate": False, "kind": "one_sided"}


def build(cfg: RunConfig) -> Built:
    p = cfg.problem
    fam = p["family"]
    if fam == "diffusion":
        mode = p.get("mode", cfg.solver.mode)
        return build_diffusion(p, cfg.solver, mode)
    if fam == "levy":
        return build_levy(p, cfg.solver)
    return build_ssmp(p, cfg.solver)


# -- outputs ---------------------------------------------------------------------

def _clean(v):
    # JSON has no infinities; unreachable thresholds become null
    if isinstance(v, dict):
        return {k: _clean(w) for k, w in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(w) for w in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(v) if math.isfinite(v) else None
    return v


def dumps(obj) -> str:
    """Canonical JSON: sorted keys, two-space indent, trailing newline."""
    return json.dumps(_clean(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _table_grid(b: Built, out: OutputSettings, n: int):
    lo, hi = out.table_lower, out.table_upper
    ths = [t for t in b.summary["thresholds"] if t is not None and math.isfinite(t)]
    if b.family == "ssmp":
        lo = b.x if lo is None else lo
        hi = (1.5 * max(ths) if ths else 2.0 * b.x) if hi is None else hi
    else:
        lo = min([b.x] + ths) - 2.0 if lo is None else lo
        hi = max([b.x] + ths) + 2.0 if hi is None else hi
    lo, hi = max(lo, b.domain[0]), min(hi, b.domain[1])
    if not lo < hi:
        raise ConfigError(f"empty table range [{lo}, {hi}]")
    return np.linspace(lo, hi, n)


def make_table(b: Built, out: OutputSettings, n: int | None = None) -> solver.ValueTable:
    grid = _table_grid(b, out, n or out.table_n)
    if b.solution is None:
        z = np.zeros_like(grid)
        return solver.ValueTable(grid, z, z, z, np.ones(grid.shape, dtype=bool))
    return solver.value_table(b.solution, grid)


def table_csv(t: solver.ValueTable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for row in zip(t.x, t.value, t.reward, t.delta, t.stop):
        w.writerow([repr(float(v)) for v in row[:4]] + [int(row[4])])
    return buf.getvalue()


def table_json(t: solver.ValueTable) -> str:
    return dumps({c: np.asarray(getattr(t, c)).tolist() for c in CSV_COLUMNS})


# -- commands --------------------------------------------------------------------

def _rule_from(d):
    if "threshold" in d:
        return Interval(-math.inf, d["threshold"])
    if "fixed_time" in d:
        return FixedTime(d["fixed_time"])
    lo, hi = d["interval"]
    return Interval(-math.inf if lo is None else lo, math.inf if hi is None else hi)


def _shift(rule, by):
    if by == 0 or rule is None:
        return rule
    if isinstance(rule, Interval):
        return Interval(rule.lower, rule.upper + by)
    return rule


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def cmd_solve(cfg: RunConfig, out_dir: Path, grid: int | None = None) -> dict:
    """Solve, write summary.json and value_table.csv, return the summary."""
    b = build(cfg)
    _write(out_dir / "summary.json", dumps(b.summary))
    _write(out_dir / "value_table.csv", table_csv(make_table(b, cfg.output, grid)))
    return _clean(b.summary)


def cmd_table(cfg: RunConfig, grid: int | None = None, fmt: str = "csv") -> str:
    t = make_table(build(cfg), cfg.output, grid)
    return table_csv(t) if fmt == "csv" else table_json(t)


def _estimate_dict(est) -> dict:
    return {"mean": est.mean, "std_error": est.std_error, "n": est.n_effective,
            "truncated_fraction": est.truncated_fraction, "seed": est.seed}


def cmd_simulate(cfg: RunConfig) -> dict:
    """Monte Carlo payoff of the configured rule, or of the optimal rule when none is given."""
    b = build(cfg)
    rule = _rule_from(cfg.mc.rule) if cfg.mc.rule else b.rule
    if b.mc_payoff is None:
        return {"mean": 0.0, "std_error": 0.0, "n": 0, "truncated_fraction": 0.0, "seed": cfg.mc.seed}
    return _estimate_dict(b.mc_payoff(rule, cfg.mc.sim_config()))


def cmd_verify(cfg: RunConfig, perturb: float = 0.0, k: float = 3.0) -> dict:
    """Solver value against the simulated payoff of the (optionally shifted) optimal rule.

    Unperturbed runs check agreement and dominance; a perturbed threshold
    checks dominance and reports the optimality gap, which should be
    nonnegative.
    """
    b = build(cfg)
    v = float(b.summary["value"])
    if b.mc_payoff is None:
        checks = [{"name": "value", "solver_value": 0.0, "mc_mean": 0.0, "mc_se": 0.0, "gap": 0.0, "pass": True}]
        return {"checks": checks, "passed": True, "perturb": perturb}
    est = b.mc_payoff(_shift(b.rule, perturb), cfg.mc.sim_config())
    m, se = est.mean, est.std_error
    row = {"solver_value": v, "mc_mean": m, "mc_se": se, "gap": v - m}
    checks = []
    if perturb == 0:
        checks.append({"name": "value", **row, "pass": abs(v - m) <= k * se})
    checks.append({"name": "dominance", **row, "pass": m <= v + k * se})
    if perturb != 0:
        checks.append({"name": "optimality_gap", **row, "pass": v - m >= -k * se})
    return {"checks": checks, "passed": all(c["pass"] for c in checks), "perturb": perturb,
            "truncated_fraction": est.truncated_fraction}


def verdict_csv(verdict: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    cols = ["name", "solver_value", "mc_mean", "mc_se", "gap", "pass"]
    w.writerow(cols)
    for c in verdict["checks"]:
        w.writerow([c[k] if k in ("name", "pass") else repr(float(c[k])) for k in cols])
    return buf.getvalue()


def _parser():
    ap = argparse.ArgumentParser(prog="optstop", description="Optimal stopping with observation costs.")
    ap.add_argument("command", choices=["solve", "verify", "table", "simulate"])
    ap.add_argument("--config", required=True, metavar="PATH", help="run config (JSON)")
    ap.add_argument("--out", metavar="DIR", help="output directory (default: output.dir, or stdout for table/simulate)")
    ap.add_argument("--seed", type=int, help="override mc.seed")
    ap.add_argument("--grid", type=int, help="number of value-table points")
    ap.add_argument("--format", choices=["csv", "json"], help="format for table, simulate and verify output")
    ap.add_argument("--perturb", type=float, default=0.0, help="verify: shift the upper threshold by this much")
    return ap


def run(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("--seed must be nonnegative")
            cfg = RunConfig(cfg.problem, cfg.solver, McSettings(**{**asdict(cfg.mc), "seed": args.seed}), cfg.output)
        if args.grid is not None and args.grid < 2:
            raise ConfigError("--grid must be at least 2")
        fmt = args.format or cfg.output.format or ("csv" if args.command == "table" else "json")
        if args.command == "solve":
            out = Path(args.out or cfg.output.dir)
            sys.stdout.write(dumps(cmd_solve(cfg, out, args.grid)))
            return EXIT_OK
        if args.command == "table":
            text = cmd_table(cfg, args.grid, fmt)
            name = "value_table.csv" if fmt == "csv" else "value_table.json"
        elif args.command == "simulate":
            est = cmd_simulate(cfg)
            if fmt == "json":
                text = dumps(est)
            else:
                cols = ["mean", "std_error", "n", "truncated_fraction", "seed"]
                text = ",".join(cols) + "\n" + ",".join(repr(est[c]) for c in cols) + "\n"
            name = f"estimate.{fmt}"
        else:
            verdict = cmd_verify(cfg, args.perturb)
            text = dumps(verdict) if fmt == "json" else verdict_csv(verdict)
            name = f"verify.{fmt}"
            out = Path(args.out or cfg.output.dir)
            _write(out / name, text)
            sys.stdout.write(text)
            if not verdict["passed"]:
                raise VerificationFailed("Monte Carlo check failed: " + ", ".join(
                    c["name"] for c in verdict["checks"] if not c["pass"]))
            return EXIT_OK
        if args.out:
            _write(Path(args.out) / name, text)
        sys.stdout.write(text)
        return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverError, SimulationError) as exc:
        print(f"solver error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except VerificationFailed as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY


def main(argv=None):
    sys.exit(run(argv))
