"""Named rewards and costs, plus a small safe expression language.

Every catalog function is vectorised, carries an analytic ``derivative``
where one exists, and can describe itself as a config fragment through
``spec``. Exponential-affine costs expose ``exp_affine = (k0, k1, gamma)``
(meaning ``k0 + k1 exp(gamma x)``), which the simulator uses directly.

Rewards act on the log-price by default (``call(K)`` is ``(e^x - K)^+``);
``space="level"`` gives the same payoffs on the natural scale, as used for
positive self-similar processes, and ``space="state"`` compares x itself
with the log-strikes (``call(K)`` is ``(x - log K)^+``).

Expressions such as ``"2*exp(0.5*x) + 1"`` are parsed with ``ast`` and only
numbers, ``x``, ``e``, ``pi``, arithmetic operators and the functions
``exp log sqrt abs max min pos`` are accepted; anything else raises
``ConfigError``. The compiled expression keeps a pure-``math`` twin in
``scalar`` so that the simulator can compile it.
"""

from __future__ import annotations

import ast
import math

import numpy as np

from .errors import ConfigError

_SPACES = ("log", "level", "state")


class CatalogFunction:
    """Vectorised function with optional derivative, exp-affine form and config spec."""

    def __init__(self, fn, spec, derivative=None, exp_affine=None, scalar=None):
        self._fn = fn
        self.spec = spec
        if derivative is not None:
            self.derivative = derivative
        if exp_affine is not None:
            self.exp_affine = tuple(float(v) for v in exp_affine)
        if scalar is not None:
            self.scalar = scalar

    def __call__(self, x):
        y = self._fn(np.asarray(x, dtype=float))
        return float(y) if np.ndim(y) == 0 else y

    def __repr__(self):
        return f"CatalogFunction({self.spec!r})"


def _level(space):
    if space not in _SPACES:
        raise ConfigError(f"space must be one of {_SPACES}, got {space!r}")
    if space == "log":
        return np.exp, np.exp
    return (lambda x: x), (lambda x: np.ones_like(x))


def _strike(v, space):
    return math.log(v) if space == "state" else v


def _positive(name, v):
    v = float(v)
    if not v > 0:
        raise ConfigError(f"{name} must be positive, got {v}")
    return v


def call(K: float, space: str = "log") -> CatalogFunction:
    """(S - K)^+ with S = e^x (log space) or S = x (level space)."""
    K = _positive("K", K)
    s, ds = _level(space)
    k = _strike(K, space)
    return CatalogFunction(
        lambda x: np.maximum(s(x) - k, 0.0),
        {"type": "call", "K": K, "space": space},
        derivative=lambda x: np.where(s(np.asarray(x, dtype=float)) > k, ds(np.asarray(x, dtype=float)), 0.0),
    )


def put(L: float, space: str = "log") -> CatalogFunction:
    """(L - S)^+."""
    L = _positive("L", L)
    s, ds = _level(space)
    lv = _strike(L, space)
    return CatalogFunction(
        lambda x: np.maximum(lv - s(x), 0.0),
        {"type": "put", "L": L, "space": space},
        derivative=lambda x: np.where(s(np.asarray(x, dtype=float)) < lv, -ds(np.asarray(x, dtype=float)), 0.0),
    )


def strangle(L: float, K: float, space: str = "log") -> CatalogFunction:
    """(L - S)^+ + (S - K)^+ with L <= K."""
    L = _positive("L", L)
    K = _positive("K", K)
    if L > K:
        raise ConfigError(f"strangle needs L <= K, got L={L}, K={K}")
    c, p = call(K, space), put(L, space)
    return CatalogFunction(
        lambda x: c(x) + p(x),
        {"type": "strangle", "L": L, "K": K, "space": space},
        derivative=lambda x: c.derivative(x) + p.derivative(x),
    )


def exp_cost(gamma: float, coeff: float = 1.0) -> CatalogFunction:
    """coeff * exp(gamma x)."""
    gamma, coeff = float(gamma), float(coeff)
    if coeff < 0:
        raise ConfigError(f"cost coefficient must be nonnegative, got {coeff}")
    return CatalogFunction(
        lambda x: coeff * np.exp(gamma * x),
        {"type": "exp_cost", "gamma": gamma, "coeff": coeff},
        derivative=lambda x: gamma * coeff * np.exp(gamma * np.asarray(x, dtype=float)),
        exp_affine=(0.0, coeff, gamma),
    )


def constant(v: float) -> CatalogFunction:
    v = float(v)
    return CatalogFunction(
        lambda x: np.full(np.shape(x), v),
        {"type": "constant", "v": v},
        derivative=lambda x: np.zeros(np.shape(x)),
        exp_affine=(v, 0.0, 0.0),
    )


def zero() -> CatalogFunction:
    return constant(0.0)


# -- expressions -------------------------------------------------------------------

_BINOPS = {ast.Add: "+", ast.Sub: "-", ast.Mult: "*", ast.Div: "/", ast.Pow: "**"}
_UNOPS = {ast.USub: "-", ast.UAdd: "+"}
# name -> (numpy spelling, math spelling, arity)
_FUNCS = {
    "exp": ("np.exp", "math.exp", 1),
    "log": ("np.log", "math.log", 1),
    "sqrt": ("np.sqrt", "math.sqrt", 1),
    "abs": ("np.abs", "abs", 1),
    "pos": ("np.maximum", "max", 1),
    "max": ("np.maximum", "max", 2),
    "min": ("np.minimum", "min", 2),
}
_CONSTS = {"e": math.e, "pi": math.pi}


def _emit(node, vec: bool) -> str:
    if isinstance(node, ast.Expression):
        return _emit(node.body, vec)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
        return repr(float(node.value))
    if isinstance(node, ast.Name):
        if node.id == "x":
            return "x"
        if node.id in _CONSTS:
            return repr(_CONSTS[node.id])
        raise ConfigError(f"unknown name {node.id!r} in expression")
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        return f"({_emit(node.left, vec)} {_BINOPS[type(node.op)]} {_emit(node.right, vec)})"
    if isinstance(node, ast.UnaryOp) and type(node.op) in _UNOPS:
        return f"({_UNOPS[type(node.op)]}{_emit(node.operand, vec)})"
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS and not node.keywords:
        np_name, math_name, arity = _FUNCS[node.func.id]
        if len(node.args) != arity:
            raise ConfigError(f"{node.func.id} takes {arity} argument(s)")
        args = ", ".join(_emit(a, vec) for a in node.args)
        if node.func.id == "pos":
            args += ", 0.0"
        return f"{np_name if vec else math_name}({args})"
    raise ConfigError(f"unsupported syntax in expression: {ast.dump(node)[:60]}")


def _exp_affine_of(tree):
    # recognise k0 + k1*exp(g*x) shapes built from constants; None otherwise
    def const(n):
        # evaluates the float spelling, so integer towers cannot blow up
        try:
            src = _emit(n, vec=False)
            return float(eval(src, {"math": math, "__builtins__": {"abs": abs, "max": max, "min": min}}))
        except Exception:
            return None

    def exp_term(n):
        # returns (k1, g) for k1*exp(g*x) / exp(g*x) / exp(x)
        if isinstance(n, ast.Call) and isinstance(n.func, ast.Name) and n.func.id == "exp" and len(n.args) == 1:
            a = n.args[0]
            if isinstance(a, ast.Name) and a.id == "x":
                return 1.0, 1.0
            if isinstance(a, ast.BinOp) and isinstance(a.op, ast.Mult):
                if isinstance(a.right, ast.Name) and a.right.id == "x" and const(a.left) is not None:
                    return 1.0, const(a.left)
                if isinstance(a.left, ast.Name) and a.left.id == "x" and const(a.right) is not None:
                    return 1.0, const(a.right)
            return None
        if isinstance(n, ast.BinOp) and isinstance(n.op, ast.Mult):
            for k, t in ((n.left, n.right), (n.right, n.left)):
                c = const(k)
                e = exp_term(t) if c is not None else None
                if e is not None:
                    return c * e[0], e[1]
        return None

    body = tree.body
    c = const(body)
    if c is not None:
        return (c, 0.0, 0.0)
    e = exp_term(body)
    if e is not None:
        return (0.0, e[0], e[1])
    if isinstance(body, ast.BinOp) and isinstance(body.op, ast.Add):
        for a, b in ((body.left, body.right), (body.right, body.left)):
            c, e = const(a), exp_term(b)
            if c is not None and e is not None:
                return (c, e[0], e[1])
    return None


def expression(text: str) -> CatalogFunction:
    """Compile a whitelisted arithmetic expression in ``x``."""
    if not isinstance(text, str) or len(text) > 500:
        raise ConfigError("expression must be a string of at most 500 characters")
    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"cannot parse expression {text!r}: {exc.msg}") from None
    vec_src = _emit(tree, vec=True)
    sc_src = _emit(tree, vec=False)
    env = {"np": np, "math": math, "__builtins__": {"abs": abs, "max": max, "min": min}}
    vec_fn = eval(f"lambda x: {vec_src}", env)
    scalar = eval(f"lambda x: {sc_src}", env)

    def fn(x):
        with np.errstate(all="ignore"):
            return np.asarray(vec_fn(x), dtype=float) + np.zeros(np.shape(x))

    return CatalogFunction(fn, {"type": "expr", "expr": text}, exp_affine=_exp_affine_of(tree), scalar=scalar)


# -- config dispatch ---------------------------------------------------------------

_BUILDERS = {
    "call": lambda d: call(d["K"], d["space"]),
    "put": lambda d: put(d["L"], d["space"]),
    "strangle": lambda d: strangle(d["L"], d["K"], d["space"]),
    "exp_cost": lambda d: exp_cost(d["gamma"], d.get("coeff", 1.0)),
    "constant": lambda d: constant(d["v"]),
    "expr": lambda d: expression(d["expr"]),
}

KINDS = tuple(_BUILDERS)


def from_spec(d, space: str = "log") -> CatalogFunction:
    """Build a catalog function from ``{"type": ..., params}``, a number or an expression string.

    ``space`` is the default payoff scale when the spec does not name one.
    """
    if d is None:
        return zero()
    if isinstance(d, (int, float)) and not isinstance(d, bool):
        return constant(d)
    if isinstance(d, str):
        return expression(d)
    if not isinstance(d, dict) or "type" not in d:
        raise ConfigError(f"function spec must be a number, an expression or an object with 'type', got {d!r}")
    kind = d["type"]
    if kind not in _BUILDERS:
        raise ConfigError(f"unknown function type {kind!r}; known: {', '.join(KINDS)}")
    try:
        return _BUILDERS[kind]({"space": space, **d})
    except KeyError as exc:
        raise ConfigError(f"{kind} needs parameter {exc.args[0]!r}") from None
