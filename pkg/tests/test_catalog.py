import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from optstop import catalog
from optstop.errors import ConfigError
from optstop.mc.simulate import coefficient


def test_payoff_spaces():
    x = np.array([-1.0, 0.0, 0.5])
    np.testing.assert_allclose(catalog.call(1.0)(x), np.maximum(np.exp(x) - 1, 0))
    np.testing.assert_allclose(catalog.call(1.0, "level")(x), np.maximum(x - 1, 0))
    np.testing.assert_allclose(catalog.put(1.0, "state")(x), np.maximum(-x, 0))
    s = catalog.strangle(math.exp(-1), math.e, "state")
    assert s(0.5) == s(-0.5) == pytest.approx(0.0) and s(2.0) == pytest.approx(s(-2.0))
    with pytest.raises(ConfigError):
        catalog.strangle(2.0, 1.0)
    with pytest.raises(ConfigError):
        catalog.call(-1.0)
    with pytest.raises(ConfigError):
        catalog.call(1.0, "price")


def test_derivatives():
    for f in (catalog.call(1.2), catalog.put(0.8), catalog.strangle(0.8, 1.2), catalog.exp_cost(0.4, 2.0)):
        for x in (-0.7, 0.1, 0.9):
            h = 1e-6
            assert f.derivative(x) == pytest.approx((f(x + h) - f(x - h)) / (2 * h), rel=1e-6, abs=1e-9)


def test_expressions():
    f = catalog.expression("pos(exp(x) - 1) + x*x")
    assert f(0.5) == pytest.approx(math.exp(0.5) - 1 + 0.25)
    assert f(-1.0) == pytest.approx(1.0)
    np.testing.assert_allclose(f(np.array([0.5, -1.0])), [f(0.5), f(-1.0)])
    assert catalog.expression("2*exp(0.3*x) + 1").exp_affine == (1.0, 2.0, 0.3)
    assert getattr(catalog.expression("sqrt(1 + x*x)"), "exp_affine", None) is None


@pytest.mark.parametrize("text", ["__import__('os')", "x.real", "lambda y: y", "exp(x, 2)", "foo(x)",
                                  "(1).__class__", "y + 1", "[x]", "x if x else 1"])
def test_expression_rejections(text):
    with pytest.raises(ConfigError):
        catalog.expression(text)


def test_expressions_compile_for_simulation():
    jf, _ = coefficient(catalog.expression("pos(exp(x) - 1) + x*x"))
    assert jf(0.5) == pytest.approx(math.exp(0.5) - 1 + 0.25, rel=1e-15)


def test_from_spec():
    assert catalog.from_spec(None)(3.0) == 0.0
    assert catalog.from_spec(2.5)(1.0) == 2.5
    assert catalog.from_spec("1 + x")(1.0) == 2.0
    assert catalog.from_spec({"type": "call", "K": 1.0}, space="level")(3.0) == 2.0
    assert catalog.from_spec({"type": "call", "K": 1.0, "space": "log"}, space="level")(0.0) == 0.0
    for bad in ({"K": 1.0}, {"type": "swap"}, [1, 2], True):
        with pytest.raises(ConfigError):
            catalog.from_spec(bad)


@given(st.sampled_from([{"type": "call", "K": 1.5, "space": "log"},
                        {"type": "strangle", "L": 0.5, "K": 2.0, "space": "level"},
                        {"type": "exp_cost", "gamma": 0.25, "coeff": 3.0},
                        {"type": "constant", "v": 0.75},
                        {"type": "expr", "expr": "x*x + 1"}]),
       st.floats(-3, 3))
def test_spec_round_trip(d, x):
    f = catalog.from_spec(d)
    assert catalog.from_spec(f.spec)(x) == f(x)
