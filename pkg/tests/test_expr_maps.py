import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from quasimet import expr as ex
from quasimet.maps import AffineMap, ExprMap, NewtonInverse, ScalarField, fd_gradient


@pytest.mark.parametrize(
    "text, value",
    [
        ("1 + 2*3", 7),
        ("2^3^2", 512),
        ("2**3", 8),
        ("-x^2", -4),
        ("(x + y) / 4", 1.25),
        ("sqrt(x*x + y*y)", math.sqrt(13)),
        ("sin(pi/2) + exp(0) + log(e)", 3),
        ("1e-1 * x", 0.2),
    ],
)
def test_evaluate(text, value):
    assert ex.parse(text).evaluate({"x": 2.0, "y": 3.0}) == pytest.approx(value)


@pytest.mark.parametrize("bad", ["", "1 +", "foo(x)", "z", "(x", "x $ y", "1, 2"])
def test_parse_errors(bad):
    with pytest.raises(ex.ExpressionError):
        ex.parse(bad)


def test_parse_list():
    assert [str(e) for e in ex.parse_list("x + 0.1, y")] == ["(x + 0.1)", "y"]


def test_vectorized():
    e = ex.parse("x*y")
    assert np.allclose(e.evaluate({"x": np.arange(3.0), "y": 2.0}), [0, 2, 4])


@settings(max_examples=50, deadline=None)
@given(st.sampled_from(["x*y^2", "sin(x)*cos(y)", "exp(0.3*x - y)", "sqrt(1 + x^2 + y^2)", "x/(2 + y^2)",
                        "log(2 + x^2) - tan(0.2*y)", "x^y"]),
       st.floats(0.1, 1.5), st.floats(0.1, 1.5))
def test_symbolic_derivative_matches_differences(text, x, y):
    e = ex.parse(text)
    for var in ("x", "y"):
        d = e.diff(var).evaluate({"x": x, "y": y})
        h = 1e-6
        up = {"x": x, "y": y}
        dn = dict(up)
        up[var] += h
        dn[var] -= h
        fd = (e.evaluate(up) - e.evaluate(dn)) / (2 * h)
        assert d == pytest.approx(fd, rel=1e-5, abs=1e-6)


def test_scalar_field_algebra():
    f = ScalarField.from_expr("x^2 + y")
    g = ScalarField.linear(1, -1, 2)
    h = f + 2 * g - 1
    p = np.array([0.5, 0.25])
    assert h(p) == pytest.approx(0.25 + 0.25 + 2 * (0.25 + 2) - 1)
    assert np.allclose(h.gradient(p), [1 + 2, 1 - 2])
    assert np.allclose((-f).gradient(p), -f.gradient(p))


def test_affine_maps():
    R = AffineMap.rotation(math.pi / 2, center=(1, 1))
    assert np.allclose(R([2, 1]), [1, 2])
    assert np.allclose(R.inverse()(R([0.3, -0.2])), [0.3, -0.2])
    T = AffineMap.translation(1, 2)
    assert np.allclose(T.compose(R)([2, 1]), [2, 4])
    assert np.allclose(AffineMap.shear(0.5).jacobian(None), [[1, 0.5], [0, 1]])


def test_expr_map_jacobian_and_newton_inverse():
    phi = ExprMap.parse("x + 0.1*sin(y), y + 0.2*x^2")
    p = np.array([0.3, 0.7])
    fd = np.column_stack([(phi(p + e) - phi(p - e)) / 2e-6 for e in np.eye(2) * 1e-6])
    assert np.allclose(phi.jacobian(p), fd, atol=1e-8)
    inv = phi.inverse()
    assert isinstance(inv, NewtonInverse)
    assert np.allclose(inv(phi(p)), p, atol=1e-12)
    assert np.allclose(inv.jacobian(phi(p)) @ phi.jacobian(p), np.eye(2))


def test_expr_map_needs_two_components():
    with pytest.raises(ex.ExpressionError):
        ExprMap.parse("x")


def test_pullback_of_field_uses_chain_rule():
    f = ScalarField.from_expr("x*y")
    phi = ExprMap.parse("2*x, y + x")
    g = f.after(phi)
    p = np.array([0.4, -0.3])
    assert np.allclose(g.gradient(p), fd_gradient(g.fn, p), atol=1e-8)
