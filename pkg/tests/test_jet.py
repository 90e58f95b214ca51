import math

import numpy as np
import pytest

import driftcheck.jet as jet
from driftcheck.jet import Jet


def test_basis_is_graded():
    b = jet.basis(2, 3)
    assert b.size == 10
    assert [tuple(a) for a in b.exponents[:3]] == [(0, 0), (1, 0), (0, 1)]
    assert list(b.degree) == sorted(b.degree)


def test_variable_derivatives():
    x, y = Jet.variables([[0.5, -1.0]], order=2)
    assert x.value[0] == 0.5
    assert np.allclose(x.gradient(), [[1.0, 0.0]])
    assert np.allclose(y.gradient(), [[0.0, 1.0]])
    assert np.allclose(x.hessian(), 0.0)


def test_product_rule():
    x, y = Jet.variables([1.5, 2.0], order=3)
    f = x * x * y
    assert f.value == pytest.approx(4.5)
    assert f.gradient() == pytest.approx([6.0, 2.25])
    assert f.partial(0, 0, 1) == pytest.approx(2.0)
    assert f.partial(1, 1) == pytest.approx(0.0)


def test_exp_sin_chain_rule():
    (x,) = Jet.variables([0.3], order=3)
    f = jet.exp(jet.sin(x))
    s, c = math.sin(0.3), math.cos(0.3)
    e = math.exp(s)
    assert f.partial(0) == pytest.approx(e * c)
    assert f.partial(0, 0) == pytest.approx(e * (c * c - s))
    assert f.partial(0, 0, 0) == pytest.approx(e * (c ** 3 - 3 * s * c - c))


def test_reciprocal_and_division():
    (x,) = Jet.variables([2.0], order=3)
    f = 1.0 / x
    assert f.value == pytest.approx(0.5)
    assert f.partial(0) == pytest.approx(-0.25)
    assert f.partial(0, 0) == pytest.approx(0.25)
    assert f.partial(0, 0, 0) == pytest.approx(-6.0 / 16.0)
    with pytest.raises(jet.DomainViolation):
        Jet.constant(0.0, 1, 2).reciprocal()


def test_integer_power_of_negative_base():
    (x,) = Jet.variables([-2.0], order=3)
    f = x ** 3
    assert f.value == pytest.approx(-8.0)
    assert f.partial(0) == pytest.approx(12.0)
    assert f.partial(0, 0) == pytest.approx(-12.0)
    assert (x ** -2).value == pytest.approx(0.25)


def test_fractional_power_domain():
    (x,) = Jet.variables([-1.0], order=1)
    with pytest.raises(jet.DomainViolation):
        jet.sqrt(x)
    with pytest.raises(jet.DomainViolation):
        jet.log(x)
    (z,) = Jet.variables([0.0], order=0)
    assert jet.sqrt(z).value == 0.0


def test_sqrt_log_derivatives():
    (x,) = Jet.variables([4.0], order=2)
    r = jet.sqrt(x)
    assert r.partial(0) == pytest.approx(0.25)
    assert r.partial(0, 0) == pytest.approx(-1.0 / 32.0)
    lg = jet.log(x)
    assert lg.partial(0, 0) == pytest.approx(-1.0 / 16.0)


def test_derivative_lowers_order():
    x, y = Jet.variables([1.0, 2.0], order=3)
    f = x * x * x * y
    dx = f.derivative(0)
    assert dx.order == 2
    assert dx.value == pytest.approx(6.0)
    assert dx.partial(0) == pytest.approx(12.0)
    assert dx.partial(0, 1) == pytest.approx(6.0)
    with pytest.raises(ValueError):
        Jet.constant(1.0, 1, 0).derivative(0)


def test_mixed_orders_truncate():
    x, _ = Jet.variables([1.0, 1.0], order=3)
    low = x.truncate(1)
    f = low * x
    assert f.order == 1
    with pytest.raises(ValueError):
        low.truncate(2)


def test_batched_points():
    pts = np.array([[0.0, 0.0], [1.0, 2.0], [-1.0, 0.5]])
    x, y = Jet.variables(pts, order=2)
    f = x * y + jet.cos(x)
    assert f.shape == (3,)
    assert f.value == pytest.approx(pts[:, 0] * pts[:, 1] + np.cos(pts[:, 0]))
    assert f.hessian()[:, 0, 1] == pytest.approx([1.0, 1.0, 1.0])
    assert f.hessian()[:, 0, 0] == pytest.approx(-np.cos(pts[:, 0]))


def test_cross_and_dot():
    x, y, z = Jet.variables([1.0, 2.0, 3.0], order=1)
    a = [x, y, z]
    b = [Jet.constant(0.0, 3, 1), Jet.constant(0.0, 3, 1), Jet.constant(1.0, 3, 1)]
    c = jet.cross(a, b)
    assert [v.value for v in c] == pytest.approx([2.0, -1.0, 0.0])
    assert jet.dot(a, a).gradient() == pytest.approx([2.0, 4.0, 6.0])


def test_numpy_scalar_on_left():
    (x,) = Jet.variables([1.0], order=1)
    f = np.float64(2.0) * x
    assert isinstance(f, Jet)
    assert f.partial(0) == pytest.approx(2.0)
