import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from wel import catalog
from wel.dsl import ScalarField, eval_jet, evaluate, parse, to_source
from wel.errors import ArityError, DomainError, ParseError, UnknownIdentifierError


def test_constant():
    e = parse("1", ["t", "y"])
    assert evaluate(e, ["t", "y"], [0.3, 0.4]) == 1.0
    jt = eval_jet(e, ["t", "y"], [0.3, 0.4])
    assert np.all(jt.grad == 0) and np.all(jt.hess == 0)


def test_exp_cos_value():
    coords = ["x", "y", "v", "w"]
    assert evaluate(parse("exp(v)*cos(w)", coords), coords, [0, 0, 0, 0]) == 1.0


def test_exp_minus_log2():
    assert evaluate(parse("exp(-v)", ["v"]), ["v"], [math.log(2)]) == pytest.approx(0.5, abs=1e-15)


def test_sin_jet():
    jt = eval_jet(parse("sin(t)", ["t"]), ["t"], [0.0])
    assert (jt.val, jt.grad[0], jt.hess[0, 0]) == (0.0, 1.0, 0.0)


def test_exp_jet():
    jt = eval_jet(parse("exp(t)", ["t"]), ["t"], [0.0])
    assert (jt.val, jt.grad[0], jt.hess[0, 0]) == (1.0, 1.0, 1.0)


def test_exp_sec_jet():
    jt = eval_jet(parse("exp(-x)*sec(y)", ["x", "y"]), ["x", "y"], [0.0, 0.0])
    assert jt.val == pytest.approx(1.0)
    np.testing.assert_allclose(jt.grad, [-1, 0], atol=1e-15)
    np.testing.assert_allclose(jt.hess, np.eye(2), atol=1e-15)


@pytest.mark.parametrize("src,offset", [("1 +", 3), ("(x", 2), ("x $ y", 2)])
def test_syntax_error_offset(src, offset):
    with pytest.raises(ParseError) as exc:
        parse(src, ["x", "y"])
    assert exc.value.offset == offset


def test_unknown_identifier():
    with pytest.raises(UnknownIdentifierError):
        parse("q + 1", ["x"])


def test_arity():
    with pytest.raises(ArityError):
        parse("sin(x, x)", ["x"])


@pytest.mark.parametrize("src,pt", [("sec(x)", math.pi / 2), ("log(x)", -1.0), ("sqrt(x)", -1.0), ("log(x)", 0.0)])
def test_domain_error(src, pt):
    with pytest.raises(DomainError):
        eval_jet(parse(src, ["x"]), ["x"], [pt])


def test_params_substitute():
    e = parse("rho^2*sin(t)^2", ["t"], params={"rho": 2.0})
    assert evaluate(e, ["t"], [math.pi / 2]) == pytest.approx(4.0)


def test_rational_power():
    coords = ["x"]
    jt = eval_jet(parse("x^(3/2)", coords), coords, [4.0])
    assert jt.val == pytest.approx(8.0)
    assert jt.grad[0] == pytest.approx(3.0)
    assert jt.hess[0, 0] == pytest.approx(0.375)


def test_right_associative_power():
    assert evaluate(parse("2^3^2", ["x"]), ["x"], [0.0]) == 512.0


def test_third_order_symmetric():
    coords = ["x", "y"]
    jt = eval_jet(parse("exp(x)*sin(y)", coords), coords, [0.2, 0.7], order=3)
    t = jt.third
    assert np.allclose(t, t.transpose(1, 0, 2)) and np.allclose(t, t.transpose(0, 2, 1))
    assert t[0, 0, 1] == pytest.approx(math.exp(0.2) * math.cos(0.7), rel=1e-6)


CATALOG = ["eps", "s4", "h4", "sphere2", "hyperbolic2", "s2xs2", "s2xh2"]


@pytest.mark.parametrize("label", CATALOG)
def test_catalog_jets_match_fd(label, rng):
    chart = catalog.builtin(label)
    for x in chart.sample(25, rng):
        for row in chart.components:
            for f in row:
                ad, fd = f.jet(x), f.fd_jet(x)
                assert np.abs(ad.grad - fd.grad).max() / (1 + np.abs(ad.grad).max()) < 1e-6
                assert np.abs(ad.hess - fd.hess).max() / (1 + np.abs(ad.hess).max()) < 1e-6


EXPRS = ["exp(-x)*sec(y)", "x^2*y - 3*x/(1 + y^2)", "sqrt(1 + x^2)*cos(x*y)", "tan(x/3) + log(2 + y)",
         "abs(x - 5)^(1/3)", "-(x - y)^2/(4*2^2)"]


@pytest.mark.parametrize("src", EXPRS)
def test_print_roundtrip_bitwise(src):
    coords = ["x", "y"]
    e = parse(src, coords)
    e2 = parse(to_source(e), coords)
    assert to_source(e2) == to_source(e)
    for x in ([0.3, -0.4], [1.1, 0.2]):
        a, b = eval_jet(e, coords, x), eval_jet(e2, coords, x)
        assert a.val == b.val and np.array_equal(a.grad, b.grad) and np.array_equal(a.hess, b.hess)


finite = st.floats(-1.2, 1.2, allow_nan=False)


@given(finite, finite)
def test_plain_and_jet_agree(x, y):
    coords = ["x", "y"]
    for src in EXPRS:
        e = parse(src, coords)
        assert eval_jet(e, coords, [x, y]).val == pytest.approx(evaluate(e, coords, [x, y]), rel=1e-15, abs=1e-15)


@given(finite, finite)
def test_leibniz_chain_against_fd(x, y):
    f = ScalarField.parse("sin(x*y)*exp(y) + x/(2 + cos(y))", ["x", "y"])
    ad, fd = f.jet([x, y]), f.fd_jet([x, y])
    assert np.abs(ad.grad - fd.grad).max() / (1 + np.abs(ad.grad).max()) < 1e-6
    assert np.abs(ad.hess - fd.hess).max() / (1 + np.abs(ad.hess).max()) < 1e-6
