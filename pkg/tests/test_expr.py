import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from shortline import expr as ex

import oracles


def test_parse_tree_shape():
    e = ex.parse("x^2+y*z")
    assert e == ex.Binary("add", ex.Binary("pow", ex.Var("x"), ex.Const(2.0)),
                          ex.Binary("mul", ex.Var("y"), ex.Var("z")))


def test_power_binds_tighter_than_unary_minus():
    e = ex.parse("-x^2")
    assert e == ex.Unary("neg", ex.Binary("pow", ex.Var("x"), ex.Const(2.0)))
    assert ex.evaluate(e, x=2.0) == -4.0


def test_left_associative_division_and_subtraction():
    assert ex.evaluate(ex.parse("8/4/2")) == 1.0
    assert ex.evaluate(ex.parse("1-2-3")) == -4.0
    assert ex.evaluate(ex.parse("2^-1")) == 0.5


def test_unknown_identifier_reports_offset():
    with pytest.raises(ex.UnknownIdentifierError) as info:
        ex.parse("sin(q)")
    assert info.value.offset == 4
    assert "q" in str(info.value)


@pytest.mark.parametrize("text", ["x+", "(x", "x)", "2**x", "sin x", "", "x $ y"])
def test_syntax_errors(text):
    with pytest.raises(ex.ExprSyntaxError):
        ex.parse(text)


def test_aliases_and_constants():
    assert ex.parse("omega") == ex.Var("w")
    assert ex.evaluate(ex.parse("2*pi"), ) == pytest.approx(2 * math.pi, abs=0)
    assert ex.evaluate(ex.parse("ln(e)")) == 1.0


def test_jet_polynomial():
    j = ex.eval_jet2(ex.parse("x^2+y*z"), (1.0, 2.0, 3.0))
    assert j.value == 7.0
    assert j.gradient == (2.0, 3.0, 2.0)
    H = j.hessian_matrix
    assert H[0, 0] == 2.0 and H[1, 2] == 1.0 and H[2, 1] == 1.0
    assert np.count_nonzero(H) == 3


def test_jet_identity():
    j = ex.eval_jet2(ex.parse("x"), (0.3, -4.0, 9.0))
    assert j.value == 0.3
    assert j.gradient == (1.0, 0.0, 0.0)
    assert not np.any(j.hessian_matrix)


def test_jet_matches_central_differences():
    # double precision, step 1e-5, as a plain numerical check
    e = ex.parse("sin(x)*exp(y)")
    p = np.array([0.7, 0.3, 0.0])
    j = ex.eval_jet2(e, p)
    h = 1e-5
    f = lambda q: ex.evaluate(e, x=q[0], y=q[1], z=q[2])
    E = np.eye(3) * h
    g = np.array([(f(p + E[i]) - f(p - E[i])) / (2 * h) for i in range(3)])
    H = np.array([[(f(p + E[i] + E[k]) - f(p + E[i] - E[k]) - f(p - E[i] + E[k]) + f(p - E[i] - E[k]))
                   / (4 * h * h) for k in range(3)] for i in range(3)])
    assert oracles.rel_err(j.gradient, g) < 1e-6
    assert oracles.rel_err(j.hessian_matrix, H) < 1e-6


def test_jet_frozen_values():
    # frozen from the 40-digit tree-walk oracle
    j = ex.eval_jet2(ex.parse("sin(x)*exp(y)"), (0.7, 0.3, 0.0))
    assert j.value == pytest.approx(0.86960291911404016, rel=1e-14)
    assert j.gradient[0] == pytest.approx(1.0324289629116616, rel=1e-14)
    assert j.hessian(0, 1) == pytest.approx(1.0324289629116616, rel=1e-14)


def test_random_expressions_against_high_precision_oracle():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(100):
        e = ex.parse(oracles.random_expression(rng, 4))
        p = rng.uniform(-1, 1, 3)
        j = ex.eval_jet2(e, p)
        v, g, H = oracles.fd_gradient_hessian(e, p)
        worst = max(worst, oracles.rel_err(j.value, v), oracles.rel_err(j.gradient, g),
                    oracles.rel_err(j.hessian_matrix, H))
    assert worst < 1e-5


def test_hessian_slots_shared():
    j = ex.eval_jet2(ex.parse("x*y*z + sin(x*z)"), (0.2, 0.4, 0.6))
    for i in range(3):
        for k in range(3):
            assert j.hessian(i, k) is j.hessian(k, i)
    assert len(j.hess6) == 6


@pytest.mark.parametrize("text,point", [
    ("sqrt(x - 2)", (1.0, 0, 0)),
    ("ln(x)", (0.0, 0, 0)),
    ("1/(x - y)", (1.0, 1.0, 0)),
    ("(x - 3)^0.5", (1.0, 0, 0)),
    ("x^-2", (0.0, 0, 0)),
])
def test_domain_violations_are_reported(text, point):
    with pytest.raises(ex.DomainError) as info:
        ex.eval_jet2(ex.parse(text), point)
    assert info.value.subexpr is not None


def test_overflow_reports_offending_subexpression():
    with pytest.raises(ex.DomainError) as info:
        ex.eval_jet2(ex.parse("1 + exp(exp(x))"), (10.0, 0, 0))
    assert ex.to_text(info.value.subexpr) == "exp(exp(x))"


def test_sqrt_value_at_zero_allowed_without_derivatives():
    assert ex.evaluate(ex.parse("sqrt(x)"), x=0.0) == 0.0


def test_integer_powers_are_exact():
    j = ex.eval_jet2(ex.parse("x^5"), (3.0, 0, 0))
    assert j.value == 243.0
    assert j.gradient[0] == 405.0
    assert j.hessian(0, 0) == 540.0


def test_arrays_evaluate_elementwise():
    xs = np.linspace(-1, 1, 7)
    out = ex.eval_jet2(ex.parse("x*y + z^2"), (xs, 2.0, xs))
    assert np.allclose(out.value, 2 * xs + xs**2)
    assert np.allclose(out.gradient[2], 2 * xs)


def test_jet1d_in_parameter():
    f, d1, d2 = ex.eval_jet1d(ex.parse("tan(w)"), "w", 0.4)
    assert f == pytest.approx(math.tan(0.4), rel=1e-15)
    assert d1 == pytest.approx(1 / math.cos(0.4) ** 2, rel=1e-14)
    assert d2 == pytest.approx(2 * math.tan(0.4) / math.cos(0.4) ** 2, rel=1e-14)


def test_check_variables():
    ex.check_variables(ex.parse("x*y"), "xy")
    with pytest.raises(ex.ExprError):
        ex.check_variables(ex.parse("x*z"), "xy", "zeta")


# -- properties -----------------------------------------------------------------

_seeds = st.integers(min_value=0, max_value=2**32 - 1)
_coords = st.floats(min_value=-1, max_value=1, allow_nan=False)


@settings(max_examples=60, deadline=None)
@given(_seeds)
def test_round_trip(seed):
    e = ex.parse(oracles.random_expression(np.random.default_rng(seed), 4))
    assert ex.parse(ex.to_text(e)) == e


@settings(max_examples=60, deadline=None)
@given(_seeds, _coords, _coords, _coords)
def test_linearity_is_exact(seed, x, y, z):
    rng = np.random.default_rng(seed)
    a = ex.parse(oracles.random_expression(rng, 3))
    b = ex.parse(oracles.random_expression(rng, 3))
    ja, jb = ex.eval_jet2(a, (x, y, z)), ex.eval_jet2(b, (x, y, z))
    jab = ex.eval_jet2(ex.Binary("add", a, b), (x, y, z))
    assert jab == ja + jb


@settings(max_examples=40, deadline=None)
@given(_seeds, _coords, _coords, _coords)
def test_hessian_symmetric(seed, x, y, z):
    e = ex.parse(oracles.random_expression(np.random.default_rng(seed), 4))
    H = ex.eval_jet2(e, (x, y, z)).hessian_matrix
    assert np.array_equal(H, H.T)
