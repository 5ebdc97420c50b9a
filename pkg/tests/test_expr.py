import numpy as np
import pytest

from drift_spectra import expr as ex
from drift_spectra.errors import EvalDomainError, ExprSyntaxError

from oracles import central_difference


def test_parse_power_quotient():
    got = ex.parse_expr("x^2/2")
    want = ex.div(ex.powc(ex.X, 2.0), ex.num(2.0))
    assert got == want


def test_parse_function_call():
    assert ex.parse_expr("sin(pi*x)") == ex.func("sin", ex.mul(ex.PI, ex.X))


def test_parse_incomplete_input_offset():
    with pytest.raises(ExprSyntaxError) as err:
        ex.parse_expr("2*")
    assert err.value.offset == 2


def test_parse_unknown_identifier():
    with pytest.raises(ExprSyntaxError) as err:
        ex.parse_expr("1 + y")
    assert "unknown identifier" in str(err.value)
    assert err.value.offset == 4


def test_parse_nonconstant_exponent():
    with pytest.raises(ExprSyntaxError) as err:
        ex.parse_expr("x^x")
    assert "non-constant exponent" in str(err.value)


def test_parse_empty_and_trailing():
    with pytest.raises(ExprSyntaxError):
        ex.parse_expr("   ")
    with pytest.raises(ExprSyntaxError):
        ex.parse_expr("1 + 2 )")


def test_eval_examples():
    assert ex.eval_expr(ex.parse_expr("exp(-x)"), 0.0) == 1.0
    assert ex.eval_expr(ex.parse_expr("sin(pi*x)"), 0.5) == 1.0
    assert ex.eval_expr(ex.parse_expr("x^2/2"), 3.0) == 4.5


def test_eval_vectorized():
    e = ex.parse_expr("x^2 + 1")
    out = ex.eval_expr(e, np.array([0.0, 1.0, 2.0]))
    assert np.array_equal(out, [1.0, 2.0, 5.0])


def test_eval_domain_errors_name_subexpression():
    with pytest.raises(EvalDomainError) as err:
        ex.eval_expr(ex.parse_expr("log(x)"), -1.0)
    assert "log" in str(err.value)
    with pytest.raises(EvalDomainError):
        ex.eval_expr(ex.parse_expr("1/x"), 0.0)
    with pytest.raises(EvalDomainError):
        ex.eval_expr(ex.parse_expr("sqrt(x)"), -2.0)
    with pytest.raises(EvalDomainError):
        ex.eval_expr(ex.parse_expr("x^0.5"), -1.0)


def test_eval_is_pure():
    e = ex.parse_expr("sin(exp(x)) - x^3/7")
    xs = np.linspace(-1, 1, 17)
    assert np.array_equal(ex.eval_expr(e, xs), ex.eval_expr(e, xs))


def test_diff_examples():
    d = ex.diff_expr(ex.parse_expr("x^2"))
    for x in (0.0, 1.5, -2.0):
        assert ex.eval_expr(d, x) == pytest.approx(2 * x, abs=1e-14)
    d = ex.diff_expr(ex.parse_expr("sin(pi*x)"))
    for x in (0.0, 0.3, 0.7):
        assert ex.eval_expr(d, x) == pytest.approx(np.pi * np.cos(np.pi * x), rel=1e-14)
    d = ex.diff_expr(ex.parse_expr("exp(-x)"))
    assert ex.eval_expr(d, 1.0) == pytest.approx(-np.exp(-1.0), rel=1e-15)


def test_diff_abs_undefined_at_zero():
    d = ex.diff_expr(ex.parse_expr("abs(x)"))
    assert ex.eval_expr(d, 2.0) == 1.0
    assert ex.eval_expr(d, -2.0) == -1.0
    with pytest.raises(EvalDomainError):
        ex.eval_expr(d, 0.0)


def test_constant_folding_literal_subtrees_only():
    folded = ex.fold_constants(ex.parse_expr("2*3 + x"))
    assert folded == ex.add(ex.num(6.0), ex.X)
    # x-dependent parts stay untouched
    assert ex.fold_constants(ex.parse_expr("2*x")) == ex.parse_expr("2*x")


# -- randomized properties --------------------------------------------------

_FUNCS = ("sin", "cos", "exp", "sqrt", "log", "tan")


def _random_expr(rng, depth):
    if depth == 0:
        pick = rng.integers(0, 3)
        if pick == 0:
            return ex.num(round(float(rng.uniform(0.4, 1.6)), 3))
        if pick == 1:
            return ex.X
        return ex.PI
    pick = rng.integers(0, 7)
    if pick <= 3:
        op = "+-*/"[pick]
        return ex.Expr(op, (_random_expr(rng, depth - 1),
                            _random_expr(rng, depth - 1)))
    if pick == 4:
        return ex.powc(_random_expr(rng, depth - 1), float(rng.integers(2, 4)))
    if pick == 5:
        return ex.neg(_random_expr(rng, depth - 1))
    name = _FUNCS[rng.integers(0, len(_FUNCS))]
    return ex.func(name, _random_expr(rng, depth - 1))


def _sample_exprs(count, rng, points):
    """Expressions evaluable (and modest in size) on the stencil around
    every sample point; rejection keeps the draw deterministic."""
    out = []
    stencil = np.concatenate([points - 1e-6, points, points + 1e-6])
    while len(out) < count:
        e = _random_expr(rng, int(rng.integers(1, 4)))
        try:
            vals = ex.eval_expr(e, stencil)
            dvals = ex.eval_expr(ex.diff_expr(e), stencil)
        except EvalDomainError:
            continue
        if not (np.all(np.isfinite(vals)) and np.all(np.isfinite(dvals))):
            continue
        if np.max(np.abs(vals)) > 50 or np.max(np.abs(dvals)) > 500:
            continue
        out.append(e)
    return out


def test_derivative_matches_central_difference():
    rng = np.random.default_rng(20240817)
    points = rng.uniform(0.15, 0.85, size=10)
    for e in _sample_exprs(100, rng, points):
        d = ex.diff_expr(e)
        for x in points:
            sym = ex.eval_expr(d, float(x))
            fd = central_difference(lambda t: ex.eval_expr(e, t), float(x))
            value = ex.eval_expr(e, float(x))
            assert abs(sym - fd) <= 1e-6 * (1.0 + abs(value)), ex.pretty(e)


def test_parse_pretty_parse_roundtrip():
    rng = np.random.default_rng(7)
    points = rng.uniform(0.2, 0.8, size=4)
    for e in _sample_exprs(100, rng, points):
        text = ex.pretty(e)
        tree = ex.parse_expr(text)
        assert ex.parse_expr(ex.pretty(tree)) == tree
        # and the printed form evaluates identically
        x = float(points[0])
        assert ex.eval_expr(tree, x) == ex.eval_expr(e, x)
