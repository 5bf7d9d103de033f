"""Expression trees: parsing, evaluation, complexity, simplification.

The fixture formulas below are the published joint-2 friction models this
project reproduces; their values at spot-check points and their complexity
under the adopted counting convention are frozen from independent
hand/`math`-module computations.
"""
from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from fricsym import expr as ex
from fricsym.expr import ArityError, Binary, Const, ParseError, Unary, Var

from conftest import expr_trees, small_floats

# ---------------------------------------------------------------------------
# fixture formulas (feature order: x0 = qdot, x1 = sgn(qdot),
#                                  x2 = tau_g, x3 = sgn(tau_g))

PARFAM_J2 = (
    "(3.66*x0 + 8.52*x1 - 0.44)"
    " * exp(-0.78*x0^2 + 1.26*abs(x0) + 0.02*x0 - 0.02*x1)"
)
PYSR_J2 = "-4.283*x0^4*x1 + (8.452 - 0.215*x1)*(1.842*x0 + x1 - 0.049)"
UDSR_J2 = (
    "-8.083*x0^3 + 4.643*x0^2*x1 - 0.068*x0^2 - 0.639*abs(x0) + 13.609*x0"
    " + 0.827*x1 + 0.827*x1 + exp(x0) + exp(exp(x1)) - 9.899"
)
LOAD_J2 = (
    "-1.12*x0^2 + 0.01*x0*x2 + 1.095*abs(x0) - 0.01*x0*x3 - 14.87*x0"
    " + 0.026*abs(x2) - 0.089*x2 - 0.154*x1*x3 + 7.162*x3 + 0.532"
    " + (-0.663*x0 + 0.014*x2 + 1.64*x1 - 4.245*x3 - 10.159*x1 - 0.226)"
    " * sqrt(abs(0.167*x0 - 0.076*x2 - 0.467*x1 + 2.687*x3))"
)

#: (formula, complexity, spot input row, frozen value)
FIXTURES = [
    (PARFAM_J2, 22, [0.2, 1.0, 0.0, 0.0], 10.814787698605626),
    (PYSR_J2, 16, [0.2, 1.0, 0.0, 0.0], 10.861045),
    (UDSR_J2, 37, [0.2, 1.0, 0.0, 0.0], 10.843000999639434),
    (LOAD_J2, 67, [0.1, 1.0, 1.0, 1.0], -13.08299374817733),
]


# ---------------------------------------------------------------------------
# node construction


def test_const_rejects_non_finite():
    with pytest.raises(ValueError):
        Const(float("nan"))
    with pytest.raises(ValueError):
        Const(float("inf"))


def test_var_rejects_bad_index():
    with pytest.raises(ValueError):
        Var(-1)
    with pytest.raises(ValueError):
        Var(1.5)


def test_unary_validation():
    with pytest.raises(ValueError):
        Unary("cos", Var(0))
    with pytest.raises(ValueError):
        Unary("pow", Var(0))  # missing exponent
    with pytest.raises(ValueError):
        Unary("abs", Var(0), exponent=2.0)


def test_binary_validation():
    with pytest.raises(ValueError):
        Binary("mod", Var(0), Var(1))


def test_nodes_are_immutable_and_hashable():
    e = Binary("add", Var(0), Const(1.0))
    with pytest.raises(Exception):
        e.op = "mul"
    assert hash(e) == hash(Binary("add", Var(0), Const(1.0)))


# ---------------------------------------------------------------------------
# parsing and formatting


def test_parse_simple():
    assert ex.parse("x0 + 1") == Binary("add", Var(0), Const(1.0))
    assert ex.parse("2*x0 + 3*sgn(x0)") == Binary(
        "add",
        Binary("mul", Const(2.0), Var(0)),
        Binary("mul", Const(3.0), Unary("sign", Var(0))),
    )


def test_parse_aliases_and_unicode():
    assert ex.parse("sign(x0)") == ex.parse("sgn(x0)")
    assert ex.parse("|x1|") == Unary("abs", Var(1))
    assert ex.parse("x0**2") == ex.parse("x0^2")
    assert ex.parse("2·x0") == ex.parse("2*x0")
    assert ex.parse("2×x0") == ex.parse("2*x0")
    assert ex.parse("−x0") == ex.parse("-x0")


def test_parse_precedence():
    e = ex.parse("1 + 2*x0^2")
    assert e == Binary(
        "add", Const(1.0), Binary("mul", Const(2.0), Unary("pow", Var(0), 2.0))
    )
    # unary minus binds looser than power: -x0^2 is -(x0^2)
    m = ex.parse("-x0^2")
    assert m == Unary("neg", Unary("pow", Var(0), 2.0))


def test_parse_negative_numbers_fold():
    assert ex.parse("-3.5") == Const(-3.5)
    assert ex.parse("x0 - -2") == Binary("sub", Var(0), Const(-2.0))


def test_parse_errors_carry_offsets():
    with pytest.raises(ParseError) as ei:
        ex.parse("x0 + @")
    assert ei.value.offset == 5
    with pytest.raises(ParseError):
        ex.parse("foo(x0)")
    with pytest.raises(ParseError):
        ex.parse("(x0 + 1")
    with pytest.raises(ParseError):
        ex.parse("x0 ^ x1")  # exponent must be a constant
    with pytest.raises(ParseError):
        ex.parse("|x0")
    with pytest.raises(ParseError):
        ex.parse("")


def test_format_round_trips_structure():
    for text, _, _, _ in FIXTURES:
        tree = ex.parse(text)
        again = ex.parse(ex.format_expr(tree))
        X = np.random.default_rng(0).uniform(-2, 2, size=(64, 4))
        np.testing.assert_array_equal(ex.evaluate(tree, X), ex.evaluate(again, X))


def test_format_minimal_parentheses():
    assert ex.format_expr(ex.parse("x0 + x1*x2")) == "x0 + x1*x2"
    assert ex.format_expr(ex.parse("(x0 + x1)*x2")) == "(x0 + x1)*x2"
    assert ex.format_expr(ex.parse("x0 - (x1 - x2)")) == "x0 - (x1 - x2)"


# ---------------------------------------------------------------------------
# evaluation semantics


def test_sign_zero_is_zero():
    out = ex.evaluate(ex.parse("sgn(x0)"), np.array([[0.0], [2.0], [-2.0]]))
    np.testing.assert_array_equal(out, [0.0, 1.0, -1.0])


def test_sqrt_is_protected():
    out = ex.evaluate(ex.parse("sqrt(x0)"), np.array([[-4.0], [4.0]]))
    np.testing.assert_array_equal(out, [2.0, 2.0])


def test_division_propagates_non_finite():
    out = ex.evaluate(ex.parse("x0/x1"), np.array([[1.0, 0.0], [0.0, 0.0]]))
    assert np.isinf(out[0]) and np.isnan(out[1])


def test_arity_error():
    with pytest.raises(ArityError):
        ex.evaluate(ex.parse("x3"), np.zeros((4, 2)))


def test_one_dimensional_inputs_are_a_single_column():
    out = ex.evaluate(ex.parse("2*x0"), np.array([1.0, 2.0]))
    np.testing.assert_array_equal(out, [2.0, 4.0])


@pytest.mark.parametrize("text,cx,row,value", FIXTURES)
def test_fixture_values(text, cx, row, value):
    got = ex.evaluate(ex.parse(text), np.array([row]))[0]
    assert got == pytest.approx(value, abs=1e-12)


# ---------------------------------------------------------------------------
# complexity


@pytest.mark.parametrize("text,cx,row,value", FIXTURES)
def test_fixture_complexity(text, cx, row, value):
    assert ex.complexity(ex.parse(text)) == cx


def test_complexity_counting_convention():
    assert ex.complexity(Const(3.2)) == 0  # constants are free
    assert ex.complexity(ex.parse("x0 + 1")) == 2  # one read, one add
    assert ex.complexity(ex.parse("2*x0 + 3*sgn(x0)")) == 6
    assert ex.complexity(ex.parse("-x0")) == 1  # negation is free
    assert ex.complexity(ex.parse("x0^2")) == 3  # power counts two


# ---------------------------------------------------------------------------
# simplification rewrites


@pytest.mark.parametrize(
    "before,after",
    [
        ("x0 + 0", "x0"),
        ("0 + x0", "x0"),
        ("x0 - 0", "x0"),
        ("0 - x0", "-x0"),
        ("x0 - x0", "0.0"),
        ("1*x0", "x0"),
        ("x0*1", "x0"),
        ("0*x0", "0.0"),
        ("-1*x0", "-x0"),
        ("x0/1", "x0"),
        ("--x0", "x0"),
        ("sgn(sgn(x0))", "sgn(x0)"),
        ("abs(abs(x0))", "abs(x0)"),
        ("abs(-x0)", "abs(x0)"),
        ("sqrt(abs(x0))", "sqrt(x0)"),
        ("sqrt(-x0)", "sqrt(x0)"),
        ("abs(sqrt(x0))", "sqrt(x0)"),
        ("x0^1", "x0"),
        ("x0^0", "1.0"),
        ("2 + 3*4", "14.0"),
        ("exp(0)", "1.0"),
        ("x0 + 2*x0", "3.0*x0"),
        ("2*x0 + x0 - 3*x0", "0.0"),
        ("x0 + x1 + x0", "2.0*x0 + x1"),
    ],
)
def test_simplify_rewrites(before, after):
    assert ex.simplify(ex.parse(before)) == ex.parse(after)


def test_simplify_keeps_overflowing_fold():
    # exp(1000) overflows; the node must survive un-folded
    e = ex.parse("exp(1000)")
    assert ex.simplify(e) == e


def test_simplify_collection_requires_improvement():
    # x0 + x1 has nothing to merge and must come back unchanged
    e = ex.parse("x0 + x1")
    assert ex.simplify(e) == e


# ---------------------------------------------------------------------------
# JSON wire format


def test_json_round_trip_fixtures():
    for text, _, _, _ in FIXTURES:
        tree = ex.parse(text)
        assert ex.from_json(ex.to_json(tree)) == tree


def test_json_rejects_malformed():
    with pytest.raises(ValueError):
        ex.from_json({"oops": 1})
    with pytest.raises(ValueError):
        ex.from_json({"op": "add", "args": [{"var": 0}]})
    with pytest.raises(ValueError):
        ex.from_json({"op": "cos", "args": [{"var": 0}]})
    with pytest.raises(ValueError):
        ex.from_json([1, 2])


# ---------------------------------------------------------------------------
# node surgery and constants


def test_get_and_replace_node_preorder():
    e = ex.parse("x0 + 2*x1")
    assert ex.get_node(e, 0) == e
    assert ex.get_node(e, 1) == Var(0)
    assert ex.get_node(e, 3) == Const(2.0)
    swapped = ex.replace_node(e, 3, Const(5.0))
    assert swapped == ex.parse("x0 + 5*x1")
    with pytest.raises(IndexError):
        ex.get_node(e, 99)
    with pytest.raises(IndexError):
        ex.replace_node(e, 99, Var(0))


def test_constants_round_trip():
    e = ex.parse("2*x0 + sgn(x0)*0.5")
    consts = ex.collect_constants(e)
    assert consts == [2.0, 0.5]
    e2 = ex.with_constants(e, [3.0, 1.5])
    assert ex.collect_constants(e2) == [3.0, 1.5]
    with pytest.raises(ValueError):
        ex.with_constants(e, [1.0])


def test_power_exponents_are_structural_not_constants():
    e = ex.parse("x0^2 + 1")
    assert ex.collect_constants(e) == [1.0]


# ---------------------------------------------------------------------------
# function sets and random generation


def test_function_set_default_excludes_division():
    assert "div" not in ex.FunctionSet.default().binary
    assert "div" in ex.FunctionSet.default(allow_division=True).binary


def test_function_set_contains():
    fset = ex.FunctionSet.default()
    assert fset.contains(ex.parse("exp(x0) + x1^2"))
    assert not fset.contains(ex.parse("x0/x1"))
    assert not fset.contains(ex.parse("x0^7"))


def test_function_set_rejects_bad_names():
    with pytest.raises(ValueError):
        ex.FunctionSet(unary=("cos",))
    with pytest.raises(ValueError):
        ex.FunctionSet(powers=(1,))


def test_random_expr_is_deterministic_and_within_depth():
    a = ex.random_expr(np.random.default_rng(5), max_depth=4, arity=2)
    b = ex.random_expr(np.random.default_rng(5), max_depth=4, arity=2)
    assert a == b
    for seed in range(50):
        e = ex.random_expr(np.random.default_rng(seed), max_depth=4, arity=3)
        assert ex.depth(e) <= 4
        assert ex.FunctionSet.default().contains(e)


# ---------------------------------------------------------------------------
# invariant suites (1000 cases each)

eval_inputs = st.lists(
    st.lists(st.floats(-2, 2, allow_nan=False), min_size=2, max_size=2),
    min_size=1,
    max_size=4,
)


@settings(settings.get_profile("bulk"))
@given(expr_trees(), eval_inputs)
def test_invariant_evaluation_purity(tree, rows):
    X = np.asarray(rows)
    a = ex.evaluate(tree, X)
    b = ex.evaluate(tree, X)
    assert np.array_equal(a, b, equal_nan=True)


@settings(settings.get_profile("bulk"))
@given(expr_trees(), eval_inputs)
def test_invariant_simplify_soundness(tree, rows):
    X = np.asarray(rows)
    a = ex.evaluate(tree, X)
    b = ex.evaluate(ex.simplify(tree), X)
    both = np.isfinite(a) & np.isfinite(b)
    assert np.all(np.abs(a[both] - b[both]) <= 1e-9)


@settings(settings.get_profile("bulk"))
@given(expr_trees())
def test_invariant_simplify_never_grows(tree):
    assert ex.complexity(ex.simplify(tree)) <= ex.complexity(tree)


@settings(settings.get_profile("bulk"))
@given(expr_trees())
def test_invariant_complexity_monotone_in_subtrees(tree):
    total = ex.complexity(tree)
    for node in ex.iter_nodes(tree):
        assert ex.complexity(node) <= total


@settings(settings.get_profile("bulk"))
@given(expr_trees(), eval_inputs)
def test_invariant_parse_format_round_trip(tree, rows):
    X = np.asarray(rows)
    again = ex.parse(ex.format_expr(tree))
    a = ex.evaluate(tree, X)
    b = ex.evaluate(again, X)
    both = np.isfinite(a) & np.isfinite(b)
    assert np.all(np.abs(a[both] - b[both]) <= 1e-12)
    assert np.array_equal(np.isfinite(a), np.isfinite(b))


@settings(settings.get_profile("bulk"))
@given(small_floats)
def test_invariant_sign_and_sqrt_conventions(x):
    X = np.array([[x], [-x], [0.0]])
    s = ex.evaluate(ex.parse("sgn(x0)"), X)
    assert s[2] == 0.0
    assert s[0] == -s[1]
    r = ex.evaluate(ex.parse("sqrt(x0)"), X)
    assert r[0] == r[1]  # even in its argument
    assert r[0] == math.sqrt(abs(x))
