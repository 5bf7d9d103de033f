"""Continuous symbolic regression: structures, evaluation, fitting, extraction.

The invariant suites at the bottom pin the library-level guarantees: the
extracted tree agrees with the parametric evaluator, sparsification never adds
coefficients back, the linear subcase reproduces ordinary least squares, and
odd-parity structures are odd functions for every theta.
"""
from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fricsym import expr as ex
from fricsym.errors import MismatchError
from fricsym.parfam import (
    BASE_FUNCTIONS,
    EXP_CLAMP,
    ParFamFitConfig,
    ParFamStructure,
    RationalSpec,
    default_friction_structure,
    monomial_exponents,
    parfam_eval,
    parfam_extract,
    parfam_fit,
    parfam_loss,
)

# ---------------------------------------------------------------------------
# monomial enumeration


def test_monomial_exponents_graded_order():
    rows = monomial_exponents(2, 2)
    assert rows.tolist() == [[0, 0], [1, 0], [0, 1], [2, 0], [1, 1], [0, 2]]


def test_monomial_exponents_odd_parity():
    rows = monomial_exponents(1, 3, parity="odd")
    assert rows.tolist() == [[1], [3]]


def test_monomial_exponents_even_parity_keeps_constant():
    rows = monomial_exponents(2, 2, parity="even")
    assert rows.tolist() == [[0, 0], [2, 0], [1, 1], [0, 2]]


def test_monomial_exponents_without_constant():
    rows = monomial_exponents(2, 1, include_constant=False)
    assert rows.tolist() == [[1, 0], [0, 1]]


def test_monomial_exponents_empty():
    rows = monomial_exponents(2, 0, include_constant=False)
    assert rows.shape == (0, 2)


def test_monomial_count_matches_binomial():
    # all monomials of total degree <= d in n variables: C(n + d, d)
    for n, d in [(1, 3), (2, 2), (3, 2), (4, 2), (6, 2)]:
        assert monomial_exponents(n, d).shape == (math.comb(n + d, d), n)


# ---------------------------------------------------------------------------
# specs and structures


def test_rational_spec_validation():
    with pytest.raises(ValueError):
        RationalSpec(-1)
    with pytest.raises(ValueError):
        RationalSpec(1, -2)
    with pytest.raises(ValueError):
        RationalSpec(1, 0, parity="sideways")


def test_structure_validation():
    with pytest.raises(ValueError):
        ParFamStructure(arity=0, base_fns=(), inner=(), outer=RationalSpec(1))
    with pytest.raises(ValueError):
        ParFamStructure(
            arity=1, base_fns=("exp",), inner=(), outer=RationalSpec(1)
        )
    with pytest.raises(ValueError):
        ParFamStructure(
            arity=1,
            base_fns=("tanh",),
            inner=(RationalSpec(1),),
            outer=RationalSpec(1),
        )


def test_default_friction_structure_shape():
    S = default_friction_structure(4)
    assert S.k == 2
    assert not S.is_linear
    # inner blocks see 4 variables, the outer block sees 4 + 2
    assert S.n_coefficients == 15 + 15 + 28
    assert [b[0] for b in S.blocks()] == ["inner0", "inner1", "outer"]


def test_structure_linear_flag():
    lin = ParFamStructure(arity=2, base_fns=(), inner=(), outer=RationalSpec(2))
    assert lin.is_linear
    rational = ParFamStructure(
        arity=2, base_fns=(), inner=(), outer=RationalSpec(2, den_degree=1)
    )
    assert not rational.is_linear


def test_structure_dict_round_trip():
    S = default_friction_structure(3)
    again = ParFamStructure.from_dict(S.to_dict())
    assert again == S


# ---------------------------------------------------------------------------
# evaluation


def _exp_demo_structure() -> ParFamStructure:
    return ParFamStructure(
        arity=1,
        base_fns=("exp",),
        inner=(RationalSpec(1),),
        outer=RationalSpec(1),
    )


def test_eval_matches_hand_formula():
    S = _exp_demo_structure()
    assert S.n_coefficients == 5
    theta = np.array([0.5, -1.0, 2.0, 3.0, -0.25])
    x = np.array([-1.0, 0.0, 2.0])
    got = parfam_eval(S, theta, x)
    z = np.exp(0.5 - 1.0 * x)
    np.testing.assert_allclose(got, 2.0 + 3.0 * x - 0.25 * z, rtol=1e-12)


def test_eval_rational_block():
    S = ParFamStructure(
        arity=1, base_fns=(), inner=(), outer=RationalSpec(1, den_degree=2)
    )
    theta = np.array([1.0, 2.0, 0.5, 0.25])  # (1 + 2x) / (1 + 0.5x + 0.25x^2)
    x = np.array([0.0, 1.0, -2.0])
    got = parfam_eval(S, theta, x)
    np.testing.assert_allclose(got, [1.0, 3.0 / 1.75, -3.0], rtol=1e-12)


def test_eval_exp_clamp():
    S = _exp_demo_structure()
    theta = np.array([0.0, 100.0, 0.0, 0.0, 1.0])  # exp(100 x)
    x = np.array([10.0])
    clamped = parfam_eval(S, theta, x)
    np.testing.assert_allclose(clamped, np.exp(EXP_CLAMP))
    assert not np.isfinite(parfam_eval(S, theta, x, clamp_exp=False))[0]


def test_eval_validation():
    S = _exp_demo_structure()
    with pytest.raises(ValueError):
        parfam_eval(S, np.zeros(4), np.array([1.0]))
    with pytest.raises(MismatchError):
        parfam_eval(S, np.zeros(5), np.zeros((3, 2)))


def test_loss_adds_l1_penalty():
    S = ParFamStructure(arity=1, base_fns=(), inner=(), outer=RationalSpec(1))
    theta = np.array([1.0, -2.0])
    x = np.array([0.0, 1.0])
    y = np.array([0.0, 0.0])
    mse = np.mean((1.0 - 2.0 * x - y) ** 2)
    assert parfam_loss(S, theta, x, y, lam=0.0) == pytest.approx(mse)
    assert parfam_loss(S, theta, x, y, lam=0.1) == pytest.approx(mse + 0.3)


def test_loss_infinite_when_prediction_blows_up():
    S = ParFamStructure(
        arity=1, base_fns=(), inner=(), outer=RationalSpec(1, den_degree=1)
    )
    theta = np.array([1.0, 0.0, -1.0])  # denominator 1 - x hits zero at x=1
    assert parfam_loss(S, theta, np.array([1.0]), np.array([0.0]), 0.0) == math.inf


# ---------------------------------------------------------------------------
# fit configuration


def test_fit_config_validation():
    with pytest.raises(ValueError):
        ParFamFitConfig(lam=-1.0)
    with pytest.raises(ValueError):
        ParFamFitConfig(thresholds=(0.1, 0.01))
    with pytest.raises(ValueError):
        ParFamFitConfig(thresholds=(0.0, 0.1))
    with pytest.raises(ValueError):
        ParFamFitConfig(val_fraction=1.0)
    with pytest.raises(ValueError):
        ParFamFitConfig(degrade_tol=-0.1)


def test_fit_config_round_trip():
    cfg = ParFamFitConfig(lam=0.01, thresholds=(0.01, 0.1), seed=7)
    again = ParFamFitConfig.from_dict(cfg.to_dict())
    assert again == cfg
    assert isinstance(again.thresholds, tuple)


# ---------------------------------------------------------------------------
# fitting


def test_fit_rejects_empty_data():
    S = ParFamStructure(arity=1, base_fns=(), inner=(), outer=RationalSpec(1))
    with pytest.raises(ValueError):
        parfam_fit(np.zeros((0, 1)), np.zeros(0), S)


def test_fit_recovers_sparse_cubic():
    S = ParFamStructure(arity=1, base_fns=(), inner=(), outer=RationalSpec(3))
    rng = np.random.default_rng(5)
    x = rng.uniform(-2.0, 2.0, 80)
    y = 0.5 * x**3 - 1.25 * x
    theta, report = parfam_fit(x, y, S, ParFamFitConfig(seed=1))
    assert report.n_nonzero == 2
    assert report.mse < 1e-12
    np.testing.assert_allclose(
        parfam_eval(S, theta, x), y, rtol=0, atol=1e-6
    )
    tree = parfam_extract(S, theta)
    np.testing.assert_allclose(
        ex.evaluate(tree, x.reshape(-1, 1)), y, rtol=0, atol=1e-6
    )


def test_fit_nonlinear_path_runs_and_is_deterministic():
    S = _exp_demo_structure()
    rng = np.random.default_rng(9)
    x = rng.uniform(-1.0, 1.0, 40)
    y = np.exp(0.8 * x)
    cfg = ParFamFitConfig(
        bh_iterations=8, bh_local_budget=300, finetune_budget=400, seed=3
    )
    theta_a, report_a = parfam_fit(x, y, S, cfg)
    theta_b, _ = parfam_fit(x, y, S, cfg)
    np.testing.assert_array_equal(theta_a, theta_b)
    assert math.isfinite(report_a.mse) and report_a.mse >= 0.0
    assert report_a.n_nonzero == int(np.count_nonzero(theta_a))
    for entry in report_a.history:
        assert set(entry) == {"threshold", "n_nonzero", "val_mse", "accepted"}


# ---------------------------------------------------------------------------
# extraction


def test_extract_rational_matches_eval():
    S = ParFamStructure(
        arity=1, base_fns=(), inner=(), outer=RationalSpec(1, den_degree=2)
    )
    theta = np.array([1.0, 2.0, 0.5, 0.25])
    tree = parfam_extract(S, theta)
    x = np.array([0.0, 1.0, -2.0, 0.3])
    np.testing.assert_allclose(
        ex.evaluate(tree, x.reshape(-1, 1)),
        parfam_eval(S, theta, x, clamp_exp=False),
        rtol=1e-12,
    )


def test_extract_drops_tiny_coefficients():
    S = ParFamStructure(arity=1, base_fns=(), inner=(), outer=RationalSpec(1))
    tree = parfam_extract(S, np.array([1.0, 1e-8]))
    assert tree == ex.Const(1.0)


def test_extract_all_zero_theta():
    S = _exp_demo_structure()
    tree = parfam_extract(S, np.zeros(5))
    assert tree == ex.Const(0.0)


def test_extract_validates_theta_length():
    S = _exp_demo_structure()
    with pytest.raises(ValueError):
        parfam_extract(S, np.zeros(4))


def test_extract_groups_inner_function_powers():
    # outer degree 2 over (x, z): z and z^2 each appear once in the tree
    S = ParFamStructure(
        arity=1,
        base_fns=("abs",),
        inner=(RationalSpec(1),),
        outer=RationalSpec(2),
    )
    theta = np.ones(S.n_coefficients)
    text = ex.format_expr(parfam_extract(S, theta))
    assert text.count("abs") == 2  # one per power of z, not one per monomial


# ---------------------------------------------------------------------------
# invariants: eval/extract consistency


@st.composite
def _poly_structures(draw):
    arity = draw(st.integers(1, 2))
    k = draw(st.integers(0, 2))
    fns = tuple(draw(st.sampled_from(BASE_FUNCTIONS)) for _ in range(k))
    inner = tuple(RationalSpec(draw(st.integers(1, 2))) for _ in range(k))
    outer = RationalSpec(draw(st.integers(1, 2)))
    return ParFamStructure(arity=arity, base_fns=fns, inner=inner, outer=outer)


@st.composite
def _structure_cases(draw):
    S = draw(_poly_structures())
    coeff = st.floats(-0.5, 0.5, allow_nan=False)
    theta = np.asarray(draw(st.lists(coeff, min_size=S.n_coefficients,
                                     max_size=S.n_coefficients)))
    point = st.floats(-1.0, 1.0, allow_nan=False)
    rows = draw(st.lists(st.lists(point, min_size=S.arity, max_size=S.arity),
                         min_size=1, max_size=3))
    return S, theta, np.asarray(rows)


@settings(settings.get_profile("bulk"))
@given(_structure_cases())
def test_invariant_extracted_tree_matches_eval(case):
    S, theta, X = case
    direct = parfam_eval(S, theta, X, clamp_exp=False)
    tree_vals = ex.evaluate(parfam_extract(S, theta, zero_tol=0.0), X)
    assert np.all(
        np.abs(tree_vals - direct) <= 1e-9 * np.maximum(1.0, np.abs(direct))
    )


# ---------------------------------------------------------------------------
# invariants: sparsification never adds coefficients back


@st.composite
def _linear_fit_cases(draw):
    arity = draw(st.integers(1, 2))
    degree = draw(st.integers(1, 3))
    S = ParFamStructure(arity=arity, base_fns=(), inner=(), outer=RationalSpec(degree))
    seed = draw(st.integers(0, 2**16))
    return S, seed


@settings(settings.get_profile("bulk"))
@given(_linear_fit_cases())
def test_invariant_sparsification_monotone(case):
    S, seed = case
    rng = np.random.default_rng(seed)
    X = rng.uniform(-2.0, 2.0, (30, S.arity))
    true_theta = np.where(
        rng.random(S.n_coefficients) < 0.4,
        rng.uniform(-3.0, 3.0, S.n_coefficients),
        0.0,
    )
    y = parfam_eval(S, true_theta, X) + rng.normal(0.0, 0.05, 30)
    theta, report = parfam_fit(X, y, S, ParFamFitConfig(seed=seed))
    counts = [h["n_nonzero"] for h in report.history]
    assert all(a >= b for a, b in zip(counts, counts[1:]))
    assert report.n_nonzero == int(np.count_nonzero(theta))
    assert report.n_nonzero <= S.n_coefficients
    assert math.isfinite(report.mse)


# ---------------------------------------------------------------------------
# invariants: the linear subcase is ordinary least squares


@settings(settings.get_profile("bulk"))
@given(_linear_fit_cases())
def test_invariant_linear_fit_is_least_squares(case):
    S, seed = case
    rng = np.random.default_rng(seed)
    X = rng.uniform(-2.0, 2.0, (30, S.arity))
    y = rng.normal(0.0, 2.0, 30)
    cfg = ParFamFitConfig(thresholds=(), val_fraction=0.0, seed=seed)
    theta, _ = parfam_fit(X, y, S, cfg)
    exps = monomial_exponents(S.arity, S.outer.num_degree)
    A = np.column_stack([np.prod(X**e, axis=1) for e in exps])
    oracle = np.linalg.solve(A.T @ A, A.T @ y)
    np.testing.assert_allclose(theta, oracle, rtol=0, atol=1e-6)


# ---------------------------------------------------------------------------
# invariants: odd-parity structures are odd functions


@st.composite
def _odd_cases(draw):
    arity = draw(st.integers(1, 2))
    degree = draw(st.sampled_from([1, 3]))
    S = ParFamStructure(
        arity=arity, base_fns=(), inner=(),
        outer=RationalSpec(degree, parity="odd"),
    )
    coeff = st.floats(-5.0, 5.0, allow_nan=False)
    theta = np.asarray(draw(st.lists(coeff, min_size=S.n_coefficients,
                                     max_size=S.n_coefficients)))
    point = st.floats(-3.0, 3.0, allow_nan=False)
    rows = draw(st.lists(st.lists(point, min_size=arity, max_size=arity),
                         min_size=1, max_size=3))
    return S, theta, np.asarray(rows)


@settings(settings.get_profile("bulk"))
@given(_odd_cases())
def test_invariant_odd_parity_gives_odd_function(case):
    S, theta, X = case
    assert np.array_equal(
        parfam_eval(S, theta, -X), -parfam_eval(S, theta, X)
    )
