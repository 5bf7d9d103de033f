"""Shared strategies and fixtures for the test suite."""
from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

from fricsym import expr as ex

settings.register_profile(
    "bulk",
    max_examples=1000,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.filter_too_much],
)

finite_floats = st.floats(
    min_value=-1e6, max_value=1e6, allow_nan=False, allow_infinity=False
)

small_floats = st.floats(
    min_value=-10, max_value=10, allow_nan=False, allow_infinity=False
)


def expr_trees(max_depth: int = 4, arity: int = 2) -> st.SearchStrategy[ex.Expr]:
    """Random expression trees over the default function set."""
    fset = ex.FunctionSet.default(allow_division=True)
    leaves = st.one_of(
        st.builds(ex.Const, small_floats),
        st.builds(ex.Var, st.integers(min_value=0, max_value=arity - 1)),
    )

    def extend(children):
        unary = st.builds(
            lambda fn_exp, c: ex.Unary(fn_exp[0], c, fn_exp[1]),
            st.sampled_from(fset.unary_choices()),
            children,
        )
        binary = st.builds(
            lambda op, l, r: ex.Binary(op, l, r),
            st.sampled_from(fset.binary),
            children,
            children,
        )
        return st.one_of(unary, binary)

    return st.recursive(leaves, extend, max_leaves=2 ** max_depth)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)
