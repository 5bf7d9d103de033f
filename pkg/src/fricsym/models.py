"""Friction predictors over joint datasets.

Every model exposes ``features`` (the canonical feature names it reads),
``predict(ds)`` returning the friction estimate per sample, ``expr()``
returning an equivalent expression tree over those features, and a JSON
representation.  ``formula``/``complexity`` derive from the tree, so a
report's complexity column always matches the printed formula.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

from . import data as dt
from . import expr as ex
from . import gp as gp_engine
from . import parfam as pf
from .baseline import (
    AsymmetricStribeck,
    StribeckParams,
    asymmetric_eval,
    stribeck_eval,
    stribeck_expr,
)
from .errors import InputError, MismatchError
from .util import read_json, write_json


def _check_arity(tree: ex.Expr, features: tuple[str, ...]) -> None:
    for node in ex.iter_nodes(tree):
        if isinstance(node, ex.Var) and node.index >= len(features):
            raise MismatchError(
                f"formula reads x{node.index} but only {len(features)} "
                f"features are declared: {features}"
            )


def _remap_vars(tree: ex.Expr, old: tuple[str, ...], new: tuple[str, ...]) -> ex.Expr:
    """Rewrite variable indices from one feature ordering to another."""
    def rebuild(e: ex.Expr) -> ex.Expr:
        if isinstance(e, ex.Var):
            return ex.Var(new.index(old[e.index]))
        if isinstance(e, ex.Unary):
            return ex.Unary(e.fn, rebuild(e.child), e.exponent)
        if isinstance(e, ex.Binary):
            return ex.Binary(e.op, rebuild(e.left), rebuild(e.right))
        return e

    return rebuild(tree)


@dataclass(frozen=True)
class ExprModel:
    """A symbolic formula over a declared feature set."""

    tree: ex.Expr
    features: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "features", dt.normalize_features(self.features))
        _check_arity(self.tree, self.features)

    def expr(self) -> ex.Expr:
        return self.tree

    def predict(self, ds: dt.JointDataset) -> np.ndarray:
        X = dt.feature_matrix(ds.qdot, ds.tau_g, self.features)
        return ex.evaluate(self.tree, X)

    @property
    def formula(self) -> str:
        return ex.format_expr(self.tree)

    @property
    def complexity(self) -> int:
        return ex.complexity(self.tree)

    def to_dict(self) -> dict:
        return {
            "kind": "expr",
            "features": list(self.features),
            "tree": ex.to_json(self.tree),
        }


@dataclass(frozen=True)
class SymmetricStribeckModel:
    params: StribeckParams

    features: tuple[str, ...] = ("qdot",)

    def expr(self) -> ex.Expr:
        return stribeck_expr(self.params)

    def predict(self, ds: dt.JointDataset) -> np.ndarray:
        return stribeck_eval(self.params, ds.qdot)

    @property
    def formula(self) -> str:
        return ex.format_expr(self.expr())

    @property
    def complexity(self) -> int:
        return ex.complexity(self.expr())

    def to_dict(self) -> dict:
        return {"kind": "stribeck_sym", "params": self.params.to_dict()}


@dataclass(frozen=True)
class AsymmetricStribeckModel:
    branches: AsymmetricStribeck

    features: tuple[str, ...] = ("qdot",)

    def expr(self) -> ex.Expr:
        """Single-tree equivalent of the two branches: each branch is gated
        by (1 +/- sgn(qdot)) / 2, which reproduces the zero value at rest."""
        v = ex.Var(0)
        gate_pos = ex.Binary("mul", ex.Const(0.5), ex.Binary("add", ex.Const(1.0), ex.Unary("sign", v)))
        gate_neg = ex.Binary("mul", ex.Const(0.5), ex.Binary("sub", ex.Const(1.0), ex.Unary("sign", v)))
        return ex.Binary(
            "add",
            ex.Binary("mul", gate_pos, stribeck_expr(self.branches.positive)),
            ex.Binary("mul", gate_neg, stribeck_expr(self.branches.negative)),
        )

    def predict(self, ds: dt.JointDataset) -> np.ndarray:
        return asymmetric_eval(self.branches, ds.qdot)

    @property
    def formula(self) -> str:
        return ex.format_expr(self.expr())

    @property
    def complexity(self) -> int:
        return ex.complexity(self.expr())

    def to_dict(self) -> dict:
        return {"kind": "stribeck_asym", **self.branches.to_dict()}


@dataclass(frozen=True)
class CombinedModel:
    """Base predictor plus an additive residual correction."""

    base: object
    residual: ExprModel

    @property
    def features(self) -> tuple[str, ...]:
        union = set(self.base.features) | set(self.residual.features)
        return tuple(f for f in dt.FEATURES if f in union)

    def expr(self) -> ex.Expr:
        feats = self.features
        return ex.Binary(
            "add",
            _remap_vars(self.base.expr(), tuple(self.base.features), feats),
            _remap_vars(self.residual.tree, self.residual.features, feats),
        )

    def predict(self, ds: dt.JointDataset) -> np.ndarray:
        return self.base.predict(ds) + self.residual.predict(ds)

    @property
    def formula(self) -> str:
        return ex.format_expr(self.expr())

    @property
    def complexity(self) -> int:
        return ex.complexity(self.expr())

    def to_dict(self) -> dict:
        return {
            "kind": "combined",
            "base": self.base.to_dict(),
            "residual": self.residual.to_dict(),
        }


# ---------------------------------------------------------------------------
# serialization


def model_from_dict(data: dict):
    if not isinstance(data, dict) or "kind" not in data:
        raise InputError("model JSON must be an object with a 'kind' entry")
    kind = data["kind"]
    try:
        if kind == "expr":
            return ExprModel(ex.from_json(data["tree"]), tuple(data["features"]))
        if kind == "stribeck_sym":
            return SymmetricStribeckModel(StribeckParams.from_dict(data["params"]))
        if kind == "stribeck_asym":
            return AsymmetricStribeckModel(AsymmetricStribeck.from_dict(data))
        if kind == "combined":
            residual = model_from_dict(data["residual"])
            if not isinstance(residual, ExprModel):
                raise InputError("combined model residual must be an expr model")
            return CombinedModel(model_from_dict(data["base"]), residual)
    except (KeyError, ValueError) as err:
        if isinstance(err, MismatchError):
            raise
        raise InputError(f"malformed {kind} model: {err}") from err
    raise InputError(f"unknown model kind {kind!r}")


def save_model(model, path):
    return write_json(path, model.to_dict())


def load_model(path):
    return model_from_dict(read_json(path))


# ---------------------------------------------------------------------------
# external torque


def external_torque(ds: dt.JointDataset, model) -> np.ndarray:
    """Quasi-static external-torque estimate: whatever the torque balance
    leaves after gravity and the friction estimate are removed."""
    return ds.tau_g - ds.tau_m - model.predict(ds)


# ---------------------------------------------------------------------------
# residual adaptation


def adapt_residual(
    base,
    ds: dt.JointDataset,
    engine: str = "parfam",
    features=dt.ADAPT_FEATURES,
    seed: int = 0,
    gp_config: gp_engine.GpConfig | None = None,
    parfam_config: pf.ParFamFitConfig | None = None,
    structure: pf.ParFamStructure | None = None,
) -> tuple[CombinedModel, dict]:
    """Fit an additive correction so that base + correction tracks the
    friction target of ``ds``.

    The correction may read gravity torque and the two sign features but
    never the velocity magnitude, which keeps it from re-learning the
    velocity-dependent friction the base model already captures.
    """
    names = dt.normalize_features(features)
    if "qdot" in names:
        raise MismatchError("residual features may not include qdot")
    if ds.tau_ext is not None and np.any(ds.tau_ext != 0):
        warnings.warn(
            "adaptation data contains external torque; the residual will absorb it",
            stacklevel=2,
        )
    residual = dt.friction_target(ds) - base.predict(ds)
    X = dt.feature_matrix(ds.qdot, ds.tau_g, names)

    if engine == "gp":
        cfg = gp_config or gp_engine.GpConfig()
        cfg = replace(cfg, seed=seed) if gp_config is None else cfg
        archive = gp_engine.evolve(X, residual, cfg)
        best = archive.best()
        tree = best.expr
        info = {"engine": "gp", "residual_mse": best.loss}
    elif engine == "parfam":
        struct = structure or pf.ParFamStructure(
            arity=len(names), base_fns=(), inner=(), outer=pf.RationalSpec(2, 0)
        )
        cfg = parfam_config or pf.ParFamFitConfig()
        cfg = replace(cfg, seed=seed) if parfam_config is None else cfg
        theta, report = pf.parfam_fit(X, residual, struct, cfg)
        tree = pf.parfam_extract(struct, theta)
        info = {"engine": "parfam", "residual_mse": report.mse,
                "n_nonzero": report.n_nonzero}
    else:
        raise InputError(f"unknown adaptation engine {engine!r} (use gp or parfam)")

    model = CombinedModel(base, ExprModel(ex.simplify(tree), names))
    return model, info
