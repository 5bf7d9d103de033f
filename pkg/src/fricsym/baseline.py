"""Static friction baselines: the Stribeck-curve model and its asymmetric
variant with separate parameter sets per velocity sign.

The symmetric model is

    tau_f(v) = sgn(v) * (F_c + (F_s - F_c) * exp(-|v / v_s|**delta_s)) + F_v * v

which is exactly zero at v == 0.  Fitting is multi-start basin hopping in a
log-scaled parameter space.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import expr as ex
from .errors import FitError
from .numopt import BIG, BasinHoppingConfig, Objective, basin_hopping

# fit box bounds
F_BOUNDS = (0.0, 1.0e4)      # F_c, F_s
FV_BOUNDS = (0.0, 1.0e3)     # F_v
VS_BOUNDS = (1.0e-3, 1.0e3)  # v_s (exclusive of zero)
DS_BOUNDS = (1.0e-2, 1.0e2)  # delta_s


@dataclass(frozen=True)
class StribeckParams:
    F_c: float
    F_s: float
    F_v: float
    v_s: float
    delta_s: float

    def __post_init__(self):
        for name in ("F_c", "F_s", "F_v", "v_s", "delta_s"):
            v = getattr(self, name)
            if not math.isfinite(float(v)):
                raise ValueError(f"{name} must be finite, got {v}")
            object.__setattr__(self, name, float(v))
        if self.v_s <= 0:
            raise ValueError(f"v_s must be positive, got {self.v_s}")
        if self.delta_s <= 0:
            raise ValueError(f"delta_s must be positive, got {self.delta_s}")

    def to_dict(self) -> dict:
        return {
            "F_c": self.F_c,
            "F_s": self.F_s,
            "F_v": self.F_v,
            "v_s": self.v_s,
            "delta_s": self.delta_s,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "StribeckParams":
        return cls(**{k: data[k] for k in ("F_c", "F_s", "F_v", "v_s", "delta_s")})


@dataclass(frozen=True)
class AsymmetricStribeck:
    positive: StribeckParams  # applies for qdot > 0
    negative: StribeckParams  # applies for qdot <= 0

    def to_dict(self) -> dict:
        return {"positive": self.positive.to_dict(), "negative": self.negative.to_dict()}

    @classmethod
    def from_dict(cls, data: dict) -> "AsymmetricStribeck":
        return cls(
            positive=StribeckParams.from_dict(data["positive"]),
            negative=StribeckParams.from_dict(data["negative"]),
        )


def stribeck_eval(params: StribeckParams, qdot) -> np.ndarray:
    v = np.asarray(qdot, dtype=float)
    with np.errstate(all="ignore"):
        decay = np.exp(-np.abs(v / params.v_s) ** params.delta_s)
        out = np.sign(v) * (params.F_c + (params.F_s - params.F_c) * decay) + params.F_v * v
    return out


def asymmetric_eval(model: AsymmetricStribeck, qdot) -> np.ndarray:
    v = np.asarray(qdot, dtype=float)
    return np.where(v > 0, stribeck_eval(model.positive, v), stribeck_eval(model.negative, v))


def stribeck_expr(params: StribeckParams) -> ex.Expr:
    """The fitted model as an expression over x0 = qdot."""
    v = ex.Var(0)
    decay = ex.Unary(
        "exp",
        ex.Unary(
            "neg",
            ex.Unary(
                "pow",
                ex.Unary("abs", ex.Binary("div", v, ex.Const(params.v_s))),
                params.delta_s,
            ),
        ),
    )
    core = ex.Binary(
        "add",
        ex.Const(params.F_c),
        ex.Binary("mul", ex.Binary("sub", ex.Const(params.F_s), ex.Const(params.F_c)), decay),
    )
    return ex.Binary(
        "add",
        ex.Binary("mul", ex.Unary("sign", v), core),
        ex.Binary("mul", ex.Const(params.F_v), v),
    )


def stribeck_template_expr() -> ex.Expr:
    """The model shape with its named parameters as symbolic leaves.

    ``x0`` is qdot, ``x1``..``x4`` stand for F_c, F_s, F_v and v_s (F_c is
    read twice); the exponent delta_s is carried by the power node itself.
    Intended for structural complexity reporting, not for evaluation.
    """
    v = ex.Var(0)
    f_c, f_s, f_v, v_s = ex.Var(1), ex.Var(2), ex.Var(3), ex.Var(4)
    decay = ex.Unary(
        "exp",
        ex.Unary(
            "neg",
            ex.Unary("pow", ex.Unary("abs", ex.Binary("div", v, v_s)), 2.0),
        ),
    )
    core = ex.Binary("add", f_c, ex.Binary("mul", ex.Binary("sub", f_s, f_c), decay))
    return ex.Binary(
        "add",
        ex.Binary("mul", ex.Unary("sign", v), core),
        ex.Binary("mul", f_v, v),
    )


def asymmetric_template_complexity() -> int:
    """Structural cost of the two-branch model: the sum over both branches."""
    return 2 * ex.complexity(stribeck_template_expr())


# ---------------------------------------------------------------------------
# fitting


@dataclass(frozen=True)
class BaselineFitConfig:
    n_starts: int = 8
    hops: int = 8
    step_size: float = 0.25
    temperature: float = 0.5
    local_budget: int = 900
    polish_budget: int = 2500
    seed: int = 0

    def to_dict(self) -> dict:
        from dataclasses import asdict

        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "BaselineFitConfig":
        return cls(**data)


# internal optimisation space: (F_c, F_s, F_v, log v_s, log delta_s)
_LOWER = np.array([F_BOUNDS[0], F_BOUNDS[0], FV_BOUNDS[0], math.log(VS_BOUNDS[0]), math.log(DS_BOUNDS[0])])
_UPPER = np.array([F_BOUNDS[1], F_BOUNDS[1], FV_BOUNDS[1], math.log(VS_BOUNDS[1]), math.log(DS_BOUNDS[1])])


def _decode(theta: np.ndarray) -> StribeckParams:
    return StribeckParams(
        F_c=theta[0], F_s=theta[1], F_v=theta[2],
        v_s=math.exp(theta[3]), delta_s=math.exp(theta[4]),
    )


def _mse(params: StribeckParams, v: np.ndarray, tau: np.ndarray) -> float:
    r = stribeck_eval(params, v) - tau
    with np.errstate(all="ignore"):
        return float(np.mean(r * r))


def fit_symmetric(qdot, tau_f, cfg: BaselineFitConfig | None = None) -> tuple[StribeckParams, float]:
    """Fit the symmetric Stribeck model; returns (params, mse).

    Multi-start basin hopping with log-uniform v_s initialisations; the
    returned parameters respect the documented box bounds.
    """
    v = np.asarray(qdot, dtype=float)
    tau = np.asarray(tau_f, dtype=float)
    if v.size == 0:
        raise FitError("empty data")
    if v.size < 10:
        raise FitError(f"need at least 10 points to fit, got {v.size}")
    if v.shape != tau.shape:
        raise FitError("qdot and tau_f must have the same length")

    def objective(theta: np.ndarray) -> float:
        return _mse(_decode(theta), v, tau)

    obj = Objective(objective, dim=5, lower=_LOWER, upper=_UPPER)
    cfg = cfg or BaselineFitConfig()
    rng = np.random.default_rng(cfg.seed)

    # data-driven magnitude guesses
    abs_tau = np.abs(tau)
    f_guess = float(np.median(abs_tau)) if abs_tau.size else 1.0
    f_guess = min(max(f_guess, 1e-3), F_BOUNDS[1] * 0.5)
    denom = float(np.mean(v * v))
    fv_guess = float(np.mean(v * tau) / denom) if denom > 0 else 0.0
    fv_guess = min(max(fv_guess, 0.0), FV_BOUNDS[1] * 0.9)

    vs_inits = np.exp(rng.uniform(math.log(1e-2), math.log(1e2), size=cfg.n_starts))
    best_theta, best_f = None, math.inf
    for i in range(cfg.n_starts):
        start = np.array([
            f_guess * (0.5 + rng.random()),
            f_guess * (0.5 + rng.random()),
            fv_guess if i % 2 == 0 else fv_guess * rng.random(),
            math.log(vs_inits[i]),
            math.log(1.0 + 2.0 * rng.random()),
        ])
        start = obj.clip(start)
        if obj.value(start) >= BIG:
            continue
        bh_cfg = BasinHoppingConfig(
            iterations=cfg.hops,
            step_size=cfg.step_size * max(f_guess, 1.0),
            temperature=cfg.temperature,
            local_budget=cfg.local_budget,
            seed=int(rng.integers(2**31)),
        )
        result = basin_hopping(obj, start, bh_cfg)
        if result.fun < best_f:
            best_theta, best_f = result.x, result.fun
    if best_theta is None:
        raise FitError("no valid start point found for the Stribeck fit")

    # final polish from the winning basin
    from .numopt import local_minimize

    best_theta, best_f = local_minimize(obj, best_theta, budget=cfg.polish_budget)
    params = _decode(best_theta)
    return params, _mse(params, v, tau)


def fit_asymmetric(
    qdot, tau_f, cfg: BaselineFitConfig | None = None
) -> tuple[AsymmetricStribeck, float]:
    """Fit separate Stribeck parameter sets for each velocity sign.

    The symmetric solution seeds both branch fits, so the asymmetric fit
    can never end up worse than the symmetric one.
    """
    v = np.asarray(qdot, dtype=float)
    tau = np.asarray(tau_f, dtype=float)
    cfg = cfg or BaselineFitConfig()
    pos = v > 0
    neg = v < 0
    if not np.any(pos):
        raise FitError("no positive-velocity samples: cannot fit the positive branch")
    if not np.any(neg):
        raise FitError("no negative-velocity samples: cannot fit the negative branch")

    sym_params, _ = fit_symmetric(v, tau, cfg)
    branches: list[StribeckParams] = []
    for mask, label in ((pos, "positive"), (neg, "negative")):
        if int(mask.sum()) < 10:
            raise FitError(f"need at least 10 {label}-velocity points, got {int(mask.sum())}")
        branch = _fit_branch(v[mask], tau[mask], sym_params, cfg)
        branches.append(branch)
    model = AsymmetricStribeck(positive=branches[0], negative=branches[1])
    r = asymmetric_eval(model, v) - tau
    return model, float(np.mean(r * r))


def _fit_branch(
    v: np.ndarray, tau: np.ndarray, seed_params: StribeckParams, cfg: BaselineFitConfig
) -> StribeckParams:
    def objective(theta: np.ndarray) -> float:
        return _mse(_decode(theta), v, tau)

    obj = Objective(objective, dim=5, lower=_LOWER, upper=_UPPER)
    start = obj.clip(np.array([
        seed_params.F_c,
        seed_params.F_s,
        seed_params.F_v,
        math.log(seed_params.v_s),
        math.log(seed_params.delta_s),
    ]))
    bh_cfg = BasinHoppingConfig(
        iterations=cfg.hops,
        step_size=cfg.step_size * max(abs(seed_params.F_s), 1.0),
        temperature=cfg.temperature,
        local_budget=cfg.local_budget,
        seed=cfg.seed + 17,
    )
    result = basin_hopping(obj, start, bh_cfg)
    from .numopt import local_minimize

    theta, _ = local_minimize(obj, result.x, budget=cfg.polish_budget)
    # keep whichever of {seeded start, optimised point} is better, so the
    # asymmetric fit dominates the symmetric fit by construction
    if objective(theta) <= objective(start):
        return _decode(theta)
    return _decode(start)
