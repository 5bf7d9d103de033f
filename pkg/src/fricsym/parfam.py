"""Continuous symbolic regression over a fixed rational-composition family.

A structure is

    f_theta(x) = Q_{k+1}(x, g_1(Q_1(x)), ..., g_k(Q_k(x)))

where each Q_i is a rational function (polynomial numerator and denominator,
denominator constant fixed at one) and the g_i are base functions such as
``exp`` or the protected square root.  All coefficients live in one flat
theta vector; fitting minimises MSE plus an L1 penalty by basin hopping and
then sparsifies theta with a threshold schedule.
"""
from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass, asdict

import numpy as np

from . import expr as ex
from .errors import MismatchError
from .numopt import BasinHoppingConfig, Objective, basin_hopping, local_minimize

BASE_FUNCTIONS = ("exp", "sqrt", "abs", "sign")

#: arguments of exp are clipped to this magnitude during the search;
#: extraction removes the clamp
EXP_CLAMP = 50.0


def monomial_exponents(
    n_vars: int, degree: int, parity: str = "any", include_constant: bool = True
) -> np.ndarray:
    """Exponent rows for all monomials of total degree <= ``degree``,
    graded-lexicographically ordered.  ``parity`` restricts total degree to
    odd or even; the degree-zero monomial is dropped when ``include_constant``
    is false."""
    rows = []
    lo = 0 if include_constant else 1
    for d in range(lo, degree + 1):
        if parity == "odd" and d % 2 == 0:
            continue
        if parity == "even" and d % 2 == 1:
            continue
        for combo in itertools.combinations_with_replacement(range(n_vars), d):
            e = [0] * n_vars
            for j in combo:
                e[j] += 1
            rows.append(e)
    if not rows:
        return np.zeros((0, n_vars), dtype=int)
    return np.asarray(rows, dtype=int)


def _design(X: np.ndarray, exps: np.ndarray) -> np.ndarray:
    if exps.shape[0] == 0:
        return np.zeros((X.shape[0], 0))
    # powers are taken of |x| with the sign applied afterwards: libm pow is
    # not guaranteed sign-symmetric for negative bases, and odd-parity
    # structures must be exactly odd functions
    with np.errstate(all="ignore"):
        mag = np.abs(X)[:, None, :] ** exps[None, :, :]
        flip = (X < 0)[:, None, :] & (exps[None, :, :] % 2 == 1)
        return np.prod(np.where(flip, -mag, mag), axis=2)


@dataclass(frozen=True)
class RationalSpec:
    """Degrees of one rational block; ``den_degree`` zero means the block is
    a plain polynomial."""

    num_degree: int
    den_degree: int = 0
    parity: str = "any"

    def __post_init__(self):
        if self.num_degree < 0 or self.den_degree < 0:
            raise ValueError("degrees must be >= 0")
        if self.parity not in ("any", "odd", "even"):
            raise ValueError(f"parity must be any/odd/even, got {self.parity!r}")

    def exponents(self, n_vars: int) -> tuple[np.ndarray, np.ndarray]:
        num = monomial_exponents(n_vars, self.num_degree, self.parity, include_constant=True)
        den = monomial_exponents(n_vars, self.den_degree, self.parity, include_constant=False)
        return num, den


@dataclass(frozen=True)
class ParFamStructure:
    arity: int
    base_fns: tuple[str, ...]
    inner: tuple[RationalSpec, ...]
    outer: RationalSpec

    def __post_init__(self):
        if self.arity < 1:
            raise ValueError("arity must be >= 1")
        if len(self.base_fns) != len(self.inner):
            raise ValueError("one inner rational is required per base function")
        for fn in self.base_fns:
            if fn not in BASE_FUNCTIONS:
                raise ValueError(f"unsupported base function {fn!r}")
        object.__setattr__(self, "base_fns", tuple(self.base_fns))
        object.__setattr__(self, "inner", tuple(self.inner))

    @property
    def k(self) -> int:
        return len(self.base_fns)

    def blocks(self) -> list[tuple[str, np.ndarray, np.ndarray]]:
        """(label, numerator exponents, denominator exponents) per rational,
        inner blocks first, outer last."""
        return _blocks_cached(self)

    @property
    def is_linear(self) -> bool:
        """True when the model is linear in theta (no inner functions and a
        constant denominator), so MSE fitting reduces to least squares."""
        return self.k == 0 and self.outer.den_degree == 0

    @property
    def n_coefficients(self) -> int:
        return sum(b[1].shape[0] + b[2].shape[0] for b in self.blocks())

    def to_dict(self) -> dict:
        return {
            "arity": self.arity,
            "base_fns": list(self.base_fns),
            "inner": [asdict(s) for s in self.inner],
            "outer": asdict(self.outer),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ParFamStructure":
        return cls(
            arity=int(data["arity"]),
            base_fns=tuple(data["base_fns"]),
            inner=tuple(RationalSpec(**s) for s in data["inner"]),
            outer=RationalSpec(**data["outer"]),
        )


@functools.lru_cache(maxsize=64)
def _blocks_cached(structure: ParFamStructure) -> list[tuple[str, np.ndarray, np.ndarray]]:
    out = []
    for i, spec in enumerate(structure.inner):
        num, den = spec.exponents(structure.arity)
        out.append((f"inner{i}", num, den))
    num, den = structure.outer.exponents(structure.arity + structure.k)
    out.append(("outer", num, den))
    return out


def default_friction_structure(arity: int = 4) -> ParFamStructure:
    """Degree-2 polynomials around exp and sqrt inner functions."""
    return ParFamStructure(
        arity=arity,
        base_fns=("exp", "sqrt"),
        inner=(RationalSpec(2, 0), RationalSpec(2, 0)),
        outer=RationalSpec(2, 0),
    )


# ---------------------------------------------------------------------------
# evaluation


def _apply_base(fn: str, q: np.ndarray, clamp_exp: bool) -> np.ndarray:
    if fn == "exp":
        arg = np.clip(q, -EXP_CLAMP, EXP_CLAMP) if clamp_exp else q
        return np.exp(arg)
    if fn == "sqrt":
        return np.sqrt(np.abs(q))
    if fn == "abs":
        return np.abs(q)
    return np.sign(q)


def _rational_value(theta, pos, num_exps, den_exps, X):
    m_num = num_exps.shape[0]
    m_den = den_exps.shape[0]
    num = _design(X, num_exps) @ theta[pos:pos + m_num]
    pos += m_num
    if m_den:
        den = 1.0 + _design(X, den_exps) @ theta[pos:pos + m_den]
        pos += m_den
        num = num / den
    return num, pos


def parfam_eval(
    structure: ParFamStructure, theta, X, clamp_exp: bool = True
) -> np.ndarray:
    """Evaluate the structure at ``theta`` on an ``(n, arity)`` matrix.

    Non-finite outputs propagate.  During fitting the argument of ``exp``
    is clamped to +/-EXP_CLAMP to keep the search landscape finite.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.shape[1] != structure.arity:
        raise MismatchError(
            f"structure expects arity {structure.arity}, inputs have {X.shape[1]}"
        )
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (structure.n_coefficients,):
        raise ValueError(
            f"theta must have {structure.n_coefficients} entries, got {theta.shape}"
        )
    blocks = structure.blocks()
    pos = 0
    zs = []
    with np.errstate(all="ignore"):
        for fn, (_, num_exps, den_exps) in zip(structure.base_fns, blocks):
            q, pos = _rational_value(theta, pos, num_exps, den_exps, X)
            zs.append(_apply_base(fn, q, clamp_exp))
        XZ = np.column_stack([X] + zs) if zs else X
        _, num_exps, den_exps = blocks[-1]
        out, pos = _rational_value(theta, pos, num_exps, den_exps, XZ)
    return out


def parfam_loss(structure: ParFamStructure, theta, X, y, lam: float) -> float:
    """MSE plus ``lam * l1(theta)``; infinite when predictions blow up."""
    pred = parfam_eval(structure, theta, X)
    if not np.all(np.isfinite(pred)):
        return math.inf
    r = pred - np.asarray(y, dtype=float)
    with np.errstate(all="ignore"):
        mse = float(np.mean(r * r))
    if not math.isfinite(mse):
        return math.inf
    return mse + lam * float(np.sum(np.abs(theta)))


# ---------------------------------------------------------------------------
# fitting


@dataclass(frozen=True)
class ParFamFitConfig:
    lam: float = 1e-3
    thresholds: tuple[float, ...] = (1e-3, 1e-2, 5e-2, 2e-1)
    val_fraction: float = 0.2
    degrade_tol: float = 0.05
    finetune_budget: int = 3000
    bh_iterations: int = 80
    bh_step: float = 0.4
    bh_temperature: float = 0.3
    bh_local_budget: int = 1500
    theta_init_scale: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lam must be >= 0")
        if list(self.thresholds) != sorted(self.thresholds) or any(
            t <= 0 for t in self.thresholds
        ):
            raise ValueError("thresholds must be positive and ascending")
        if not (0 <= self.val_fraction < 1):
            raise ValueError("val_fraction must be in [0, 1)")
        if self.degrade_tol < 0:
            raise ValueError("degrade_tol must be >= 0")
        object.__setattr__(self, "thresholds", tuple(float(t) for t in self.thresholds))

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ParFamFitConfig":
        data = dict(data)
        if "thresholds" in data:
            data["thresholds"] = tuple(data["thresholds"])
        return cls(**data)


@dataclass
class ParFamFitReport:
    mse: float
    val_mse: float
    n_nonzero: int
    history: list[dict]


def parfam_fit(
    inputs, targets, structure: ParFamStructure, cfg: ParFamFitConfig | None = None
) -> tuple[np.ndarray, ParFamFitReport]:
    """Two-stage fit.

    Stage one minimises MSE + lam * l1(theta): by basin hopping in general,
    or exactly by least squares when the structure is linear in theta (the
    penalty is then unnecessary — sparsification happens in stage two).
    Stage two first re-optimises the non-zero coefficients on the pure MSE
    (removing the L1 bias), then walks an ascending threshold schedule:
    zero every coefficient below the threshold, re-optimise the survivors,
    keep the sparser model unless validation MSE degrades by more than
    ``degrade_tol``.

    Returns the sparsest accepted theta and a fit report.  The number of
    non-zero coefficients never increases along the schedule.
    """
    X = np.asarray(inputs, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    y = np.asarray(targets, dtype=float)
    if y.size == 0:
        raise ValueError("empty data")
    cfg = cfg or ParFamFitConfig()

    seeds = np.random.SeedSequence(cfg.seed).spawn(2)
    rng = np.random.default_rng(seeds[0])
    bh_seed = int(np.random.default_rng(seeds[1]).integers(2**31))

    n = y.size
    n_val = int(cfg.val_fraction * n)
    if n_val >= 1 and n - n_val >= 2:
        val_idx = np.sort(rng.choice(n, size=n_val, replace=False))
        mask = np.zeros(n, dtype=bool)
        mask[val_idx] = True
        X_tr, y_tr = X[~mask], y[~mask]
        X_val, y_val = X[mask], y[mask]
    else:
        X_tr, y_tr = X, y
        X_val, y_val = X, y

    dim = structure.n_coefficients
    design_tr = _design(X_tr, structure.blocks()[-1][1]) if structure.is_linear else None

    if design_tr is not None:
        theta = np.linalg.lstsq(design_tr, y_tr, rcond=None)[0]
    else:
        theta0 = rng.normal(0.0, cfg.theta_init_scale, size=dim)

        def full_loss(th: np.ndarray) -> float:
            return parfam_loss(structure, th, X_tr, y_tr, cfg.lam)

        obj = Objective(full_loss, dim=dim)
        bh_cfg = BasinHoppingConfig(
            iterations=cfg.bh_iterations,
            step_size=cfg.bh_step,
            temperature=cfg.bh_temperature,
            local_budget=cfg.bh_local_budget,
            seed=bh_seed,
        )
        theta = basin_hopping(obj, theta0, bh_cfg).x

    def mse_on(th: np.ndarray, Xs, ys) -> float:
        pred = parfam_eval(structure, th, Xs)
        if not np.all(np.isfinite(pred)):
            return math.inf
        r = pred - ys
        return float(np.mean(r * r))

    def reoptimize(candidate: np.ndarray) -> np.ndarray:
        """Pure-MSE re-fit of the surviving (non-zero) coefficients."""
        idx = np.flatnonzero(candidate)
        if idx.size == 0:
            return candidate
        if design_tr is not None:
            sub, *_ = np.linalg.lstsq(design_tr[:, idx], y_tr, rcond=None)
            candidate[idx] = sub
            return candidate

        def masked_mse(sub: np.ndarray) -> float:
            full = candidate.copy()
            full[idx] = sub
            return mse_on(full, X_tr, y_tr)

        sub_obj = Objective(masked_mse, dim=idx.size)
        try:
            sub, _ = local_minimize(sub_obj, candidate[idx], budget=cfg.finetune_budget)
            candidate[idx] = sub
        except ValueError:
            pass
        return candidate

    incumbent = reoptimize(theta.copy())
    inc_val = mse_on(incumbent, X_val, y_val)
    history: list[dict] = []
    for t in cfg.thresholds:
        keep = np.abs(incumbent) >= t
        if keep.sum() == np.count_nonzero(incumbent):
            continue
        candidate = reoptimize(np.where(keep, incumbent, 0.0))
        cand_val = mse_on(candidate, X_val, y_val)
        accepted = cand_val <= inc_val * (1 + cfg.degrade_tol) + 1e-15
        history.append(
            {
                "threshold": t,
                "n_nonzero": int(np.count_nonzero(candidate)),
                "val_mse": cand_val,
                "accepted": bool(accepted),
            }
        )
        if accepted:
            incumbent = candidate
            inc_val = cand_val

    report = ParFamFitReport(
        mse=mse_on(incumbent, X_tr, y_tr),
        val_mse=inc_val,
        n_nonzero=int(np.count_nonzero(incumbent)),
        history=history,
    )
    return incumbent, report


# ---------------------------------------------------------------------------
# extraction to expression trees


def _poly_expr(coeffs, exps, inputs: list[ex.Expr], zero_tol: float) -> ex.Expr | None:
    """Sum of coefficient * monomial over the given input expressions;
    None when every coefficient is below the tolerance."""
    total: ex.Expr | None = None
    for c, e in zip(coeffs, exps):
        if abs(c) <= zero_tol:
            continue
        factors: list[ex.Expr] = []
        for j, power in enumerate(e):
            if power == 1:
                factors.append(inputs[j])
            elif power >= 2:
                factors.append(ex.Unary("pow", inputs[j], float(power)))
        term: ex.Expr | None = None
        for f in factors:
            term = f if term is None else ex.Binary("mul", term, f)
        if term is None:
            term = ex.Const(float(c))
        elif c != 1.0:
            term = ex.Binary("mul", ex.Const(float(c)), term)
        total = term if total is None else ex.Binary("add", total, term)
    return total


def _rational_expr(coeffs_num, num_exps, coeffs_den, den_exps,
                   inputs: list[ex.Expr], zero_tol: float) -> ex.Expr:
    num = _poly_expr(coeffs_num, num_exps, inputs, zero_tol)
    if num is None:
        return ex.Const(0.0)
    den = _poly_expr(coeffs_den, den_exps, inputs, zero_tol) if len(den_exps) else None
    if den is None:
        return num
    return ex.Binary("div", num, ex.Binary("add", ex.Const(1.0), den))


def _grouped_outer_expr(coeffs_num, num_exps, x_inputs, z_inputs, zero_tol) -> ex.Expr | None:
    """Emit the outer polynomial grouped by inner-function powers so each
    z_i appears once per power instead of once per monomial."""
    n = len(x_inputs)
    groups: dict[tuple, tuple[list, list]] = {}
    for c, e in zip(coeffs_num, num_exps):
        if abs(c) <= zero_tol:
            continue
        zexp = tuple(int(v) for v in e[n:])
        bucket = groups.setdefault(zexp, ([], []))
        bucket[0].append(c)
        bucket[1].append([int(v) for v in e[:n]])
    total: ex.Expr | None = None
    for zexp in sorted(groups, key=lambda t: (sum(t), t)):
        coeffs, x_rows = groups[zexp]
        poly = _poly_expr(coeffs, np.asarray(x_rows, dtype=int), x_inputs, zero_tol)
        if poly is None:
            continue
        term = poly
        for i, power in enumerate(zexp):
            if power == 0:
                continue
            zf = z_inputs[i] if power == 1 else ex.Unary("pow", z_inputs[i], float(power))
            term = ex.Binary("mul", term, zf)
        total = term if total is None else ex.Binary("add", total, term)
    return total


def parfam_extract(
    structure: ParFamStructure, theta, zero_tol: float = 1e-6
) -> ex.Expr:
    """Turn a fitted theta into an expression tree.

    Coefficients with magnitude <= ``zero_tol`` are dropped; the exp clamp
    used during the search does not appear in the emitted tree.  When every
    coefficient is zero the result is the constant 0.
    """
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (structure.n_coefficients,):
        raise ValueError(
            f"theta must have {structure.n_coefficients} entries, got {theta.shape}"
        )
    blocks = structure.blocks()
    x_inputs: list[ex.Expr] = [ex.Var(i) for i in range(structure.arity)]

    pos = 0
    z_exprs: list[ex.Expr] = []
    for fn, (_, num_exps, den_exps) in zip(structure.base_fns, blocks):
        cn = theta[pos:pos + num_exps.shape[0]]
        pos += num_exps.shape[0]
        cd = theta[pos:pos + den_exps.shape[0]]
        pos += den_exps.shape[0]
        inner = _rational_expr(cn, num_exps, cd, den_exps, x_inputs, zero_tol)
        fn_name = "sign" if fn == "sign" else fn
        z_exprs.append(ex.Unary(fn_name, inner))

    _, num_exps, den_exps = blocks[-1]
    cn = theta[pos:pos + num_exps.shape[0]]
    pos += num_exps.shape[0]
    cd = theta[pos:pos + den_exps.shape[0]]

    num = _grouped_outer_expr(cn, num_exps, x_inputs, z_exprs, zero_tol)
    if num is None:
        return ex.Const(0.0)
    if len(den_exps):
        den = _grouped_outer_expr(cd, den_exps, x_inputs, z_exprs, zero_tol)
        if den is not None:
            num = ex.Binary("div", num, ex.Binary("add", ex.Const(1.0), den))
    return ex.simplify(num)
