"""Derivative-free local and global optimisation.

The local optimiser is a Nelder-Mead simplex with the dimension-adaptive
coefficients, which tolerates the sign/abs kinks that friction models are
full of.  The global layer is basin hopping: Gaussian perturbation, local
descent, Metropolis acceptance.  Everything is deterministic given a seed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict
from typing import Callable, Sequence

import numpy as np

#: sentinel returned for objective values that are NaN/inf or overflow
BIG = 1e300


@dataclass
class Objective:
    """Objective wrapper enforcing the evaluation contract.

    ``value`` never returns a non-finite number: invalid points map to the
    :data:`BIG` sentinel so simplex arithmetic stays well defined.  When box
    bounds are declared, ``clip`` projects points into them; the optimisers
    clip every candidate before evaluation.
    """

    fn: Callable[[np.ndarray], float]
    dim: int
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("objective dimension must be >= 1")
        if (self.lower is None) != (self.upper is None):
            raise ValueError("either give both bounds or neither")
        if self.lower is not None:
            self.lower = np.asarray(self.lower, dtype=float)
            self.upper = np.asarray(self.upper, dtype=float)
            if self.lower.shape != (self.dim,) or self.upper.shape != (self.dim,):
                raise ValueError("bounds must have shape (dim,)")
            if np.any(self.lower >= self.upper):
                raise ValueError("lower bounds must be strictly below upper bounds")

    def clip(self, x: np.ndarray) -> np.ndarray:
        if self.lower is None:
            return np.asarray(x, dtype=float)
        return np.clip(x, self.lower, self.upper)

    def value(self, x: np.ndarray) -> float:
        try:
            v = float(self.fn(np.asarray(x, dtype=float)))
        except (ArithmeticError, ValueError):
            return BIG
        if not math.isfinite(v) or v >= BIG:
            return BIG
        return v


def local_minimize(
    obj: Objective,
    x0,
    budget: int = 500,
    xatol: float = 1e-10,
    fatol: float = 1e-12,
) -> tuple[np.ndarray, float]:
    """Nelder-Mead descent from ``x0`` under an evaluation budget.

    Returns ``(x, f)`` with ``f <= f(x0)``.  All evaluated points respect the
    objective's bounds.  A start point with an invalid objective value is an
    error.
    """
    x0 = obj.clip(np.atleast_1d(np.asarray(x0, dtype=float)))
    d = obj.dim
    if x0.shape != (d,):
        raise ValueError(f"x0 must have shape ({d},), got {x0.shape}")
    f0 = obj.value(x0)
    if f0 >= BIG:
        raise ValueError("invalid start point: objective is not finite at x0")

    # dimension-adaptive coefficients
    alpha = 1.0
    beta = 1.0 + 2.0 / d
    gamma = 0.75 - 1.0 / (2.0 * d)
    delta = 1.0 - 1.0 / d if d > 1 else 0.5

    simplex = [x0]
    values = [f0]
    evals = 1
    for i in range(d):
        step = 0.05 * abs(x0[i]) if x0[i] != 0 else 0.00025
        vertex = x0.copy()
        vertex[i] += step
        vertex = obj.clip(vertex)
        if np.array_equal(vertex, x0):
            vertex = x0.copy()
            vertex[i] -= step
            vertex = obj.clip(vertex)
        simplex.append(vertex)
        values.append(obj.value(vertex))
        evals += 1

    simplex = np.asarray(simplex)
    values = np.asarray(values)

    while evals < budget:
        order = np.argsort(values, kind="stable")
        simplex = simplex[order]
        values = values[order]
        fbest, fworst = values[0], values[-1]
        spread = np.max(np.abs(simplex[1:] - simplex[0]))
        if (fworst - fbest) <= fatol and spread <= xatol:
            break

        centroid = simplex[:-1].mean(axis=0)
        xr = obj.clip(centroid + alpha * (centroid - simplex[-1]))
        fr = obj.value(xr)
        evals += 1

        if fr < values[0]:
            xe = obj.clip(centroid + beta * (xr - centroid))
            fe = obj.value(xe)
            evals += 1
            if fe < fr:
                simplex[-1], values[-1] = xe, fe
            else:
                simplex[-1], values[-1] = xr, fr
        elif fr < values[-2]:
            simplex[-1], values[-1] = xr, fr
        else:
            if fr < values[-1]:
                xc = obj.clip(centroid + gamma * (xr - centroid))
            else:
                xc = obj.clip(centroid - gamma * (centroid - simplex[-1]))
            fc = obj.value(xc)
            evals += 1
            if fc < min(fr, values[-1]):
                simplex[-1], values[-1] = xc, fc
            else:
                for i in range(1, d + 1):
                    if evals >= budget:
                        break
                    simplex[i] = obj.clip(simplex[0] + delta * (simplex[i] - simplex[0]))
                    values[i] = obj.value(simplex[i])
                    evals += 1

    i = int(np.argmin(values))
    return simplex[i].copy(), float(values[i])


@dataclass(frozen=True)
class BasinHoppingConfig:
    iterations: int = 100
    step_size: float = 0.5
    temperature: float = 1.0
    local_budget: int = 400
    seed: int = 0
    adaptive_step: bool = True
    adapt_interval: int = 20
    target_acceptance: float = 0.5

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.step_size <= 0:
            raise ValueError("step_size must be positive")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.local_budget < 2:
            raise ValueError("local_budget must be >= 2")
        if self.adapt_interval < 1:
            raise ValueError("adapt_interval must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "BasinHoppingConfig":
        return cls(**data)


@dataclass
class BasinHoppingResult:
    x: np.ndarray
    fun: float
    trace: np.ndarray  # best-so-far objective after the initial descent and each hop
    acceptance_rate: float


def basin_hopping(obj: Objective, x0, cfg: BasinHoppingConfig) -> BasinHoppingResult:
    """Global search: repeated Gaussian perturbation + local descent with
    Metropolis acceptance.  The returned trace is non-increasing; the same
    seed reproduces the same result bit for bit.
    """
    rng = np.random.default_rng(cfg.seed)
    x, f = local_minimize(obj, x0, cfg.local_budget)
    best_x, best_f = x.copy(), f
    trace = [best_f]
    step = cfg.step_size
    accepted_total = 0
    accepted_window = 0

    for it in range(cfg.iterations):
        trial = obj.clip(x + rng.normal(0.0, step, size=obj.dim))
        if obj.value(trial) >= BIG:
            trace.append(best_f)
            continue
        cand_x, cand_f = local_minimize(obj, trial, cfg.local_budget)
        delta = cand_f - f
        if delta <= 0:
            accept = True
        elif cfg.temperature > 0:
            accept = rng.random() < math.exp(-delta / cfg.temperature)
        else:
            accept = False
        if accept:
            x, f = cand_x, cand_f
            accepted_total += 1
            accepted_window += 1
        if cand_f < best_f:
            best_x, best_f = cand_x.copy(), cand_f
        trace.append(best_f)

        if cfg.adaptive_step and (it + 1) % cfg.adapt_interval == 0:
            rate = accepted_window / cfg.adapt_interval
            step *= 1.1 if rate > cfg.target_acceptance else 0.9
            accepted_window = 0

    return BasinHoppingResult(
        x=best_x,
        fun=best_f,
        trace=np.asarray(trace),
        acceptance_rate=accepted_total / cfg.iterations,
    )


def fit_least_squares(
    model: Callable[[np.ndarray, np.ndarray], np.ndarray],
    theta0,
    inputs,
    targets,
    cfg: BasinHoppingConfig | None = None,
    bounds: tuple[Sequence[float], Sequence[float]] | None = None,
) -> tuple[np.ndarray, float]:
    """Minimise mean squared error of ``model(theta, inputs)`` over theta.

    Returns ``(theta, mse)``.  Non-finite predictions are treated as an
    infinite objective, so the search simply avoids those regions.
    """
    X = np.asarray(inputs, dtype=float)
    y = np.asarray(targets, dtype=float)
    if y.size == 0:
        raise ValueError("empty data")
    theta0 = np.atleast_1d(np.asarray(theta0, dtype=float))
    if cfg is None:
        cfg = BasinHoppingConfig()

    def objective(theta: np.ndarray) -> float:
        pred = model(theta, X)
        r = pred - y
        with np.errstate(all="ignore"):
            mse = float(np.mean(r * r))
        return mse

    lower, upper = (None, None) if bounds is None else bounds
    obj = Objective(objective, dim=theta0.size, lower=lower, upper=upper)
    result = basin_hopping(obj, theta0, cfg)
    return result.x, result.fun
