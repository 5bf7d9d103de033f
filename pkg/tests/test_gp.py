"""Genetic-programming engine: archive, selection, variation, evolution."""
from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fricsym import GpConfig, ParetoArchive, evolve
from fricsym import expr as ex
from fricsym.gp import (
    Genome,
    crossover,
    mse_loss,
    mutate,
    score,
    tournament_select,
)


def _genome(tree: ex.Expr, loss: float, age: int = 0) -> Genome:
    return Genome(tree, age, loss, ex.complexity(tree))


def _planted_data(n=120, seed=0):
    rng = np.random.default_rng(seed)
    v = rng.uniform(-2, 2, n)
    X = np.column_stack([v, np.sign(v)])
    y = 2.0 * v + 3.0 * np.sign(v)
    return X, y


# ---------------------------------------------------------------------------
# config


def test_config_validation():
    with pytest.raises(ValueError):
        GpConfig(islands=0)
    with pytest.raises(ValueError):
        GpConfig(population=1)
    with pytest.raises(ValueError):
        GpConfig(tournament_p=0.0)
    with pytest.raises(ValueError):
        GpConfig(mutation_weights=(1, 1, 1))
    with pytest.raises(ValueError):
        GpConfig(age_phase=1.5)


def test_config_round_trip():
    cfg = GpConfig(islands=2, population=8, mutation_weights=(1, 1, 1, 1, 1))
    again = GpConfig.from_dict(cfg.to_dict())
    assert again == cfg


# ---------------------------------------------------------------------------
# scoring


def test_score_and_loss():
    X = np.array([[1.0], [2.0]])
    y = np.array([2.0, 4.0])
    tree = ex.parse("2*x0")
    assert mse_loss(tree, X, y) == 0.0
    # complexity of 2*x0 is 2 (one multiply, one variable read)
    assert score(tree, X, y, parsimony=0.01) == pytest.approx(0.02)
    bad = ex.parse("exp(exp(exp(x0*100)))")
    assert mse_loss(bad, X, y) == math.inf
    assert score(bad, X, y, parsimony=0.01) == math.inf


# ---------------------------------------------------------------------------
# Pareto archive


def test_archive_accepts_strict_improvements_only():
    arch = ParetoArchive()
    assert arch.insert(_genome(ex.parse("x0"), 1.0))
    # same complexity, equal loss: rejected
    assert not arch.insert(_genome(ex.parse("x1"), 1.0))
    # higher complexity must strictly beat every simpler entry
    assert not arch.insert(_genome(ex.parse("x0 + x1"), 1.0))
    assert arch.insert(_genome(ex.parse("x0 + x1"), 0.5))
    assert len(arch) == 2


def test_archive_prunes_dominated_entries():
    arch = ParetoArchive()
    arch.insert(_genome(ex.parse("x0 + x1"), 0.5))
    arch.insert(_genome(ex.parse("x0"), 0.2))  # simpler and better: dominates
    assert len(arch) == 1
    assert arch.best().complexity == 1


def test_archive_rejects_non_finite():
    arch = ParetoArchive()
    assert not arch.insert(_genome(ex.parse("x0"), math.inf))
    with pytest.raises(ValueError):
        arch.best()


def test_archive_to_json_is_sorted():
    arch = ParetoArchive()
    arch.insert(_genome(ex.parse("x0*x1 + 1"), 0.1))
    arch.insert(_genome(ex.parse("x0"), 0.9))
    rows = arch.to_json()
    assert [r["complexity"] for r in rows] == sorted(r["complexity"] for r in rows)
    assert all({"complexity", "loss", "formula", "tree"} <= set(r) for r in rows)


# ---------------------------------------------------------------------------
# selection


def test_tournament_rejects_empty_island():
    with pytest.raises(ValueError):
        tournament_select([], 3, 0.9, 1.0, np.random.default_rng(0))


def test_tournament_rank_distribution_is_geometric():
    # five members with vanishing fitness gaps; acceptance probability 0.9
    # per rank makes the selection law geometric: [0.9, 0.09, 0.009, ...]
    island = [_genome(ex.parse(f"x{i}"), 1.0 + i * 1e-12) for i in range(5)]
    rng = np.random.default_rng(42)
    counts = np.zeros(5)
    draws = 100_000
    for _ in range(draws):
        g = tournament_select(island, k=5, p=0.9, temperature=1.0, rng=rng)
        counts[island.index(g)] += 1
    freq = counts / draws
    expected = np.array([0.9, 0.09, 0.009, 0.0009, 0.0001])
    assert np.all(np.abs(freq - expected) <= 0.01)


def test_tournament_prefers_fit_members_under_cold_temperature():
    island = [_genome(ex.parse("x0"), 0.0), _genome(ex.parse("x1"), 100.0)]
    rng = np.random.default_rng(1)
    picks = [tournament_select(island, 2, 0.9, 0.01, rng) for _ in range(200)]
    assert sum(g is island[0] for g in picks) > 150


# ---------------------------------------------------------------------------
# variation operators


def test_mutation_validity_sweep():
    # ten thousand mutations must preserve structural validity
    fset = ex.FunctionSet.default()
    rng = np.random.default_rng(7)
    arity, cap = 3, 25
    tree = ex.parse("2*x0 + sgn(x1)*x2")
    X = rng.uniform(-2, 2, size=(8, arity))
    for i in range(10_000):
        tree = mutate(tree, rng, fset, arity, cap)
        assert ex.complexity(tree) <= cap
        assert fset.contains(tree)
        assert max((n.index for n in ex.iter_nodes(tree) if isinstance(n, ex.Var)),
                   default=0) < arity
        out = ex.evaluate(tree, X)
        assert out.shape == (8,)
        if i % 500 == 0:
            tree = ex.parse("2*x0 + sgn(x1)*x2")  # restart to vary contexts


def test_crossover_respects_complexity_cap():
    rng = np.random.default_rng(3)
    a = ex.parse("x0*x1 + sgn(x0) - 2*x1")
    b = ex.parse("exp(x0) + x1^2")
    for _ in range(500):
        c1, c2 = crossover(a, b, rng, max_complexity=12)
        assert ex.complexity(c1) <= 12
        assert ex.complexity(c2) <= 12


def test_crossover_on_leaves_is_identity():
    rng = np.random.default_rng(0)
    a, b = ex.parse("x0"), ex.parse("x1")
    assert crossover(a, b, rng) in [(b, a), (a, b)]


# ---------------------------------------------------------------------------
# evolution


def test_evolve_validates_inputs():
    with pytest.raises(ValueError):
        evolve(np.zeros((0, 1)), np.zeros(0))
    with pytest.raises(ValueError):
        evolve(np.zeros((5, 1)), np.zeros(4))


def test_evolve_constant_targets_short_circuit():
    X = np.linspace(-1, 1, 20).reshape(-1, 1)
    arch = evolve(X, np.full(20, 3.25))
    best = arch.best()
    assert best.loss == 0.0
    assert best.complexity == 0
    assert ex.format_expr(best.expr) == "3.25"


def test_evolve_recovers_planted_formula():
    X, y = _planted_data()
    arch = evolve(X, y, GpConfig(seed=0))
    assert any(g.loss <= 1e-6 and g.complexity <= 7 for g in arch.sorted_entries())


def test_evolve_thread_count_does_not_change_results():
    X, y = _planted_data(n=60, seed=5)
    cfg = GpConfig(islands=3, population=10, generations=8, seed=11)
    a = evolve(X, y, cfg, threads=1)
    b = evolve(X, y, cfg, threads=3)
    assert [(g.complexity, g.loss, ex.format_expr(g.expr)) for g in a.sorted_entries()] == [
        (g.complexity, g.loss, ex.format_expr(g.expr)) for g in b.sorted_entries()
    ]


def test_evolve_respects_threads_env(monkeypatch):
    monkeypatch.setenv("FRICSYM_THREADS", "2")
    X, y = _planted_data(n=40, seed=2)
    cfg = GpConfig(islands=2, population=6, generations=4, seed=3)
    a = evolve(X, y, cfg)  # picks up the env cap
    b = evolve(X, y, cfg, threads=1)
    assert [(g.complexity, g.loss) for g in a.sorted_entries()] == [
        (g.complexity, g.loss) for g in b.sorted_entries()
    ]


# ---------------------------------------------------------------------------
# invariant suites (1000 cases each)

_SMALL = dict(islands=2, population=6, generations=6, tournament_k=3,
              init_depth=3, max_complexity=12, const_opt_interval=3,
              const_opt_budget=40, migration_interval=3)


def _case_data(seed: int):
    rng = np.random.default_rng(seed)
    v = rng.uniform(-2, 2, 24)
    X = np.column_stack([v, np.sign(v)])
    y = rng.uniform(0.5, 3) * v + rng.uniform(-3, 3) * np.sign(v) + rng.normal(0, 0.1, 24)
    return X, y


@settings(settings.get_profile("bulk"))
@given(st.integers(min_value=0, max_value=2**31 - 1))
def test_invariant_generation_bookkeeping(seed):
    """Archive Pareto shape, monotone best loss, genome validity and age
    accounting must hold at every generation boundary."""
    X, y = _case_data(seed)
    cfg = GpConfig(seed=seed, **_SMALL)
    fset = ex.FunctionSet.default()
    best_losses = []

    def check(gen, islands, archive):
        entries = archive.sorted_entries()
        losses = [g.loss for g in entries]
        # strictly improving loss along rising complexity = no dominated entry
        assert all(a > b for a, b in zip(losses, losses[1:]))
        assert all(math.isfinite(l) for l in losses)
        if entries:
            best_losses.append(archive.best().loss)
        for island in islands:
            assert len(island) == cfg.population
            for g in island:
                assert g.complexity == ex.complexity(g.expr) <= cfg.max_complexity
                assert fset.contains(g.expr)
                assert g.age == gen - g.born

    evolve(X, y, cfg, on_generation=check)
    assert len(best_losses) == cfg.generations
    assert all(a >= b for a, b in zip(best_losses, best_losses[1:]))


@settings(settings.get_profile("bulk"))
@given(st.integers(min_value=0, max_value=2**31 - 1), st.integers(1, 3))
def test_invariant_seed_determinism(seed, threads):
    X, y = _case_data(seed)
    cfg = GpConfig(seed=seed, **_SMALL)
    a = evolve(X, y, cfg, threads=1)
    b = evolve(X, y, cfg, threads=threads)
    assert [(g.complexity, g.loss, ex.format_expr(g.expr)) for g in a.sorted_entries()] == [
        (g.complexity, g.loss, ex.format_expr(g.expr)) for g in b.sorted_entries()
    ]
