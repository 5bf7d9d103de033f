"""Genetic-programming engine for symbolic regression.

Island-model evolution with annealed probabilistic tournaments,
age-regularised replacement early in the run, periodic migration, and a
Pareto archive of the best expression per complexity level.  Constants of
archive members are periodically polished with the local optimiser.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np

from . import expr as ex
from .numopt import Objective, local_minimize
from .util import max_threads


@dataclass(frozen=True)
class Genome:
    expr: ex.Expr
    age: int
    loss: float
    complexity: int
    #: generation index at creation (-1 for the initial population); age must
    #: always equal the number of generation boundaries passed since then
    born: int = -1

    def fitness(self, parsimony: float) -> float:
        if not math.isfinite(self.loss):
            return math.inf
        return self.loss + parsimony * self.complexity


@dataclass(frozen=True)
class GpConfig:
    islands: int = 4
    population: int = 32
    generations: int = 40
    tournament_k: int = 5
    tournament_p: float = 0.9
    parsimony: float = 1e-5
    p_crossover: float = 0.3
    # weights for point / subtree / insert / delete / constant-perturb moves
    mutation_weights: tuple[float, ...] = (0.25, 0.25, 0.15, 0.15, 0.2)
    max_complexity: int = 40
    t_initial: float = 1.0
    t_final: float = 0.01
    age_phase: float = 0.2
    migration_interval: int = 10
    migration_fraction: float = 0.05
    const_opt_interval: int = 5
    const_opt_budget: int = 160
    init_depth: int = 4
    seed: int = 0

    def __post_init__(self):
        if self.islands < 1 or self.population < 2:
            raise ValueError("need at least 1 island and 2 genomes per island")
        if self.generations < 1:
            raise ValueError("generations must be >= 1")
        if not (1 <= self.tournament_k):
            raise ValueError("tournament_k must be >= 1")
        if not (0 < self.tournament_p <= 1):
            raise ValueError("tournament_p must be in (0, 1]")
        if self.max_complexity < 3:
            raise ValueError("max_complexity must be >= 3")
        if len(self.mutation_weights) != 5 or min(self.mutation_weights) < 0:
            raise ValueError("mutation_weights must be 5 non-negative numbers")
        if not (0 <= self.age_phase <= 1):
            raise ValueError("age_phase must be in [0, 1]")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "GpConfig":
        data = dict(data)
        if "mutation_weights" in data:
            data["mutation_weights"] = tuple(data["mutation_weights"])
        return cls(**data)


# ---------------------------------------------------------------------------
# scoring


def score(expr: ex.Expr, X: np.ndarray, y: np.ndarray, parsimony: float) -> float:
    """Fitness = MSE + parsimony * complexity; infinite when predictions
    are non-finite."""
    loss = mse_loss(expr, X, y)
    if not math.isfinite(loss):
        return math.inf
    return loss + parsimony * ex.complexity(expr)


def mse_loss(expr: ex.Expr, X: np.ndarray, y: np.ndarray) -> float:
    pred = ex.evaluate(expr, X)
    if not np.all(np.isfinite(pred)):
        return math.inf
    r = pred - y
    with np.errstate(all="ignore"):
        loss = float(np.mean(r * r))
    return loss if math.isfinite(loss) else math.inf


# ---------------------------------------------------------------------------
# Pareto archive


class ParetoArchive:
    """Best genome per complexity level, strictly improving with complexity:
    a higher-complexity entry must have strictly lower loss than every entry
    below it."""

    def __init__(self):
        self.entries: dict[int, Genome] = {}

    def would_accept(self, complexity: int, loss: float) -> bool:
        if not math.isfinite(loss):
            return False
        for c, g in self.entries.items():
            if c < complexity and g.loss <= loss:
                return False
            if c == complexity and g.loss <= loss:
                return False
        return True

    def insert(self, genome: Genome) -> bool:
        if not self.would_accept(genome.complexity, genome.loss):
            return False
        self.entries[genome.complexity] = genome
        # drop entries made redundant by the new one
        for c in sorted(self.entries):
            if c > genome.complexity and self.entries[c].loss >= genome.loss:
                del self.entries[c]
        return True

    def best(self) -> Genome:
        if not self.entries:
            raise ValueError("archive is empty")
        return min(self.entries.values(), key=lambda g: (g.loss, g.complexity))

    def __len__(self) -> int:
        return len(self.entries)

    def sorted_entries(self) -> list[Genome]:
        return [self.entries[c] for c in sorted(self.entries)]

    def to_json(self) -> list[dict]:
        return [
            {
                "complexity": g.complexity,
                "loss": g.loss,
                "formula": ex.format_expr(g.expr),
                "tree": ex.to_json(g.expr),
            }
            for g in self.sorted_entries()
        ]


# ---------------------------------------------------------------------------
# selection


def tournament_select(
    island: list[Genome],
    k: int,
    p: float,
    temperature: float,
    rng: np.random.Generator,
    parsimony: float = 0.0,
) -> Genome:
    """Annealed probabilistic tournament.

    Samples ``k`` members, walks them best-to-worst and accepts each with
    probability ``p * exp(-(fit - fit_best) / temperature)``.  If every
    candidate is rejected the worst one is returned, which makes the rank
    distribution geometric when fitness gaps vanish.
    """
    if not island:
        raise ValueError("empty island")
    k = min(k, len(island))
    idx = rng.choice(len(island), size=k, replace=False)
    contestants = sorted((island[i] for i in idx), key=lambda g: g.fitness(parsimony))
    f_best = contestants[0].fitness(parsimony)
    for g in contestants[:-1]:
        gap = g.fitness(parsimony) - f_best
        if gap <= 0:
            accept_p = p
        elif temperature > 0 and math.isfinite(gap):
            accept_p = p * math.exp(-gap / temperature)
        else:
            accept_p = 0.0
        if rng.random() < accept_p:
            return g
    return contestants[-1]


# ---------------------------------------------------------------------------
# variation operators


def mutate(
    expr: ex.Expr,
    rng: np.random.Generator,
    fset: ex.FunctionSet,
    arity: int,
    max_complexity: int,
    weights: tuple[float, ...] = GpConfig.mutation_weights,
) -> ex.Expr:
    """Apply one structural mutation; retries keep the result inside the
    complexity cap, falling back to the unchanged parent."""
    w = np.asarray(weights, dtype=float)
    w = w / w.sum()
    for _ in range(8):
        kind = rng.choice(5, p=w)
        out = _MUTATIONS[kind](expr, rng, fset, arity)
        if out is not None and ex.complexity(out) <= max_complexity:
            return out
    return expr


def _random_index(expr: ex.Expr, rng: np.random.Generator) -> int:
    return int(rng.integers(ex.node_count(expr)))


def _mutate_point(expr, rng, fset, arity):
    i = _random_index(expr, rng)
    node = ex.get_node(expr, i)
    if isinstance(node, ex.Const):
        return ex.replace_node(expr, i, ex.Const(float(rng.normal(0.0, 2.0))))
    if isinstance(node, ex.Var):
        if arity < 2:
            return ex.replace_node(expr, i, ex.Const(float(rng.normal(0.0, 2.0))))
        choices = [j for j in range(arity) if j != node.index]
        return ex.replace_node(expr, i, ex.Var(int(rng.choice(choices))))
    if isinstance(node, ex.Unary):
        options = [c for c in fset.unary_choices() if c != (node.fn, node.exponent)]
        if not options:
            return None
        fn, exponent = options[int(rng.integers(len(options)))]
        return ex.replace_node(expr, i, ex.Unary(fn, node.child, exponent))
    options = [op for op in fset.binary if op != node.op]
    if not options:
        return None
    op = options[int(rng.integers(len(options)))]
    return ex.replace_node(expr, i, ex.Binary(op, node.left, node.right))


def _mutate_subtree(expr, rng, fset, arity):
    i = _random_index(expr, rng)
    sub = ex.random_expr(rng, max_depth=3, arity=arity, fset=fset)
    return ex.replace_node(expr, i, sub)


def _mutate_insert(expr, rng, fset, arity):
    i = _random_index(expr, rng)
    node = ex.get_node(expr, i)
    if rng.random() < 0.5:
        fn, exponent = fset.unary_choices()[int(rng.integers(len(fset.unary_choices())))]
        wrapped = ex.Unary(fn, node, exponent)
    else:
        op = fset.binary[int(rng.integers(len(fset.binary)))]
        depth = 1 if rng.random() < 0.5 else 2  # leaves or tiny combinations
        other = ex.random_expr(rng, max_depth=depth, arity=arity, fset=fset)
        if rng.random() < 0.5:
            wrapped = ex.Binary(op, node, other)
        else:
            wrapped = ex.Binary(op, other, node)
    return ex.replace_node(expr, i, wrapped)


def _mutate_delete(expr, rng, fset, arity):
    indices = [
        i for i, n in enumerate(ex.iter_nodes(expr)) if isinstance(n, (ex.Unary, ex.Binary))
    ]
    if not indices:
        return expr  # deleting from a leaf is a no-op
    i = int(rng.choice(indices))
    node = ex.get_node(expr, i)
    if isinstance(node, ex.Unary):
        child = node.child
    else:
        child = node.left if rng.random() < 0.5 else node.right
    return ex.replace_node(expr, i, child)


def _mutate_constants(expr, rng, fset, arity):
    consts = ex.collect_constants(expr)
    if not consts:
        return _mutate_point(expr, rng, fset, arity)
    j = int(rng.integers(len(consts)))
    c = consts[j]
    if abs(c) < 1e-8:
        consts[j] = c + float(rng.normal(0.0, 1.0))
    else:
        consts[j] = c * float(math.exp(rng.normal(0.0, 0.1)))
    return ex.with_constants(expr, consts)


_MUTATIONS = (_mutate_point, _mutate_subtree, _mutate_insert, _mutate_delete, _mutate_constants)


def crossover(
    a: ex.Expr,
    b: ex.Expr,
    rng: np.random.Generator,
    max_complexity: int = GpConfig.max_complexity,
) -> tuple[ex.Expr, ex.Expr]:
    """Swap random subtrees between two parents.  Two bare leaves have no
    internal structure to exchange, so they come back unchanged."""
    for _ in range(8):
        ia = _random_index(a, rng)
        ib = _random_index(b, rng)
        sub_a = ex.get_node(a, ia)
        sub_b = ex.get_node(b, ib)
        child_a = ex.replace_node(a, ia, sub_b)
        child_b = ex.replace_node(b, ib, sub_a)
        if ex.complexity(child_a) <= max_complexity and ex.complexity(child_b) <= max_complexity:
            return child_a, child_b
    return a, b


# ---------------------------------------------------------------------------
# evolution loop


def evolve(
    inputs,
    targets,
    cfg: GpConfig | None = None,
    fset: ex.FunctionSet | None = None,
    threads: int | None = None,
    on_generation=None,
) -> ParetoArchive:
    """Run island evolution and return the merged Pareto archive.

    Deterministic for a fixed config: island streams are spawned from the
    master seed and consumed island-locally, and archive updates happen in
    island order after each generation, so results do not depend on
    ``threads`` (default: the FRICSYM_THREADS cap).

    ``on_generation(gen, islands, archive)``, when given, is called after
    each completed generation (post migration and archive maintenance) with
    live state that must be treated as read-only.
    """
    X = np.asarray(inputs, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    y = np.asarray(targets, dtype=float)
    if X.shape[0] != y.shape[0] or y.size == 0:
        raise ValueError("inputs and targets must be non-empty with equal length")
    cfg = cfg or GpConfig()
    fset = fset or ex.FunctionSet.default()
    arity = X.shape[1]
    if threads is None:
        threads = max_threads()

    archive = ParetoArchive()

    if np.all(y == y[0]):
        # constant targets: the constant formula is already optimal
        g = _make_genome(ex.Const(float(y[0])), X, y, age=0)
        archive.insert(g)
        return archive

    seed_seq = np.random.SeedSequence(cfg.seed)
    island_rngs = [np.random.default_rng(s) for s in seed_seq.spawn(cfg.islands)]

    islands: list[list[Genome]] = []
    for rng in island_rngs:
        pop = []
        for _ in range(cfg.population):
            e = ex.random_expr(rng, cfg.init_depth, arity, fset)
            while ex.complexity(e) > cfg.max_complexity:
                e = ex.random_expr(rng, cfg.init_depth, arity, fset)
            g = _make_genome(e, X, y, age=0)
            pop.append(g)
            _archive_consider(archive, g, X, y)
        islands.append(pop)

    age_cutoff = cfg.age_phase * cfg.generations
    pool = ThreadPoolExecutor(max_workers=min(threads, cfg.islands)) if (
        threads > 1 and cfg.islands > 1
    ) else None
    for gen in range(cfg.generations):
        if cfg.generations > 1:
            temperature = cfg.t_initial + (cfg.t_final - cfg.t_initial) * gen / (cfg.generations - 1)
        else:
            temperature = cfg.t_final

        def step(i: int) -> list[Genome]:
            return _step_island(islands[i], island_rngs[i], gen, gen < age_cutoff,
                                temperature, cfg, fset, arity, X, y)

        if pool is not None:
            batches = list(pool.map(step, range(cfg.islands)))
        else:
            batches = [step(i) for i in range(cfg.islands)]
        for batch in batches:
            for child in batch:
                _archive_consider(archive, child, X, y)
        for island in islands:
            for i, g in enumerate(island):
                if g.born < gen:  # newborns first age at the next boundary
                    island[i] = Genome(g.expr, g.age + 1, g.loss, g.complexity, g.born)

        if cfg.islands > 1 and (gen + 1) % cfg.migration_interval == 0:
            _migrate(islands, cfg)
        if (gen + 1) % cfg.const_opt_interval == 0 or gen == cfg.generations - 1:
            _polish_archive(archive, X, y, cfg.const_opt_budget, cfg.max_complexity)
        if on_generation is not None:
            on_generation(gen, islands, archive)

    if pool is not None:
        pool.shutdown()
    _polish_archive(archive, X, y, cfg.const_opt_budget, cfg.max_complexity)
    return archive


def _step_island(
    island: list[Genome],
    rng: np.random.Generator,
    gen: int,
    age_regularised: bool,
    temperature: float,
    cfg: GpConfig,
    fset: ex.FunctionSet,
    arity: int,
    X: np.ndarray,
    y: np.ndarray,
) -> list[Genome]:
    """One generation on one island; returns the children for archive
    consideration.  Touches only island-local state, so islands may step
    concurrently."""
    children = []
    for _ in range(cfg.population):
        if rng.random() < cfg.p_crossover and len(island) >= 2:
            p1 = tournament_select(island, cfg.tournament_k, cfg.tournament_p,
                                   temperature, rng, cfg.parsimony)
            p2 = tournament_select(island, cfg.tournament_k, cfg.tournament_p,
                                   temperature, rng, cfg.parsimony)
            c1, c2 = crossover(p1.expr, p2.expr, rng, cfg.max_complexity)
            child_expr = c1 if rng.random() < 0.5 else c2
        else:
            parent = tournament_select(island, cfg.tournament_k, cfg.tournament_p,
                                       temperature, rng, cfg.parsimony)
            child_expr = mutate(parent.expr, rng, fset, arity,
                                cfg.max_complexity, cfg.mutation_weights)
        child = _make_genome(child_expr, X, y, age=0, born=gen)
        if age_regularised:
            victim = max(range(len(island)), key=lambda i: island[i].age)
        else:
            k = min(cfg.tournament_k, len(island))
            sample = rng.choice(len(island), size=k, replace=False)
            victim = max(sample, key=lambda i: island[i].fitness(cfg.parsimony))
        island[int(victim)] = child
        children.append(child)
    return children


def _make_genome(e: ex.Expr, X, y, age: int, born: int = -1) -> Genome:
    return Genome(e, age, mse_loss(e, X, y), ex.complexity(e), born)


def _archive_consider(archive: ParetoArchive, g: Genome, X, y) -> None:
    if not archive.would_accept(g.complexity, g.loss):
        return
    simplified = ex.simplify(g.expr)
    if simplified != g.expr:
        g = Genome(simplified, g.age, mse_loss(simplified, X, y),
                   ex.complexity(simplified), g.born)
    archive.insert(g)


def _migrate(islands: list[list[Genome]], cfg: GpConfig) -> None:
    """Ring migration: each island copies its best genomes over the worst
    slots of its clockwise neighbour."""
    n_mig = max(1, round(cfg.migration_fraction * cfg.population))
    snapshots = [sorted(island, key=lambda g: g.fitness(cfg.parsimony))[:n_mig]
                 for island in islands]
    for i, movers in enumerate(snapshots):
        target = islands[(i + 1) % len(islands)]
        order = sorted(range(len(target)), key=lambda j: target[j].fitness(cfg.parsimony),
                       reverse=True)
        for slot, mover in zip(order, movers):
            target[slot] = mover


def _polish_archive(archive: ParetoArchive, X, y, budget: int, cap: int | None = None) -> None:
    for c, g in list(archive.entries.items()):
        if not math.isfinite(g.loss):
            continue
        refit = _refit_additive(g, X, y)
        if refit is not None:
            archive.insert(refit)
            g = archive.entries.get(c, g)
        expanded = _expand_additive(g, X, y, cap)
        if expanded is not None:
            archive.insert(expanded)
            g = archive.entries.get(c, g)
        consts = ex.collect_constants(g.expr)
        if not consts:
            continue

        def objective(theta: np.ndarray) -> float:
            return mse_loss(ex.with_constants(g.expr, theta), X, y)

        obj = Objective(objective, dim=len(consts))
        try:
            theta, loss = local_minimize(obj, np.asarray(consts), budget=budget)
        except ValueError:
            continue
        if loss < g.loss:
            archive.entries[c] = Genome(ex.with_constants(g.expr, theta), g.age, loss, c,
                                        g.born)
    # polishing a simple entry can leave a complex one dominated; re-prune
    best = math.inf
    for c in sorted(archive.entries):
        if archive.entries[c].loss >= best:
            del archive.entries[c]
        else:
            best = archive.entries[c].loss


def _refit_additive(g: Genome, X: np.ndarray, y: np.ndarray) -> Genome | None:
    """Solve the top-level additive coefficients of a genome by ordinary
    least squares (with an intercept).  Structural search proposes the
    shape; the linear layer is then fitted exactly instead of leaving it to
    mutation noise."""
    terms, _ = ex.additive_decomposition(ex.simplify(g.expr))
    if not terms:
        return None
    columns = []
    cores = []
    for _, core in terms:
        col = ex.evaluate(core, X)
        if np.all(np.isfinite(col)):
            columns.append(col)
            cores.append(core)
    if not cores:
        return None
    A = np.column_stack(columns + [np.ones(y.shape[0])])
    theta, *_ = np.linalg.lstsq(A, y, rcond=None)
    if not np.all(np.isfinite(theta)):
        return None
    tree = ex.simplify(ex.from_additive_terms(list(zip(theta[:-1], cores)), float(theta[-1])))
    return Genome(tree, g.age, mse_loss(tree, X, y), ex.complexity(tree), g.born)


def _expand_additive(g: Genome, X: np.ndarray, y: np.ndarray, cap: int | None) -> Genome | None:
    """One step of forward basis expansion: among pairwise products of the
    genome's additive cores, take the one most correlated with the current
    residual, add it as a new term and refit the linear layer.  The product
    of two discovered shapes (e.g. an interaction of two single-variable
    terms) is hard to reach by single-node edits but trivial to test here."""
    terms, _ = ex.additive_decomposition(ex.simplify(g.expr))
    cores = [core for _, core in terms]
    if not 1 <= len(cores) <= 8:
        return None
    columns = []
    kept = []
    for core in cores:
        col = ex.evaluate(core, X)
        if np.all(np.isfinite(col)):
            columns.append(col)
            kept.append(core)
    if not kept:
        return None
    ones = np.ones(y.shape[0])
    A = np.column_stack(columns + [ones])
    theta, *_ = np.linalg.lstsq(A, y, rcond=None)
    residual = y - A @ theta
    existing = {ex.format_expr(core) for core in kept}
    best = None
    for i in range(len(kept)):
        for j in range(i, len(kept)):
            col = columns[i] * columns[j]
            if not np.all(np.isfinite(col)):
                continue
            sd = float(np.std(col))
            if sd < 1e-12:
                continue
            product = ex.simplify(ex.Binary("mul", kept[i], kept[j]))
            if ex.format_expr(product) in existing:
                continue
            gain = abs(float(np.dot(col - np.mean(col), residual))) / sd
            if best is None or gain > best[0]:
                best = (gain, product, col)
    if best is None:
        return None
    _, product, col = best
    A2 = np.column_stack(columns + [col, ones])
    theta2, *_ = np.linalg.lstsq(A2, y, rcond=None)
    if not np.all(np.isfinite(theta2)):
        return None
    tree = ex.simplify(
        ex.from_additive_terms(
            list(zip(theta2[:-1], kept + [product])), float(theta2[-1])
        )
    )
    if cap is not None and ex.complexity(tree) > cap:
        return None
    return Genome(tree, g.age, mse_loss(tree, X, y), ex.complexity(tree), g.born)
