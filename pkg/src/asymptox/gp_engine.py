"""Evolutionary loop: tournament selection, crossover, three mutations,
parsimony-penalized fitness and best-of-run tracking.

All randomness flows through per-slot generators derived from
(seed, generation, slot), so a run is bit-identical no matter how fitness
evaluation is scheduled across workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .dataset import Dataset
from .expr_core import (
    DEPTH_CAP,
    OPS,
    BinaryOp,
    Constant,
    DepthLimitError,
    ExprTree,
    Node,
    Variable,
    evaluate_matrix,
    random_subtree,
    replace_subtree,
    subtree_at,
)

__all__ = [
    "GpConfig",
    "GpConfigError",
    "Individual",
    "RunResult",
    "POINT_REPLACE_P",
    "OPERATOR_ORDER",
    "init_population",
    "fitness",
    "tournament",
    "crossover",
    "subtree_mutation",
    "point_mutation",
    "hoist_mutation",
    "evolve",
    "multi_run",
]

# Per-node replacement probability of point mutation.
POINT_REPLACE_P = 0.05

# Depth of freshly grown donors used by subtree mutation.
SUBTREE_DONOR_DEPTH = 4

# Probability that the grow method keeps branching below the depth cap, and
# the variable share of leaves in mutation donors.  Both tuned empirically:
# bushier, variable-rich donors keep exact building blocks like x/x in
# circulation, which plain 50/50 donors lose to constant-heavy junk.
GROW_INTERNAL_P = 0.8
DONOR_VARIABLE_ODDS = 0.75

# How often a depth-capped variation retries before falling back to the parent.
MAX_VARIATION_RETRIES = 8

OPERATOR_ORDER = ("crossover", "subtree", "point", "hoist", "reproduction")


class GpConfigError(ValueError):
    """A GpConfig invariant is violated."""


@dataclass(frozen=True)
class GpConfig:
    population_size: int = 4000
    generations: int = 30
    tournament_size: int = 20
    crossover_p: float = 0.65
    subtree_p: float = 0.12
    point_p: float = 0.10
    hoist_p: float = 0.05
    reproduction_p: float = 0.08
    parsimony_coefficient: float = 1e-6
    erc_range: tuple[float, float] = (-5.0, 5.0)
    init_depth: tuple[int, int] = (2, 6)
    depth_cap: int = DEPTH_CAP
    fitness_stop: float = 1e-16
    seed: int = 0
    n_runs: int = 5

    @property
    def operator_probs(self) -> tuple[float, ...]:
        return (self.crossover_p, self.subtree_p, self.point_p, self.hoist_p, self.reproduction_p)

    def validate(self) -> None:
        if self.population_size < 1 or self.generations < 0:
            raise GpConfigError("population_size must be >= 1 and generations >= 0")
        if not 1 <= self.tournament_size <= self.population_size:
            raise GpConfigError("tournament_size must be in [1, population_size]")
        if any(p < 0 for p in self.operator_probs):
            raise GpConfigError("operator probabilities must be non-negative")
        if abs(sum(self.operator_probs) - 1.0) > 1e-12:
            raise GpConfigError(f"operator probabilities sum to {sum(self.operator_probs)!r}, not 1")
        if not 0.0 <= self.parsimony_coefficient <= 1e-6:
            raise GpConfigError("parsimony_coefficient must lie in [0, 1e-6]")
        if not self.erc_range[0] < self.erc_range[1]:
            raise GpConfigError("erc_range must be a non-empty interval")
        if not 0 <= self.init_depth[0] <= self.init_depth[1] <= self.depth_cap:
            raise GpConfigError("init_depth must satisfy 0 <= lo <= hi <= depth_cap")
        if self.fitness_stop < 0 or self.seed < 0 or self.n_runs < 1:
            raise GpConfigError("fitness_stop, seed and n_runs must be non-negative (n_runs >= 1)")


@dataclass(frozen=True)
class Individual:
    tree: ExprTree
    raw_fitness: float
    penalized_fitness: float


@dataclass(frozen=True)
class RunResult:
    best: Individual
    fitness_history: tuple[float, ...]  # best-so-far penalized, per generation
    raw_history: tuple[float, ...]
    length_history: tuple[int, ...]
    seed: int
    generations_run: int
    stop_reason: str  # "generation_limit" | "fitness_threshold"


def _slot_rng(seed: int, generation: int, slot: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(generation, slot)))


def _random_leaf(rng, n_inputs: int, erc_range, var_odds: float) -> Node:
    if rng.random() < var_odds:
        return Variable(int(rng.integers(n_inputs)))
    return Constant(float(rng.uniform(*erc_range)))


def random_tree(rng, n_inputs: int, erc_range, max_depth: int, method: str, var_odds: float = 0.5) -> ExprTree:
    """Grow or full-method random tree; the root is an operator when depth allows."""
    nodes: list[Node] = []
    max_d = 0

    def gen(d: int) -> int:
        nonlocal max_d
        if d > max_d:
            max_d = d
        j = len(nodes)
        internal = d < max_depth and (method == "full" or d == 0 or rng.random() < GROW_INTERNAL_P)
        if internal:
            op = OPS[int(rng.integers(len(OPS)))]
            nodes.append(BinaryOp(op, 0, 0))
            left = gen(d + 1)
            right = gen(d + 1)
            nodes[j] = BinaryOp(op, left, right)
        else:
            nodes.append(_random_leaf(rng, n_inputs, erc_range, var_odds))
        return j

    gen(0)
    return ExprTree(nodes=tuple(nodes), root=0, length=len(nodes), depth=max_d)


def _initial_tree(config: GpConfig, n_inputs: int, slot: int) -> ExprTree:
    # Ramped half-and-half: even slots full, odd slots grow, depth ramped
    # uniformly over init_depth.
    rng = _slot_rng(config.seed, 0, slot)
    lo, hi = config.init_depth
    depth = int(rng.integers(lo, hi + 1))
    method = "full" if slot % 2 == 0 else "grow"
    return random_tree(rng, n_inputs, config.erc_range, depth, method)


def init_population(config: GpConfig, n_inputs: int, data: Dataset | None = None, workers: int = 1) -> list[Individual]:
    """Ramped half-and-half population; fitness evaluated when data is given."""
    if n_inputs < 1:
        raise ValueError("n_inputs must be >= 1")
    trees = [_initial_tree(config, n_inputs, slot) for slot in range(config.population_size)]
    if data is None:
        return [Individual(t, math.nan, math.nan) for t in trees]
    return _evaluate_all(trees, data, config.parsimony_coefficient, {}, workers)


def _raw_fitness(tree: ExprTree, data: Dataset) -> float:
    preds = evaluate_matrix(tree, data.inputs)
    raw = float(np.mean(np.abs(preds - data.target)))
    return raw if math.isfinite(raw) else math.inf


def fitness(tree: ExprTree, data: Dataset, parsimony: float) -> tuple[float, float]:
    """(raw, penalized): mean absolute error plus parsimony * length.

    Non-finite evaluations collapse to +inf so broken programs sort last.
    """
    raw = _raw_fitness(tree, data)
    if not math.isfinite(raw):
        return math.inf, math.inf
    return raw, raw + parsimony * tree.length


def _evaluate_all(trees, data: Dataset, parsimony: float, cache: dict, workers: int) -> list[Individual]:
    todo = []
    seen = set()
    for t in trees:
        if t.nodes not in cache and t.nodes not in seen:
            seen.add(t.nodes)
            todo.append(t)
    if workers > 1 and len(todo) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            raws = list(pool.map(lambda t: _raw_fitness(t, data), todo))
    else:
        raws = [_raw_fitness(t, data) for t in todo]
    for t, raw in zip(todo, raws):
        cache[t.nodes] = raw
    out = []
    for t in trees:
        raw = cache[t.nodes]
        pen = raw + parsimony * t.length if math.isfinite(raw) else math.inf
        out.append(Individual(t, raw, pen))
    return out


def _tournament_index(pen: np.ndarray, lengths: np.ndarray, k: int, rng) -> int:
    cand = rng.integers(0, pen.shape[0], size=k)
    pv = pen[cand]
    tied = cand[pv == pv.min()]
    if tied.shape[0] > 1:
        lv = lengths[tied]
        tied = tied[lv == lv.min()]
    return int(tied.min())


def tournament(population, k: int, rng) -> Individual:
    """Draw k contenders with replacement; lowest penalized fitness wins.

    Ties break toward the shorter tree, then the earlier population index.
    """
    if k < 1:
        raise ValueError("tournament size must be >= 1")
    pen = np.array([ind.penalized_fitness for ind in population])
    lengths = np.array([ind.tree.length for ind in population])
    return population[_tournament_index(pen, lengths, k, rng)]


def crossover(parent: ExprTree, donor: ExprTree, rng, depth_cap: int = DEPTH_CAP) -> ExprTree:
    """Replace a random subtree of the parent with a random subtree of the donor.

    The donor point is resampled up to 8 times when the depth cap would be
    breached; after that the parent is returned unchanged.
    """
    at = random_subtree(parent, rng)
    for _ in range(MAX_VARIATION_RETRIES):
        piece = subtree_at(donor, random_subtree(donor, rng))
        try:
            return replace_subtree(parent, at, piece, depth_cap)
        except DepthLimitError:
            continue
    return parent


def subtree_mutation(parent: ExprTree, config: GpConfig, n_inputs: int, rng) -> ExprTree:
    """Replace a random subtree with a freshly grown one (grow method, depth <= 4)."""
    at = random_subtree(parent, rng)
    for _ in range(MAX_VARIATION_RETRIES):
        piece = random_tree(rng, n_inputs, config.erc_range, SUBTREE_DONOR_DEPTH, "grow", DONOR_VARIABLE_ODDS)
        try:
            return replace_subtree(parent, at, piece, config.depth_cap)
        except DepthLimitError:
            continue
    return parent


def point_mutation(parent: ExprTree, config: GpConfig, n_inputs: int, rng) -> ExprTree:
    """Independently replace nodes in kind with probability POINT_REPLACE_P."""
    nodes = list(parent.nodes)
    for i, node in enumerate(nodes):
        if rng.random() >= POINT_REPLACE_P:
            continue
        if isinstance(node, BinaryOp):
            nodes[i] = BinaryOp(OPS[int(rng.integers(len(OPS)))], node.left, node.right)
        elif isinstance(node, Constant):
            nodes[i] = Constant(float(rng.uniform(*config.erc_range)))
        else:
            nodes[i] = Variable(int(rng.integers(n_inputs)))
    return ExprTree(nodes=tuple(nodes), root=parent.root, length=parent.length, depth=parent.depth)


def hoist_mutation(parent: ExprTree, rng) -> ExprTree:
    """Promote a random subtree of a random subtree; never grows the tree."""
    at = random_subtree(parent, rng)
    sub = subtree_at(parent, at)
    piece = subtree_at(sub, random_subtree(sub, rng))
    return replace_subtree(parent, at, piece, depth_cap=None)


def _pick_operator(rng, probs) -> str:
    u = rng.random()
    acc = 0.0
    for name, p in zip(OPERATOR_ORDER, probs):
        acc += p
        if u < acc:
            return name
    return OPERATOR_ORDER[-1]


def _best_index(individuals) -> int:
    best = 0
    for i in range(1, len(individuals)):
        a, b = individuals[i], individuals[best]
        if (a.penalized_fitness, a.tree.length) < (b.penalized_fitness, b.tree.length):
            best = i
    return best


def evolve(config: GpConfig, data: Dataset, workers: int = 1) -> RunResult:
    """Run one seeded evolution; deterministic for a fixed seed at any worker count."""
    config.validate()
    if data.n_rows == 0:
        raise ValueError("dataset is empty")
    n_inputs = data.n_features
    parsimony = config.parsimony_coefficient
    cache: dict = {}

    population = init_population(config, n_inputs, data, workers)
    best = population[_best_index(population)]
    fitness_history = [best.penalized_fitness]
    raw_history = [best.raw_fitness]
    length_history = [best.tree.length]
    generations_run = 0
    stop_reason = "generation_limit"

    if best.penalized_fitness <= config.fitness_stop:
        stop_reason = "fitness_threshold"
    else:
        pen = np.array([ind.penalized_fitness for ind in population])
        lengths = np.array([ind.tree.length for ind in population])
        for gen in range(1, config.generations + 1):
            offspring: list[ExprTree] = []
            for slot in range(config.population_size):
                rng = _slot_rng(config.seed, gen, slot)
                op = _pick_operator(rng, config.operator_probs)
                parent = population[_tournament_index(pen, lengths, config.tournament_size, rng)]
                if op == "crossover":
                    donor = population[_tournament_index(pen, lengths, config.tournament_size, rng)]
                    child = crossover(parent.tree, donor.tree, rng, config.depth_cap)
                elif op == "subtree":
                    child = subtree_mutation(parent.tree, config, n_inputs, rng)
                elif op == "point":
                    child = point_mutation(parent.tree, config, n_inputs, rng)
                elif op == "hoist":
                    child = hoist_mutation(parent.tree, rng)
                else:
                    child = parent.tree
                offspring.append(child)
            population = _evaluate_all(offspring, data, parsimony, cache, workers)
            if len(cache) > 300_000:
                cache.clear()
            generations_run = gen
            cand = population[_best_index(population)]
            if (cand.penalized_fitness, cand.tree.length) < (best.penalized_fitness, best.tree.length):
                best = cand
            fitness_history.append(best.penalized_fitness)
            raw_history.append(best.raw_fitness)
            length_history.append(best.tree.length)
            if best.penalized_fitness <= config.fitness_stop:
                stop_reason = "fitness_threshold"
                break
            pen = np.array([ind.penalized_fitness for ind in population])
            lengths = np.array([ind.tree.length for ind in population])

    return RunResult(
        best=best,
        fitness_history=tuple(fitness_history),
        raw_history=tuple(raw_history),
        length_history=tuple(length_history),
        seed=config.seed,
        generations_run=generations_run,
        stop_reason=stop_reason,
    )


def multi_run(config: GpConfig, data: Dataset, workers: int = 1) -> tuple[list[RunResult], int]:
    """n_runs evolutions with seeds seed, seed+1, ...; returns results and argmin index."""
    config.validate()
    results = [
        evolve(replace(config, seed=config.seed + i), data, workers)
        for i in range(config.n_runs)
    ]
    best_index = min(range(len(results)), key=lambda i: results[i].best.penalized_fitness)
    return results, best_index
