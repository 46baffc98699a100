import math

import numpy as np
import pytest

from asymptox import expr_core as ec
from asymptox import gp_engine as gp
from asymptox.dataset import Dataset, Feature
from asymptox.gp_engine import GpConfig, GpConfigError


def toy_dataset(n=20):
    params = np.linspace(0.1, 1.0, n)
    return Dataset.build("x", params, [Feature("power", 1)], params.copy())


def small_config(**kw):
    base = dict(population_size=60, generations=4, tournament_size=5, seed=0)
    base.update(kw)
    return GpConfig(**base)


class TestConfig:
    def test_defaults_valid(self):
        GpConfig().validate()

    def test_probability_partition_enforced(self):
        with pytest.raises(GpConfigError):
            GpConfig(crossover_p=0.7).validate()

    def test_parsimony_ceiling(self):
        with pytest.raises(GpConfigError):
            GpConfig(parsimony_coefficient=1e-5).validate()

    def test_tournament_bound(self):
        with pytest.raises(GpConfigError):
            GpConfig(population_size=10, tournament_size=11).validate()


class TestInitPopulation:
    def test_population_count(self):
        pop = gp.init_population(small_config(population_size=10), 1)
        assert len(pop) == 10
        for ind in pop:
            ec.audit_tree(ind.tree)

    def test_full_method_exact_depth(self):
        cfg = small_config(population_size=40, init_depth=(2, 2))
        pop = gp.init_population(cfg, 1)
        # even slots use the full method: exact depth 2
        for slot in range(0, 40, 2):
            assert pop[slot].tree.depth == 2
        for ind in pop:
            assert ind.tree.depth <= 2

    def test_seed_replay_identical(self):
        cfg = small_config(population_size=30)
        a = gp.init_population(cfg, 2)
        b = gp.init_population(cfg, 2)
        assert [x.tree for x in a] == [y.tree for y in b]

    def test_requires_inputs(self):
        with pytest.raises(ValueError):
            gp.init_population(small_config(), 0)


class TestFitness:
    def test_perfect_fit(self):
        ds = toy_dataset()
        tree = ec.variable(0)
        raw, pen = gp.fitness(tree, ds, 1e-6)
        assert raw == 0.0
        assert pen == pytest.approx(1e-6 * tree.length)

    def test_constant_zero_on_unit_targets(self):
        params = np.linspace(0.1, 1.0, 10)
        ds = Dataset.build("x", params, [Feature("power", 1)], np.ones(10))
        raw, _ = gp.fitness(ec.constant(0.0), ds, 0.0)
        assert raw == 1.0

    def test_collision_exact_tree(self):
        from asymptox import problems as pb

        ds = pb.collision_dataset(pb.CollisionRegime.SMALL_DELTA)
        d = ec.variable(0)
        one = ec.constant(1.0)
        tree = ec.binary(ec.Op.DIV, ec.binary(ec.Op.SUB, d, one), ec.binary(ec.Op.ADD, d, one))
        raw, _ = gp.fitness(tree, ds, 1e-6)
        assert raw <= 1e-15

    def test_non_finite_sentinel(self):
        ds = toy_dataset()
        big = ec.binary(ec.Op.MUL, ec.constant(1e308), ec.constant(1e308))
        raw, pen = gp.fitness(big, ds, 1e-6)
        assert math.isinf(raw) and math.isinf(pen)


class TestTournament:
    def make_population(self, fitnesses):
        return [
            gp.Individual(ec.constant(float(i)), f, f)
            for i, f in enumerate(fitnesses)
        ]

    def test_exhaustive_returns_global_best(self):
        pop = self.make_population([0.5, 0.1, 0.9, 0.3])
        rng = np.random.default_rng(0)
        for _ in range(20):
            assert gp.tournament(pop, 200, rng).raw_fitness == 0.1

    def test_k_one_uniform(self):
        pop = self.make_population([0.5, 0.1, 0.9, 0.3])
        rng = np.random.default_rng(1)
        seen = {gp.tournament(pop, 1, rng).raw_fitness for _ in range(400)}
        assert seen == {0.5, 0.1, 0.9, 0.3}

    def test_rank_monotonic_selection(self):
        pop = self.make_population(sorted(np.linspace(0.0, 1.0, 8)))
        rng = np.random.default_rng(2)
        counts = np.zeros(8)
        for _ in range(20_000):
            counts[int(gp.tournament(pop, 2, rng).raw_fitness * 7 + 1e-9)] += 1
        assert all(counts[i] > counts[i + 1] for i in range(7))

    def test_tie_breaks_shorter_then_earlier(self):
        long_tree = ec.binary(ec.Op.ADD, ec.constant(1.0), ec.constant(2.0))
        pop = [
            gp.Individual(long_tree, 0.5, 0.5),
            gp.Individual(ec.constant(0.0), 0.5, 0.5),
            gp.Individual(ec.constant(1.0), 0.5, 0.5),
        ]
        rng = np.random.default_rng(3)
        pick = gp.tournament(pop, 50, rng)
        assert pick is pop[1]


class TestVariationOperators:
    def trees(self, n=40, seed=6):
        rng = np.random.default_rng(seed)
        return [
            gp.random_tree(rng, 2, (-5.0, 5.0), int(rng.integers(0, 6)), "grow" if i % 2 else "full")
            for i in range(n)
        ]

    def test_crossover_single_leaf_identity(self):
        leaf = ec.constant(2.0)
        rng = np.random.default_rng(0)
        assert gp.crossover(leaf, leaf, rng) == leaf

    def test_crossover_node_multiset_subset(self):
        rng = np.random.default_rng(1)
        trees = self.trees()
        for _ in range(150):
            p = trees[int(rng.integers(len(trees)))]
            d = trees[int(rng.integers(len(trees)))]
            child = gp.crossover(p, d, rng)
            ec.audit_tree(child)
            pool = list(p.nodes) + list(d.nodes)
            leafs = [n for n in child.nodes if not isinstance(n, ec.BinaryOp)]
            pool_leafs = [n for n in pool if not isinstance(n, ec.BinaryOp)]
            for leaf in set(map(repr, leafs)):
                assert sum(1 for n in leafs if repr(n) == leaf) <= sum(1 for n in pool_leafs if repr(n) == leaf)

    def test_subtree_mutation_single_leaf(self):
        rng = np.random.default_rng(2)
        out = gp.subtree_mutation(ec.constant(1.0), small_config(), 2, rng)
        assert out.depth >= 1
        ec.audit_tree(out)

    def test_subtree_mutation_reintroduces_variables(self):
        cfg = small_config()
        rng = np.random.default_rng(3)
        parent = ec.constant(5.0)
        hits = 0
        for _ in range(1000):
            out = gp.subtree_mutation(parent, cfg, 2, rng)
            if any(isinstance(n, ec.Variable) for n in out.nodes):
                hits += 1
        assert hits >= 1

    def test_point_mutation_zero_probability_identity(self, monkeypatch):
        monkeypatch.setattr(gp, "POINT_REPLACE_P", 0.0)
        rng = np.random.default_rng(4)
        for t in self.trees(10):
            assert gp.point_mutation(t, small_config(), 2, rng) == t

    def test_point_mutation_preserves_shape(self):
        rng = np.random.default_rng(5)
        for t in self.trees():
            out = gp.point_mutation(t, small_config(), 2, rng)
            ec.audit_tree(out)
            assert out.length == t.length and out.depth == t.depth
            for a, b in zip(t.nodes, out.nodes):
                assert isinstance(b, ec.BinaryOp) == isinstance(a, ec.BinaryOp)

    def test_hoist_never_grows(self):
        rng = np.random.default_rng(7)
        for t in self.trees():
            out = gp.hoist_mutation(t, rng)
            ec.audit_tree(out)
            assert out.length <= t.length

    def test_hoist_single_leaf_identity(self):
        rng = np.random.default_rng(8)
        leaf = ec.variable(0)
        assert gp.hoist_mutation(leaf, rng) == leaf


class TestEvolve:
    def test_identity_smoke_oracle(self):
        ds = toy_dataset()
        cfg = GpConfig(population_size=500, generations=2, tournament_size=20, seed=1)
        res = gp.evolve(cfg, ds)
        assert res.best.raw_fitness <= 1e-12

    def test_history_non_increasing(self):
        ds = toy_dataset()
        for seed in (0, 1, 2):
            res = gp.evolve(small_config(seed=seed, generations=6), ds)
            hist = res.fitness_history
            assert all(a >= b for a, b in zip(hist, hist[1:]))
            assert len(hist) == res.generations_run + 1

    def test_bit_identical_replay(self):
        ds = toy_dataset()
        cfg = small_config(population_size=120, generations=3)
        a = gp.evolve(cfg, ds)
        b = gp.evolve(cfg, ds)
        assert a == b

    def test_worker_count_invariance(self):
        ds = toy_dataset()
        cfg = small_config(population_size=120, generations=3)
        a = gp.evolve(cfg, ds, workers=1)
        b = gp.evolve(cfg, ds, workers=4)
        assert a == b

    def test_fitness_threshold_stop(self):
        ds = toy_dataset()
        cfg = small_config(population_size=300, generations=50, fitness_stop=1e-3)
        res = gp.evolve(cfg, ds)
        assert res.stop_reason == "fitness_threshold"
        assert res.generations_run < 50
        assert res.best.penalized_fitness <= 1e-3

    def test_generation_limit_stop(self):
        ds = toy_dataset()
        res = gp.evolve(small_config(), ds)
        assert res.stop_reason == "generation_limit"
        assert res.generations_run == 4

    def test_invalid_config_reported_before_evolution(self):
        ds = toy_dataset()
        with pytest.raises(GpConfigError):
            gp.evolve(small_config(crossover_p=0.9), ds)

    def test_closure_every_generation(self):
        ds = toy_dataset()
        cfg = small_config(population_size=80, generations=5, depth_cap=8, init_depth=(2, 5))
        res = gp.evolve(cfg, ds)
        assert res.best.tree.depth <= 8


class TestOperatorDraw:
    def test_partition_frequencies(self):
        cfg = GpConfig()
        counts = {name: 0 for name in gp.OPERATOR_ORDER}
        n = 100_000
        rng = np.random.default_rng(0)
        for _ in range(n):
            counts[gp._pick_operator(rng, cfg.operator_probs)] += 1
        for name, p in zip(gp.OPERATOR_ORDER, cfg.operator_probs):
            sigma = math.sqrt(n * p * (1 - p))
            assert abs(counts[name] - n * p) <= 3 * sigma, (name, counts[name])


class TestMultiRun:
    def test_single_run_matches_evolve(self):
        ds = toy_dataset()
        cfg = small_config(n_runs=1)
        results, best = gp.multi_run(cfg, ds)
        assert best == 0 and len(results) == 1
        assert results[0] == gp.evolve(cfg, ds)

    def test_best_index_is_argmin(self):
        ds = toy_dataset()
        cfg = small_config(n_runs=4, generations=3)
        results, best = gp.multi_run(cfg, ds)
        pens = [r.best.penalized_fitness for r in results]
        assert pens[best] == min(pens)
        assert [r.seed for r in results] == [0, 1, 2, 3]
