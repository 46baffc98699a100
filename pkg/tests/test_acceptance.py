"""Acceptance suite: one test per criterion, each printing a PASS line.

The SR criteria are stochastic by nature and pinned to seeds 0-4 with the
default engine configuration; everything else is deterministic.  Run with
``pytest tests/test_acceptance.py -v -s`` to see the per-criterion lines.
"""

import math
import time

import numpy as np
import pytest

from asymptox import expr_core as ec
from asymptox import gp_engine as gp
from asymptox import problems as pb
from asymptox import series_tools as st
from asymptox.expr_core import evaluate_matrix
from asymptox.numerics import EULER_GAMMA, kv_integral_quadrature_oracle
from asymptox.problems import CollisionRegime, KvLimit

SEED = 0
NU_REF = 0.3455


def fit_problem(dataset):
    t0 = time.time()
    results, best_idx = gp.multi_run(gp.GpConfig(seed=SEED), dataset)
    return results, best_idx, time.time() - t0


@pytest.fixture(scope="module")
def collision_runs():
    out = {}
    for regime in CollisionRegime:
        out[regime] = fit_problem(pb.collision_dataset(regime))
    return out


@pytest.fixture(scope="module")
def kv_small_runs():
    return fit_problem(pb.kv_dataset(KvLimit.SMALL_DELTA))


@pytest.fixture(scope="module")
def kv_large_runs():
    return fit_problem(pb.kv_dataset(KvLimit.LARGE_DELTA))


@pytest.fixture(scope="module")
def lamb_runs():
    # The bending-mode target has no exact arithmetic form, so the default
    # parsimony equilibrium caps accuracy well above what the A-ratio needs;
    # the SR path runs a longer, almost-unpenalized search (still best-of-5,
    # seeds 0-4).
    cfg = gp.GpConfig(seed=SEED, parsimony_coefficient=1e-9, generations=60)
    ds = pb.lamb_dataset()
    t0 = time.time()
    results, best_idx = gp.multi_run(cfg, ds)
    return results, best_idx, time.time() - t0


def collision_exact_fn(regime):
    return {
        CollisionRegime.SMALL_DELTA: pb.collision_exact,
        CollisionRegime.NEAR_UNIT: lambda p: pb.collision_exact(1.0 + 2.0 * p),
        CollisionRegime.LARGE_DELTA: lambda p: pb.collision_exact(1.0 / p),
    }[regime]


def test_criterion_1_collision_coefficient_recovery(collision_runs):
    """Best-of-5 series matches the exact expansions to order 5 within 0.05."""
    details = []
    for regime in CollisionRegime:
        results, best_idx, elapsed = collision_runs[regime]
        assert elapsed <= 300.0, f"{regime.value}: 5 runs took {elapsed:.0f}s"
        ds = pb.collision_dataset(regime)
        best = results[best_idx]
        assert best.best.raw_fitness <= 1e-6, (regime.value, best.best.raw_fitness)
        prange = (float(ds.parameter_grid.min()), float(ds.parameter_grid.max()))
        ext = st.extract_series(best.best.tree, ds.feature_spec, ds.param_name, prange)
        bench = pb.collision_benchmark_series(regime, 8)
        deltas = st.compare_series(ext.series, bench, 5)
        worst = max(d.abs_delta for d in deltas)
        assert worst <= 0.05, (regime.value, [(d.power, d.abs_delta) for d in deltas])
        details.append(f"{regime.value}: raw={best.best.raw_fitness:.2e} max|dc|={worst:.4f} ({elapsed:.0f}s)")
    print("\nCRITERION 1 PASS — " + "; ".join(details))


def test_criterion_2_benchmark_convergence_slope():
    """Truncation error has log-log slope n+1 (within 0.1) at parameter 0.05."""
    slopes = []
    for regime in CollisionRegime:
        bench = pb.collision_benchmark_series(regime, 8)
        exact = collision_exact_fn(regime)
        for n in range(1, 6):
            p1, p2 = 0.045, 0.05
            e1 = abs(st.series_eval(bench, p1, n) - exact(p1))
            e2 = abs(st.series_eval(bench, p2, n) - exact(p2))
            slope = math.log(e2 / e1) / math.log(p2 / p1)
            assert abs(slope - (n + 1)) <= 0.1, (regime.value, n, slope)
            slopes.append(slope)
    print(f"\nCRITERION 2 PASS — 15 slopes within 0.1 of n+1 (worst offset "
          f"{max(abs(s - round(s)) for s in slopes):.3f})")


def test_criterion_3_special_function_oracle_equivalence():
    """(e^(1/d)/d) E1(1/d) agrees with quadrature to 1e-10 over 40 points."""
    t0 = time.time()
    worst = 0.0
    for d in np.geomspace(2e-4, 50.0, 40):
        closed = pb.kv_integral_exact(float(d))
        oracle = kv_integral_quadrature_oracle(float(d))
        rel = abs(closed - oracle) / abs(oracle)
        worst = max(worst, rel)
        assert rel <= 1e-10, (d, rel)
    elapsed = time.time() - t0
    assert elapsed < 5.0
    print(f"\nCRITERION 3 PASS — worst relative deviation {worst:.2e} in {elapsed:.2f}s")


def test_criterion_4_divergent_optimal_truncation():
    """The divergent expansion at delta = 0.2 truncates optimally at n = 4."""
    t0 = time.time()
    bench = pb.kv_benchmark_series(KvLimit.SMALL_DELTA, 8)
    n_opt = st.optimal_truncation(bench, pb.kv_integral_exact, 0.2, 8)
    assert n_opt == 4
    assert time.time() - t0 < 1.0
    print("\nCRITERION 4 PASS — optimal truncation order 4 at delta = 0.2")


def test_criterion_5_kv_sr_beats_optimal_truncation(kv_small_runs):
    """Best-of-5 SR fit beats the n=4 analytic truncation on the training grid."""
    results, best_idx, elapsed = kv_small_runs
    assert elapsed <= 600.0
    ds = pb.kv_dataset(KvLimit.SMALL_DELTA)
    best = results[best_idx]
    preds = evaluate_matrix(best.best.tree, ds.inputs)
    sr_rrmse = st.rrmse(preds, ds.target)
    bench = pb.kv_benchmark_series(KvLimit.SMALL_DELTA, 8)
    bench_rrmse = min(
        st.rrmse([st.series_eval(bench, float(p), n) for p in ds.parameter_grid], ds.target)
        for n in range(9)
    )
    assert sr_rrmse < bench_rrmse, (sr_rrmse, bench_rrmse)
    print(f"\nCRITERION 5 PASS — SR RRMSE {sr_rrmse:.2e} < analytic optimum {bench_rrmse:.2e} ({elapsed:.0f}s)")


def test_criterion_6_kv_large_leading_terms(kv_large_runs):
    """Best-of-5 fit recovers the eta log(eta) and eta coefficients of the expansion."""
    results, best_idx, elapsed = kv_large_runs
    assert elapsed <= 600.0
    ds = pb.kv_dataset(KvLimit.LARGE_DELTA)
    best = results[best_idx]
    prange = (float(ds.parameter_grid.min()), float(ds.parameter_grid.max()))
    ext = st.extract_series(best.best.tree, ds.feature_spec, ds.param_name, prange)
    c11 = ext.series.coefficient(1, 1)
    c10 = ext.series.coefficient(1, 0)
    assert abs(c11 - (-1.0)) <= 0.05, c11
    assert abs(c10 - (-EULER_GAMMA)) <= 0.05, c10
    print(f"\nCRITERION 6 PASS — c(eta log eta)={c11:.4f} (target -1), "
          f"c(eta)={c10:.4f} (target {-EULER_GAMMA:.4f}) ({elapsed:.0f}s)")


def test_criterion_7_dispersion_solver_vs_asymptotics():
    """Solver roots match the n=3 partial sum within 0.5% with tiny residuals."""
    t0 = time.time()
    bench = pb.lamb_benchmark_series(NU_REF, 3)
    rows = []
    for omega in (0.025, 0.05, 0.1):
        K = pb.lamb_solve_K(omega, NU_REF)
        series_k4 = st.series_eval(bench, omega)
        ratio = K ** 4 / series_k4 - 1.0
        residual = pb.lamb_dispersion_residual(K, omega, NU_REF)
        assert abs(ratio) <= 5e-3, (omega, ratio)
        assert abs(residual) <= 1e-12, (omega, residual)
        rows.append(f"Omega={omega}: |ratio-1|={abs(ratio):.1e}, |res|={abs(residual):.1e}")
    assert time.time() - t0 < 1.0
    print("\nCRITERION 7 PASS — " + "; ".join(rows))


def test_criterion_8_poisson_recovery(lamb_runs):
    """Poisson's ratio recovered from the bending-mode coefficients."""
    # deterministic path: orders 2-5 fit of the exact dataset
    ds = pb.lamb_dataset()
    fit = pb.lamb_polynomial_fit(ds.parameter_grid, ds.target)
    ratios = st.lamb_A_from_fit(fit)
    nu1 = pb.poisson_from_a1(ratios.a1)
    nu2 = pb.poisson_from_a2(ratios.a2)
    assert abs(nu1 - NU_REF) <= 0.05, nu1
    assert abs(nu2 - NU_REF) <= 0.05, nu2

    # reference inputs reproduce the published two-decimal values
    assert round(pb.poisson_from_a1(1.48), 2) == 0.36
    assert round(pb.poisson_from_a2(0.71), 2) == 0.38

    # SR path: the best-of-5 fit's predictions, refit on {Omega^2..Omega^5}
    results, best_idx, elapsed = lamb_runs
    best = results[best_idx]
    preds = evaluate_matrix(best.best.tree, ds.inputs)
    a1_sr = st.lamb_A_from_fit(pb.lamb_polynomial_fit(ds.parameter_grid, preds)).a1
    nu_sr = pb.poisson_from_a1(a1_sr)
    assert 0.30 <= nu_sr <= 0.42, (a1_sr, nu_sr)
    print(f"\nCRITERION 8 PASS — deterministic nu(A1)={nu1:.4f}, nu(A2)={nu2:.4f}; "
          f"reference checks 0.36/0.38; SR best-run A1={a1_sr:.4f} -> nu={nu_sr:.4f} ({elapsed:.0f}s)")


def test_criterion_9_engine_property_suite():
    """A million random variations keep every structural invariant intact."""
    t0 = time.time()
    cfg = gp.GpConfig()
    rng = np.random.default_rng(123)
    pool = [
        gp.random_tree(rng, 2, cfg.erc_range, int(rng.integers(0, 6)), "grow" if i % 2 else "full")
        for i in range(256)
    ]
    n_ops = 1_000_000
    counts = {"crossover": 0, "subtree": 0, "point": 0, "hoist": 0}
    for i in range(n_ops):
        a = pool[i % 256]
        kind = i & 3
        if kind == 0:
            b = pool[(i * 31 + 7) % 256]
            child = gp.crossover(a, b, rng, cfg.depth_cap)
            counts["crossover"] += 1
        elif kind == 1:
            child = gp.subtree_mutation(a, cfg, 2, rng)
            counts["subtree"] += 1
        elif kind == 2:
            child = gp.point_mutation(a, cfg, 2, rng)
            counts["point"] += 1
            assert child.length == a.length and child.depth == a.depth
        else:
            child = gp.hoist_mutation(a, rng)
            counts["hoist"] += 1
            assert child.length <= a.length
        ec.audit_tree(child)
        assert child.depth <= cfg.depth_cap
        if child.length <= 60 and (i & 7) == 0:
            pool[i % 256] = child
    elapsed = time.time() - t0
    assert elapsed < 120.0, f"property suite took {elapsed:.0f}s"

    # fixed-seed evolve is bit-identical across worker counts
    from asymptox.dataset import Dataset, Feature

    params = np.linspace(0.1, 1.0, 20)
    ds = Dataset.build("x", params, [Feature("power", 1)], params ** 2 + 1.0)
    cfg_small = gp.GpConfig(population_size=150, generations=3, tournament_size=7, seed=5)
    assert gp.evolve(cfg_small, ds, workers=1) == gp.evolve(cfg_small, ds, workers=4)
    print(f"\nCRITERION 9 PASS — {n_ops} audited variations {counts} in {elapsed:.0f}s; "
          f"worker-count invariance holds")
