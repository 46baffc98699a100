"""Experiment runner: dataset generation, seeded SR fits, series comparison
tables, RRMSE surfaces, optimal-truncation reports and Poisson-ratio recovery.

Subcommands: generate, fit, analyze, benchmark, poisson.  Settings come from
built-in defaults, then an optional ``key = value`` config file, then flags;
flags win.  All randomness flows from the single ``seed`` value.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import plots
from .dataset import Dataset, load_dataset
from .expr_core import evaluate_matrix, to_canonical_string
from .gp_engine import GpConfig, multi_run
from .numerics import DomainError
from .problems import (
    CollisionRegime,
    KvLimit,
    LambConfig,
    collision_benchmark_series,
    collision_dataset,
    collision_exact,
    kv_benchmark_series,
    kv_dataset,
    kv_integral_exact,
    lamb_benchmark_series,
    lamb_dataset,
    lamb_polynomial_fit,
    lamb_solve_K,
    poisson_from_a1,
    poisson_from_a2,
)
from .series_tools import (
    Series,
    compare_series,
    extract_series,
    lamb_A_from_fit,
    optimal_truncation,
    rrmse_surface,
    series_eval,
)

PROBLEMS = ("collision", "kelvin_voigt", "rayleigh_lamb")
REGIMES = {
    "collision": ("small_delta", "near_unit", "large_delta"),
    "kelvin_voigt": ("small_delta", "large_delta"),
    "rayleigh_lamb": (None,),
}

OUT_ENV_VAR = "ASYMPTOX_OUT"


class CliError(Exception):
    """Invalid invocation or unproducible artifact; maps to a nonzero exit."""


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _git_blob_sha1(data: bytes) -> str:
    return hashlib.sha1(b"blob %d\x00" % len(data) + data).hexdigest()


def read_config_file(path) -> dict:
    """Parse a plain ``key = value`` file (TOML-compatible subset)."""
    values: dict[str, object] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise CliError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if value.startswith('"'):
            end = value.find('"', 1)
            if end < 0:
                raise CliError(f"{path}:{lineno}: unterminated string")
            values[key] = value[1:end]
            continue
        value = value.split("#", 1)[0].strip()
        if value.lower() in ("true", "false"):
            values[key] = value.lower() == "true"
            continue
        try:
            values[key] = int(value)
        except ValueError:
            try:
                values[key] = float(value)
            except ValueError:
                values[key] = value
    return values


def _setting(args, config: dict, key: str, default):
    flag = getattr(args, key, None)
    if flag is not None:
        return flag
    if key in config:
        return config[key]
    return default


def _resolve_out(args, config) -> Path:
    out = _setting(args, config, "out", None)
    if out is None:
        out = os.environ.get(OUT_ENV_VAR, "out")
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_csv(path: Path, header: str, rows) -> None:
    lines = [header]
    lines += [",".join(str(c) if isinstance(c, (str, int)) else _fmt(c) for c in row) for row in rows]
    path.write_text("\n".join(lines) + "\n", newline="\n")


def _series_to_csv(series: Series, path: Path) -> None:
    _write_csv(path, "power,log_power,coefficient",
               [(t.power, t.log_power, t.coefficient) for t in series.terms])


def _series_from_csv(path: Path, variable: str) -> Series:
    lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines or lines[0] != "power,log_power,coefficient":
        raise CliError(f"{path}: not a series CSV")
    terms = []
    for ln in lines[1:]:
        a, b, c = ln.split(",")
        terms.append((int(a), int(b), float(c)))
    if not terms:
        raise CliError(f"{path}: series file has no terms")
    return Series.from_terms(variable, terms)


def _problem_selector(args, config) -> tuple[str, str | None]:
    problem = _setting(args, config, "problem", None)
    if problem not in PROBLEMS:
        raise CliError(f"--problem must be one of {PROBLEMS}, got {problem!r}")
    regime = _setting(args, config, "regime", None)
    if problem == "rayleigh_lamb":
        if regime is not None:
            raise CliError("rayleigh_lamb takes no --regime")
        return problem, None
    if regime not in REGIMES[problem]:
        raise CliError(f"--regime for {problem} must be one of {REGIMES[problem]}, got {regime!r}")
    return problem, regime


def _build_dataset(problem: str, regime: str | None, args, config) -> Dataset:
    n_points = int(_setting(args, config, "points", 20))
    lo = _setting(args, config, "lo", None)
    hi = _setting(args, config, "hi", None)
    rng_pair = None if lo is None or hi is None else (float(lo), float(hi))
    if problem == "collision":
        powers = int(_setting(args, config, "powers", 1))
        return collision_dataset(CollisionRegime(regime), n_points, rng_pair or (0.005, 0.1), powers)
    if problem == "kelvin_voigt":
        with_log = bool(_setting(args, config, "with_log", True))
        return kv_dataset(KvLimit(regime), n_points, rng_pair, with_log)
    nu = float(_setting(args, config, "nu", 0.3455))
    olo, ohi = rng_pair or (0.025, 0.5)
    return lamb_dataset(LambConfig.from_range(nu, olo, ohi, n_points))


def _benchmark_series(problem: str, regime: str | None, order: int, nu: float) -> Series:
    if problem == "collision":
        return collision_benchmark_series(CollisionRegime(regime), order)
    if problem == "kelvin_voigt":
        if regime == "large_delta":
            order = min(order, 4)
        return kv_benchmark_series(KvLimit(regime), order)
    return lamb_benchmark_series(nu, min(order, 3))


def _exact_fn(problem: str, regime: str | None, nu: float):
    if problem == "collision":
        to_delta = {
            "small_delta": lambda p: p,
            "near_unit": lambda p: 1.0 + 2.0 * p,
            "large_delta": lambda p: 1.0 / p,
        }[regime]
        return lambda p: collision_exact(to_delta(p))
    if problem == "kelvin_voigt":
        if regime == "small_delta":
            return kv_integral_exact
        return lambda p: kv_integral_exact(1.0 / p)
    return lambda w: lamb_solve_K(w, nu) ** 4


def cmd_generate(args, config) -> int:
    problem, regime = _problem_selector(args, config)
    out = _resolve_out(args, config)
    ds = _build_dataset(problem, regime, args, config)
    csv_path = out / "dataset.csv"
    ds.to_csv(csv_path)
    meta = {
        "problem": problem,
        "regime": regime,
        "param_name": ds.param_name,
        "n_points": ds.n_rows,
        "param_range": [ds.parameter_grid.min(), ds.parameter_grid.max()],
        "features": list(ds.feature_names),
        "content_hash": _git_blob_sha1(csv_path.read_bytes()),
    }
    (out / "dataset.meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    print(f"wrote {csv_path} ({ds.n_rows} rows) and sidecar")
    return 0


def _gp_config(args, config) -> GpConfig:
    cfg = GpConfig()
    fields = {
        "population": "population_size",
        "generations": "generations",
        "tournament": "tournament_size",
        "parsimony": "parsimony_coefficient",
        "stop": "fitness_stop",
        "seed": "seed",
        "runs": "n_runs",
    }
    updates = {}
    for key, attr in fields.items():
        val = _setting(args, config, key, None)
        if val is not None:
            cast = type(getattr(cfg, attr))
            updates[attr] = cast(val)
    return replace(cfg, **updates)


def cmd_fit(args, config) -> int:
    problem, regime = _problem_selector(args, config)
    out = _resolve_out(args, config)
    data_path = _setting(args, config, "data", None)
    ds = load_dataset(data_path) if data_path else _build_dataset(problem, regime, args, config)
    ds.to_csv(out / "dataset.csv")
    gp_cfg = _gp_config(args, config)
    workers = int(_setting(args, config, "workers", 1))
    figures = bool(_setting(args, config, "figures", True))
    nu = float(_setting(args, config, "nu", 0.3455))

    results, best_idx = multi_run(gp_cfg, ds, workers)
    names = list(ds.feature_tokens)
    for r in results:
        _write_csv(
            out / f"run_{r.seed}.csv",
            "generation,best_raw,best_penalized,best_length",
            [
                (g, r.raw_history[g], r.fitness_history[g], r.length_history[g])
                for g in range(len(r.fitness_history))
            ],
        )
        (out / f"best_{r.seed}.txt").write_text(to_canonical_string(r.best.tree, names) + "\n")
    _write_csv(
        out / "summary.csv",
        "seed,raw_fitness,penalized_fitness,length,generations,stop_reason,is_best",
        [
            (r.seed, r.best.raw_fitness, r.best.penalized_fitness, r.best.tree.length,
             r.generations_run, r.stop_reason, int(i == best_idx))
            for i, r in enumerate(results)
        ],
    )

    prange = (float(ds.parameter_grid.min()), float(ds.parameter_grid.max()))
    best = results[best_idx]
    extraction = extract_series(best.best.tree, ds.feature_spec, ds.param_name, prange)
    _series_to_csv(extraction.series, out / "series_best.csv")
    (out / "series_best.txt").write_text(
        str(extraction.series)
        + f"\n# method: {extraction.method}, residual: {extraction.residual:.3g}\n"
        + "".join(f"# warning: {w}\n" for w in extraction.warnings)
    )

    order = int(_setting(args, config, "orders", 8))
    bench = _benchmark_series(problem, regime, order, nu)
    deltas = compare_series(extraction.series, bench, order)
    _write_csv(
        out / "comparison.csv",
        "power,log_power,found,benchmark,abs_delta",
        [(d.power, d.log_power, d.found, d.benchmark, d.abs_delta) for d in deltas],
    )

    if problem == "rayleigh_lamb":
        _write_poisson_table(out, results, ds)

    if figures:
        plots.save_fit_plot(ds, best.best.tree, out / "fit.png")
        plots.save_history_plot(results, out / "history.png")

    print(f"best run: seed {best.seed}, raw fitness {best.best.raw_fitness:.6g}")
    print(f"best series: {extraction.series}")
    for w in extraction.warnings:
        print(f"warning: {w}")
    return 0


def _write_poisson_table(out: Path, results, ds: Dataset) -> None:
    """Per-run A1/A2 and Poisson estimates plus a mean row.

    Each run's K^4 predictions are refit on {Omega^2..Omega^5} and the A
    ratios taken against the Omega^2 coefficient.
    """
    rows = []
    a1s, a2s = [], []
    for r in results:
        preds = evaluate_matrix(r.best.tree, ds.inputs)
        try:
            ratios = lamb_A_from_fit(lamb_polynomial_fit(ds.parameter_grid, preds))
        except ValueError:
            rows.append((r.seed, "nan", "nan", "nan", "nan"))
            continue
        a1s.append(ratios.a1)
        a2s.append(ratios.a2)
        rows.append((r.seed, ratios.a1, ratios.a2, _try_nu(poisson_from_a1, ratios.a1), _try_nu(poisson_from_a2, ratios.a2)))
    if a1s:
        ma1 = float(np.mean(a1s))
        ma2 = float(np.mean(a2s))
        rows.append(("mean", ma1, ma2, _try_nu(poisson_from_a1, ma1), _try_nu(poisson_from_a2, ma2)))
    _write_csv(out / "poisson_table.csv", "run,A1,A2,nu_from_A1,nu_from_A2", rows)


def _try_nu(fn, value):
    try:
        return fn(value)
    except DomainError:
        return "nan"


def cmd_analyze(args, config) -> int:
    problem, regime = _problem_selector(args, config)
    out = _resolve_out(args, config)
    figures = bool(_setting(args, config, "figures", True))
    nu = float(_setting(args, config, "nu", 0.3455))
    n_max = int(_setting(args, config, "orders", 8))
    if problem == "kelvin_voigt" and regime == "large_delta":
        n_max = min(n_max, 4)
    if problem == "rayleigh_lamb":
        n_max = min(n_max, 3)

    defaults = {
        ("collision", None): (0.005, 0.1),
        ("kelvin_voigt", "small_delta"): (2e-4, 0.2),
        ("kelvin_voigt", "large_delta"): (0.005, 0.05),
        ("rayleigh_lamb", None): (0.025, 0.5),
    }
    key = (problem, regime if problem == "kelvin_voigt" else None)
    glo = float(_setting(args, config, "grid_lo", defaults[key][0]))
    ghi = float(_setting(args, config, "grid_hi", defaults[key][1]))
    gpoints = int(_setting(args, config, "grid_points", 50))
    grid = np.geomspace(glo, ghi, gpoints)

    exact = _exact_fn(problem, regime, nu)
    bench = _benchmark_series(problem, regime, n_max, nu)
    orders = list(range(n_max + 1))

    surface = rrmse_surface(bench, exact, grid, n_max)
    _write_csv(out / "surface_benchmark.csv", "order,param,rrmse",
               [(n, p, surface[n, j]) for n in orders for j, p in enumerate(grid)])

    sr_path = _setting(args, config, "series", None)
    sr_series = None
    candidate = Path(sr_path) if sr_path else out / "series_best.csv"
    if candidate.exists():
        sr_series = _series_from_csv(candidate, bench.variable)
        sr_surface = rrmse_surface(sr_series, exact, grid, n_max)
        _write_csv(out / "surface_sr.csv", "order,param,rrmse",
                   [(n, p, sr_surface[n, j]) for n in orders for j, p in enumerate(grid)])
    elif sr_path:
        raise CliError(f"series file {sr_path} not found")

    trunc = [(p, optimal_truncation(bench, exact, p, n_max)) for p in grid]
    _write_csv(out / "truncation.csv", "param,optimal_order", trunc)

    if figures:
        plots.save_surface_plot(orders, grid, surface, out / "surface_benchmark.png",
                                title="benchmark series RRMSE")
        curves = {"benchmark": surface[:, -1]}
        if sr_series is not None:
            curves["SR"] = sr_surface[:, -1]
        plots.save_error_vs_order_plot(curves, orders, out / "error_vs_order.png",
                                       title=f"RRMSE at {bench.variable} = {grid[-1]:g}")
        plots.save_truncation_plot(grid, [t[1] for t in trunc], out / "truncation.png")

    print(f"wrote surfaces and truncation table to {out}")
    return 0


def cmd_benchmark(args, config) -> int:
    problem, regime = _problem_selector(args, config)
    out = _resolve_out(args, config)
    figures = bool(_setting(args, config, "figures", True))
    nu = float(_setting(args, config, "nu", 0.3455))
    n_max = int(_setting(args, config, "orders", 8))
    if problem == "kelvin_voigt" and regime == "large_delta":
        n_max = min(n_max, 4)
    if problem == "rayleigh_lamb":
        n_max = min(n_max, 3)

    bench = _benchmark_series(problem, regime, n_max, nu)
    _series_to_csv(bench, out / "benchmark_series.csv")

    ds = _build_dataset(problem, regime, args, config)
    exact = _exact_fn(problem, regime, nu)
    rows = []
    for p in ds.parameter_grid:
        for n in range(n_max + 1):
            val = series_eval(bench, float(p), n)
            rows.append((p, n, val, exact(float(p)), abs(val - exact(float(p)))))
    _write_csv(out / "benchmark_values.csv", "param,order,value,exact,abs_err", rows)

    if figures:
        shown = sorted({0, 1, 2, min(3, n_max), n_max})
        plots.save_benchmark_plot(bench, exact, ds.parameter_grid, shown, out / "benchmark.png")

    print(f"benchmark series ({bench.variable}): {bench}")
    return 0


def cmd_poisson(args, config) -> int:
    a1_values = args.a1 or []
    a2_values = args.a2 or []
    if not a1_values and not a2_values:
        raise CliError("poisson needs at least one --a1 or --a2 value")
    rows = []
    for label, values, invert in (("A1", a1_values, poisson_from_a1), ("A2", a2_values, poisson_from_a2)):
        for v in values:
            try:
                nu = invert(v)
                rows.append((label, v, nu))
                print(f"{label} = {v:g} -> nu = {nu:.2f}")
            except DomainError as exc:
                rows.append((label, v, "nan"))
                print(f"{label} = {v:g} -> domain error: {exc}")
        if values:
            # summary row inverts the mean coefficient, not the mean of inversions
            mean_v = float(np.mean(values))
            try:
                nu = f"{invert(mean_v):.2f}"
            except DomainError:
                nu = "domain error"
            rows.append((f"{label}_mean", mean_v, nu if nu != "domain error" else "nan"))
            print(f"{label} mean = {mean_v:g} -> nu = {nu}")
    if getattr(args, "out", None):
        out = _resolve_out(args, config)
        _write_csv(out / "poisson.csv", "coefficient,value,nu", rows)
    return 0


def _add_common(sub: argparse.ArgumentParser, with_problem: bool = True) -> None:
    sub.add_argument("--config", type=str, help="key = value settings file; flags win")
    sub.add_argument("--out", type=str, help=f"output directory (default ${OUT_ENV_VAR} or ./out)")
    if with_problem:
        sub.add_argument("--problem", choices=PROBLEMS)
        sub.add_argument("--regime", type=str, help="regime/limit selector for the chosen problem")
        sub.add_argument("--points", type=int, help="training points (default 20)")
        sub.add_argument("--range", dest="range_pair", nargs=2, type=float, metavar=("LO", "HI"),
                         help="parameter range")
        sub.add_argument("--powers", type=int, help="collision: provide powers p..p^K as inputs")
        sub.add_argument("--no-log", dest="with_log", action="store_false", default=None,
                         help="kelvin_voigt large_delta: drop the log(eta) input")
        sub.add_argument("--nu", type=float, help="Poisson ratio (rayleigh_lamb; default 0.3455)")
        sub.add_argument("--orders", type=int, help="benchmark/analysis truncation order cap")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="asymptox",
                                     description="symbolic regression of asymptotic expansions")
    subs = parser.add_subparsers(dest="command", required=True)

    gen = subs.add_parser("generate", help="write a training dataset CSV plus provenance sidecar")
    _add_common(gen)

    fit = subs.add_parser("fit", help="run seeded SR fits and extract the best series")
    _add_common(fit)
    fit.add_argument("--data", type=str, help="existing dataset CSV (default: generate inline)")
    fit.add_argument("--seed", type=int, help="base seed (runs use seed, seed+1, ...)")
    fit.add_argument("--runs", type=int, help="number of seeded runs (default 5)")
    fit.add_argument("--workers", type=int, help="fitness-evaluation workers (result-invariant)")
    fit.add_argument("--population", type=int)
    fit.add_argument("--generations", type=int)
    fit.add_argument("--tournament", type=int)
    fit.add_argument("--parsimony", type=float)
    fit.add_argument("--stop", type=float, help="penalized-fitness stop threshold")
    fit.add_argument("--no-figures", dest="figures", action="store_false", default=None)

    ana = subs.add_parser("analyze", help="RRMSE surfaces and optimal-truncation tables")
    _add_common(ana)
    ana.add_argument("--series", type=str, help="extracted-series CSV (default: <out>/series_best.csv)")
    ana.add_argument("--grid-lo", dest="grid_lo", type=float)
    ana.add_argument("--grid-hi", dest="grid_hi", type=float)
    ana.add_argument("--grid-points", dest="grid_points", type=int)
    ana.add_argument("--no-figures", dest="figures", action="store_false", default=None)

    ben = subs.add_parser("benchmark", help="evaluate the analytic benchmark series only")
    _add_common(ben)
    ben.add_argument("--no-figures", dest="figures", action="store_false", default=None)

    poi = subs.add_parser("poisson", help="invert A1/A2 coefficients for Poisson's ratio")
    poi.add_argument("--a1", nargs="+", type=float, help="A1 values")
    poi.add_argument("--a2", nargs="+", type=float, help="A2 values")
    poi.add_argument("--config", type=str)
    poi.add_argument("--out", type=str, help="also write poisson.csv here")
    return parser


COMMANDS = {
    "generate": cmd_generate,
    "fit": cmd_fit,
    "analyze": cmd_analyze,
    "benchmark": cmd_benchmark,
    "poisson": cmd_poisson,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "range_pair", None) is not None:
        args.lo, args.hi = args.range_pair
    try:
        config = read_config_file(args.config) if getattr(args, "config", None) else {}
        return COMMANDS[args.command](args, config)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
