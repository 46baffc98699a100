"""asymptox: symbolic regression toolkit for discovering asymptotic expansions.

Evolves arithmetic expression trees against data sampled from exact mechanics
solutions (two-mass collision, Kelvin-Voigt relaxation, Rayleigh-Lamb bending
waves), extracts asymptotic series from the winners and compares them with
benchmark expansions.
"""

from . import expr_core, gp_engine, numerics, problems, series_tools
from .dataset import Dataset, Feature, load_dataset
from .expr_core import ExprTree, evaluate, parse_expression, to_canonical_string
from .gp_engine import GpConfig, Individual, RunResult, evolve, multi_run
from .series_tools import Series, compare_series, extract_series, optimal_truncation, rrmse, rrmse_surface, series_eval

__version__ = "0.1.0"

__all__ = [
    "expr_core",
    "gp_engine",
    "numerics",
    "problems",
    "series_tools",
    "Dataset",
    "Feature",
    "load_dataset",
    "ExprTree",
    "evaluate",
    "parse_expression",
    "to_canonical_string",
    "GpConfig",
    "Individual",
    "RunResult",
    "evolve",
    "multi_run",
    "Series",
    "series_eval",
    "extract_series",
    "compare_series",
    "rrmse",
    "rrmse_surface",
    "optimal_truncation",
    "__version__",
]
