"""Built-in problem generators: exact oracles, datasets and benchmark series."""

from ..dataset import Dataset, Feature, feature_matrix, load_dataset
from .collision import (
    DEFAULT_COLLISION_RANGE,
    CollisionRegime,
    collision_benchmark_series,
    collision_dataset,
    collision_exact,
    collision_u2,
)
from .kelvin_voigt import (
    DEFAULT_KV_LARGE_RANGE,
    DEFAULT_KV_SMALL_RANGE,
    KvLimit,
    kv_benchmark_series,
    kv_dataset,
    kv_integral_exact,
)
from .rayleigh_lamb import (
    DEFAULT_NU,
    DEFAULT_OMEGA_RANGE,
    LambConfig,
    lamb_benchmark_coeffs,
    lamb_benchmark_series,
    lamb_dataset,
    lamb_dispersion_residual,
    lamb_polynomial_fit,
    lamb_solve_K,
    poisson_from_a1,
    poisson_from_a2,
)

__all__ = [
    "Dataset",
    "Feature",
    "feature_matrix",
    "load_dataset",
    "CollisionRegime",
    "collision_exact",
    "collision_u2",
    "collision_dataset",
    "collision_benchmark_series",
    "DEFAULT_COLLISION_RANGE",
    "KvLimit",
    "kv_integral_exact",
    "kv_benchmark_series",
    "kv_dataset",
    "DEFAULT_KV_SMALL_RANGE",
    "DEFAULT_KV_LARGE_RANGE",
    "LambConfig",
    "lamb_dispersion_residual",
    "lamb_solve_K",
    "lamb_dataset",
    "lamb_benchmark_coeffs",
    "lamb_benchmark_series",
    "lamb_polynomial_fit",
    "poisson_from_a1",
    "poisson_from_a2",
    "DEFAULT_NU",
    "DEFAULT_OMEGA_RANGE",
]
