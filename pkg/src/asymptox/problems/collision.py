"""Two-mass collision problem: exact solution, datasets and benchmark series.

The rebound velocity ratio u1 = (delta - 1)/(delta + 1) of the striking mass
admits convergent expansions in three limits of the mass ratio delta: a light
projectile (delta << 1), nearly equal masses (theta = (delta - 1)/2) and a
heavy projectile (eta = 1/delta).
"""

from __future__ import annotations

import enum

import numpy as np

from ..numerics import DomainError
from ..series_tools import Series
from ..dataset import Dataset, Feature

__all__ = [
    "CollisionRegime",
    "collision_exact",
    "collision_u2",
    "collision_dataset",
    "collision_benchmark_series",
    "DEFAULT_COLLISION_RANGE",
]

DEFAULT_COLLISION_RANGE = (0.005, 0.1)


class CollisionRegime(str, enum.Enum):
    SMALL_DELTA = "small_delta"
    NEAR_UNIT = "near_unit"
    LARGE_DELTA = "large_delta"

    @property
    def param_name(self) -> str:
        return {"small_delta": "delta", "near_unit": "theta", "large_delta": "eta"}[self.value]


def collision_exact(delta: float) -> float:
    """Velocity ratio u1 = v1/v0 after an elastic head-on collision."""
    if delta <= 0:
        raise DomainError(f"mass ratio must be positive, got {delta}")
    return (delta - 1.0) / (delta + 1.0)


def collision_u2(delta: float) -> float:
    """Companion ratio u2 = v2/v0 = delta * (1 - u1); not used as a dataset."""
    return delta * (1.0 - collision_exact(delta))


def _delta_from_param(regime: CollisionRegime, p: np.ndarray) -> np.ndarray:
    if regime is CollisionRegime.SMALL_DELTA:
        return p
    if regime is CollisionRegime.NEAR_UNIT:
        return 1.0 + 2.0 * p
    return 1.0 / p


def collision_dataset(
    regime: CollisionRegime,
    n_points: int = 20,
    param_range: tuple[float, float] = DEFAULT_COLLISION_RANGE,
    max_power: int = 1,
) -> Dataset:
    """Uniform grid of the regime's small parameter with u1 as target.

    ``max_power=1`` is the single-input strategy; larger values provide the
    powers {p, p^2, ..., p^k} as separate input columns.
    """
    lo, hi = param_range
    if not lo < hi:
        raise ValueError(f"empty parameter range [{lo}, {hi}]")
    floor = -0.5 if regime is CollisionRegime.NEAR_UNIT else 0.0
    if lo < floor or (regime is not CollisionRegime.NEAR_UNIT and lo <= 0.0):
        raise ValueError(f"range [{lo}, {hi}] invalid for regime {regime.value}")
    if max_power < 1:
        raise ValueError("max_power must be >= 1")
    regime = CollisionRegime(regime)
    params = np.linspace(lo, hi, n_points)
    deltas = _delta_from_param(regime, params)
    target = (deltas - 1.0) / (deltas + 1.0)
    features = [Feature("power", k) for k in range(1, max_power + 1)]
    return Dataset.build(regime.param_name, params, features, target)


def collision_benchmark_series(regime: CollisionRegime, order: int) -> Series:
    """Exact expansion coefficients of u1 in the regime's small parameter."""
    if order < 0:
        raise ValueError("order must be >= 0")
    regime = CollisionRegime(regime)
    terms = []
    if regime is CollisionRegime.SMALL_DELTA:
        # -1 + 2 d - 2 d^2 + 2 d^3 - ...
        terms.append((0, 0, -1.0))
        terms += [(k, 0, 2.0 * (-1.0) ** (k + 1)) for k in range(1, order + 1)]
    elif regime is CollisionRegime.NEAR_UNIT:
        # t - t^2 + t^3 - ...
        terms += [(k, 0, (-1.0) ** (k + 1)) for k in range(1, order + 1)]
    else:
        # 1 - 2 e + 2 e^2 - ...
        terms.append((0, 0, 1.0))
        terms += [(k, 0, 2.0 * (-1.0) ** k) for k in range(1, order + 1)]
    return Series.from_terms(regime.param_name, terms)
