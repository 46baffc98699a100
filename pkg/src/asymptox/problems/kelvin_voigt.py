"""Kelvin-Voigt relaxation integral I(delta) and its two benchmark expansions.

I(delta) = int_0^inf e^-x / (1 + delta x) dx = (e^(1/delta)/delta) * E1(1/delta).
The small-delta expansion sum_k (-1)^k k! delta^k is divergent; the large-delta
expansion in eta = 1/delta carries log(eta) terms.
"""

from __future__ import annotations

import enum

import numpy as np

from ..numerics import EULER_GAMMA, DomainError, exp_integral_e1_scaled
from ..series_tools import Series
from ..dataset import Dataset, Feature

__all__ = [
    "KvLimit",
    "kv_integral_exact",
    "kv_benchmark_series",
    "kv_dataset",
    "DEFAULT_KV_SMALL_RANGE",
    "DEFAULT_KV_LARGE_RANGE",
]

DEFAULT_KV_SMALL_RANGE = (2e-4, 0.2)
# Narrow enough that the eta log(eta) leading term dominates the signal;
# wider windows let the regression trade leading-term accuracy for
# higher-order shape.
DEFAULT_KV_LARGE_RANGE = (0.005, 0.05)


class KvLimit(str, enum.Enum):
    SMALL_DELTA = "small_delta"
    LARGE_DELTA = "large_delta"

    @property
    def param_name(self) -> str:
        return "delta" if self is KvLimit.SMALL_DELTA else "eta"


def kv_integral_exact(delta: float) -> float:
    """I(delta) via the scaled exponential integral x e^x E1(x) with x = 1/delta.

    The scaled form never materialises e^(1/delta), so the result is finite
    for arbitrarily small delta.
    """
    if delta <= 0:
        raise DomainError(f"relaxation integral requires delta > 0, got {delta}")
    x = 1.0 / delta
    return x * exp_integral_e1_scaled(x)


def kv_benchmark_series(limit: KvLimit, order: int) -> Series:
    """Benchmark expansion of I: divergent factorial series or eta-log series."""
    if order < 0:
        raise ValueError("order must be >= 0")
    limit = KvLimit(limit)
    if limit is KvLimit.SMALL_DELTA:
        coeff = 1.0
        terms = []
        for k in range(order + 1):
            if k > 0:
                coeff *= -k  # (-1)^k k!
            terms.append((k, 0, coeff))
        return Series.from_terms("delta", terms)
    if order > 4:
        raise ValueError("large-delta benchmark series is only known through order 4")
    g = EULER_GAMMA
    per_order = {
        1: [(1, 0, -g), (1, 1, -1.0)],
        2: [(2, 0, 1.0 - g), (2, 1, -1.0)],
        3: [(3, 0, (3.0 - 2.0 * g) / 4.0), (3, 1, -0.5)],
        4: [(4, 0, (11.0 - 6.0 * g) / 36.0), (4, 1, -1.0 / 6.0)],
    }
    terms = [t for j in range(1, order + 1) for t in per_order[j]]
    return Series.from_terms("eta", terms)


def kv_dataset(
    limit: KvLimit,
    n_points: int = 20,
    param_range: tuple[float, float] | None = None,
    with_log: bool = True,
) -> Dataset:
    """Training grid for I(delta): feature {delta}, or {eta, log eta} for large delta."""
    limit = KvLimit(limit)
    if param_range is None:
        param_range = DEFAULT_KV_SMALL_RANGE if limit is KvLimit.SMALL_DELTA else DEFAULT_KV_LARGE_RANGE
    lo, hi = param_range
    if not 0.0 < lo < hi:
        raise ValueError(f"invalid parameter range [{lo}, {hi}]")
    params = np.linspace(lo, hi, n_points)
    if limit is KvLimit.SMALL_DELTA:
        target = np.array([kv_integral_exact(p) for p in params])
        features = [Feature("power", 1)]
    else:
        target = np.array([kv_integral_exact(1.0 / p) for p in params])
        features = [Feature("power", 1)] + ([Feature("log")] if with_log else [])
    return Dataset.build(limit.param_name, params, features, target)
