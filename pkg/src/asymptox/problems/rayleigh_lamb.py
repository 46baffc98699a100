"""Fundamental bending mode of Rayleigh-Lamb waves in a traction-free layer.

The antisymmetric dispersion relation links dimensionless frequency Omega and
wavenumber K.  The low-frequency benchmark is K^4 = (3/2)(1-nu) Omega^2
sum_j A_j Omega^j, and Poisson's ratio can be recovered from A1 or A2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..numerics import (
    BracketedRootConfig,
    BracketingError,
    DomainError,
    even_cosh,
    even_sinhc,
    find_root_bracketed,
)
from ..series_tools import Series
from ..dataset import Dataset, Feature

__all__ = [
    "LambConfig",
    "lamb_dispersion_residual",
    "lamb_solve_K",
    "lamb_dataset",
    "lamb_benchmark_coeffs",
    "lamb_benchmark_series",
    "poisson_from_a1",
    "poisson_from_a2",
    "DEFAULT_NU",
    "DEFAULT_OMEGA_RANGE",
]

DEFAULT_NU = 0.3455
DEFAULT_OMEGA_RANGE = (0.025, 0.5)


def _default_grid() -> tuple[float, ...]:
    return tuple(np.linspace(*DEFAULT_OMEGA_RANGE, 20))


@dataclass(frozen=True)
class LambConfig:
    nu: float = DEFAULT_NU
    omega_grid: tuple[float, ...] = field(default_factory=_default_grid)

    def __post_init__(self) -> None:
        if not -1.0 < self.nu < 0.5:
            raise ValueError(f"Poisson ratio {self.nu} outside (-1, 0.5)")
        if not self.omega_grid:
            raise ValueError("empty frequency grid")
        if min(self.omega_grid) <= 0.0 or max(self.omega_grid) > 1.0:
            raise ValueError("frequencies must lie in (0, 1] for the fundamental root")

    @classmethod
    def from_range(cls, nu: float = DEFAULT_NU, omega_min: float = DEFAULT_OMEGA_RANGE[0],
                   omega_max: float = DEFAULT_OMEGA_RANGE[1], n_points: int = 20) -> "LambConfig":
        return cls(nu=nu, omega_grid=tuple(np.linspace(omega_min, omega_max, n_points)))

    @property
    def n_points(self) -> int:
        return len(self.omega_grid)


def _kappa_sq(nu: float) -> float:
    return (1.0 - 2.0 * nu) / (2.0 - 2.0 * nu)


def lamb_dispersion_residual(K: float, Omega: float, nu: float) -> float:
    """Antisymmetric dispersion residual, analytic in K^2 across branch changes."""
    K2 = K * K
    W2 = Omega * Omega
    g2 = K2 - 0.5 * W2
    a2 = K2 - _kappa_sq(nu) * W2
    b2 = K2 - W2
    return g2 * g2 * even_sinhc(a2) * even_cosh(b2) - K2 * b2 * even_cosh(a2) * even_sinhc(b2)


def lamb_solve_K(Omega: float, nu: float = DEFAULT_NU, root_config: BracketedRootConfig | None = None) -> float:
    """Fundamental bending wavenumber K(Omega) > 0.

    Brackets around the leading-order guess K0 = ((3/2)(1-nu))^(1/4) sqrt(Omega),
    widening geometrically up to four times before giving up.
    """
    if Omega <= 0:
        raise DomainError(f"frequency must be positive, got {Omega}")
    k0 = (1.5 * (1.0 - nu)) ** 0.25 * math.sqrt(Omega)
    lo, hi = 0.5 * k0, 2.0 * k0

    def f(k: float) -> float:
        return lamb_dispersion_residual(k, Omega, nu)

    for _ in range(5):
        if f(lo) * f(hi) < 0.0:
            return find_root_bracketed(f, lo, hi, root_config)
        lo *= 0.5
        hi *= 2.0
    raise BracketingError(
        f"no sign change around the bending-root guess for Omega={Omega}, nu={nu}; "
        f"last interval [{lo}, {hi}]"
    )


def lamb_dataset(config: LambConfig | None = None) -> Dataset:
    """Grid of (Omega, K^4) pairs solved from the dispersion relation."""
    cfg = config if config is not None else LambConfig()
    omegas = np.asarray(cfg.omega_grid, dtype=float)
    target = np.array([lamb_solve_K(w, cfg.nu) ** 4 for w in omegas])
    return Dataset.build("Omega", omegas, [Feature("power", 1)], target)


def lamb_benchmark_coeffs(nu: float, order: int = 3) -> tuple[float, ...]:
    """Coefficients A_0..A_order of the bending asymptotics; known through A_3."""
    if not -1.0 < nu < 0.5:
        raise DomainError(f"Poisson ratio {nu} outside (-1, 0.5)")
    if order < 0:
        raise ValueError("order must be >= 0")
    if order > 3:
        raise ValueError("bending-mode coefficients are only known through A_3")
    chi = math.sqrt(1.5 * (1.0 - nu))
    coeffs = (
        1.0,
        chi * (17.0 - 7.0 * nu) / (15.0 * (1.0 - nu)),
        (1179.0 - 818.0 * nu + 409.0 * nu * nu) / (2100.0 * (1.0 - nu)),
        chi * (5951.0 - 2603.0 * nu + 9953.0 * nu ** 2 - 4901.0 * nu ** 3) / (126000.0 * (1.0 - nu) ** 2),
    )
    return coeffs[: order + 1]


def lamb_benchmark_series(nu: float, order: int = 3) -> Series:
    """K^4 expansion as a Series in Omega: (3/2)(1-nu) A_j at power j+2."""
    scale = 1.5 * (1.0 - nu)
    coeffs = lamb_benchmark_coeffs(nu, order)
    return Series.from_terms("Omega", [(j + 2, 0, scale * a) for j, a in enumerate(coeffs)])


def lamb_polynomial_fit(omegas, k4_values, min_order: int = 2, max_order: int = 5) -> Series:
    """Least-squares fit of K^4 values onto {Omega^2 .. Omega^5}.

    This is the coefficient-table convention used to read A_j ratios out of
    both the exact dataset and SR predictions of it.
    """
    omegas = np.asarray(omegas, dtype=float)
    values = np.asarray(k4_values, dtype=float)
    M = np.column_stack([omegas ** k for k in range(min_order, max_order + 1)])
    coef, _, _, _ = np.linalg.lstsq(M, values, rcond=None)
    return Series.from_terms("Omega", [(k, 0, c) for k, c in zip(range(min_order, max_order + 1), coef)])


def poisson_from_a1(a1: float) -> float:
    """Invert A1 for Poisson's ratio; rejects values with negative discriminant."""
    disc = 15.0 * a1 ** 4 - 28.0 * a1 ** 2
    if disc < 0.0:
        raise DomainError(f"A1={a1} gives negative discriminant 15*A1^4 - 28*A1^2 = {disc}")
    return (119.0 - 75.0 * a1 ** 2 + 5.0 * math.sqrt(15.0) * math.sqrt(disc)) / 49.0


def poisson_from_a2(a2: float) -> float:
    """Invert A2 for Poisson's ratio; rejects values with negative discriminant."""
    disc = 15750.0 * a2 ** 2 - 4499.0
    if disc < 0.0:
        raise DomainError(f"A2={a2} gives negative discriminant 15750*A2^2 - 4499 = {disc}")
    return (409.0 - 1050.0 * a2 + math.sqrt(70.0) * math.sqrt(disc)) / 409.0
