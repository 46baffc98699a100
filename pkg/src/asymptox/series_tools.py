"""Canonical asymptotic series and tools to pull them out of evolved trees.

A series is a sum of monomials c * p^a * log(p)^b.  Division-free trees are
expanded symbolically (error-free); trees with a genuine division are
projected numerically onto the monomial/log basis by least squares over the
training range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .expr_core import DIV_GUARD, Constant, ExprTree, Op, Variable, evaluate_matrix
from .dataset import feature_matrix

__all__ = [
    "PRUNE_THRESHOLD",
    "Series",
    "SeriesTerm",
    "SeriesExtraction",
    "CoefficientDelta",
    "ExtractionError",
    "series_eval",
    "extract_series",
    "compare_series",
    "rrmse",
    "rrmse_surface",
    "optimal_truncation",
    "lamb_A_from_fit",
    "LambRatios",
]

# Terms below this coefficient magnitude are dropped from canonical series.
PRUNE_THRESHOLD = 1e-12

PROJECTION_RESIDUAL_LIMIT = 1e-6
CONDITION_WARN_LIMIT = 1e12

# Basis growth stops once the relative fit residual drops below this: the
# samples carry no further coefficient information and larger bases only
# launder roundoff into the low-order coefficients.
PROJECTION_PLATEAU = 1e-13


class ExtractionError(ValueError):
    """A series could not be extracted from the given input."""


@dataclass(frozen=True, slots=True)
class SeriesTerm:
    power: int
    log_power: int
    coefficient: float


@dataclass(frozen=True)
class Series:
    """Canonical expansion sum c * p^a * log(p)^b, sorted by (a, b)."""

    variable: str
    terms: tuple[SeriesTerm, ...]

    @classmethod
    def from_terms(cls, variable: str, terms) -> "Series":
        merged: dict[tuple[int, int], float] = {}
        for a, b, c in terms:
            if a < 0 or b < 0:
                raise ValueError(f"negative exponents in term ({a}, {b})")
            key = (int(a), int(b))
            merged[key] = merged.get(key, 0.0) + float(c)
        kept = [
            SeriesTerm(a, b, c)
            for (a, b), c in sorted(merged.items())
            if abs(c) >= PRUNE_THRESHOLD
        ]
        return cls(variable, tuple(kept))

    @property
    def max_order(self) -> int:
        return max((t.power for t in self.terms), default=0)

    def coefficient(self, power: int, log_power: int = 0) -> float:
        for t in self.terms:
            if t.power == power and t.log_power == log_power:
                return t.coefficient
        return 0.0

    def polynomial_coefficients(self, up_to: int) -> list[float]:
        """Dense [c_0..c_n] of the log-free part."""
        return [self.coefficient(a, 0) for a in range(up_to + 1)]

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for t in self.terms:
            factors = [format(abs(t.coefficient), ".6g")]
            if t.power == 1:
                factors.append(self.variable)
            elif t.power > 1:
                factors.append(f"{self.variable}^{t.power}")
            if t.log_power == 1:
                factors.append(f"log({self.variable})")
            elif t.log_power > 1:
                factors.append(f"log({self.variable})^{t.log_power}")
            sign = "-" if t.coefficient < 0 else "+"
            parts.append((sign, " * ".join(factors)))
        first_sign, first = parts[0]
        text = (first_sign + " " if first_sign == "-" else "") + first
        for sign, part in parts[1:]:
            text += f" {sign} {part}"
        return text


def series_eval(series: Series, p: float, up_to_order: int | None = None) -> float:
    """Partial sum over terms with power <= up_to_order (all terms if None)."""
    has_logs = any(t.log_power > 0 for t in series.terms)
    if p <= 0 and has_logs:
        raise ValueError(f"series with log terms requires p > 0, got {p}")
    log_p = math.log(p) if p > 0 else 0.0
    total = 0.0
    for t in series.terms:
        if up_to_order is not None and t.power > up_to_order:
            continue
        total += t.coefficient * p ** t.power * log_p ** t.log_power
    return total


@dataclass(frozen=True)
class SeriesExtraction:
    series: Series
    method: str  # "symbolic" | "projection"
    residual: float
    condition: float | None
    warnings: tuple[str, ...]


def _expand_symbolic(tree: ExprTree, feature_terms) -> dict[tuple[int, int], float] | None:
    """Exact monomial expansion; None when a non-constant denominator appears."""

    def combine_mul(u, v):
        out: dict[tuple[int, int], float] = {}
        for (a1, b1), c1 in u.items():
            for (a2, b2), c2 in v.items():
                key = (a1 + a2, b1 + b2)
                out[key] = out.get(key, 0.0) + c1 * c2
        return out

    def walk(i: int):
        node = tree.nodes[i]
        if isinstance(node, Constant):
            return {(0, 0): node.value}
        if isinstance(node, Variable):
            return {feature_terms[node.index]: 1.0}
        left = walk(node.left)
        right = walk(node.right)
        if left is None or right is None:
            return None
        if node.op is Op.ADD:
            out = dict(left)
            for k, v in right.items():
                out[k] = out.get(k, 0.0) + v
            return out
        if node.op is Op.SUB:
            out = dict(left)
            for k, v in right.items():
                out[k] = out.get(k, 0.0) - v
            return out
        if node.op is Op.MUL:
            return combine_mul(left, right)
        # Division: symbolic only when the denominator is a constant.
        nonconst = {k: v for k, v in right.items() if k != (0, 0) and v != 0.0}
        if nonconst:
            return None
        denom = right.get((0, 0), 0.0)
        if abs(denom) <= DIV_GUARD:
            return {(0, 0): 1.0}
        return {k: v / denom for k, v in left.items()}

    return walk(tree.root)


def _chebyshev_points(lo: float, hi: float, n: int) -> np.ndarray:
    k = np.arange(n)
    return 0.5 * (lo + hi) + 0.5 * (hi - lo) * np.cos(np.pi * (2 * k + 1) / (2 * n))


def extract_series(
    tree: ExprTree,
    feature_spec,
    variable: str = "p",
    param_range: tuple[float, float] | None = None,
    max_power: int = 25,
    max_log_power: int = 4,
) -> SeriesExtraction:
    """Turn an evolved tree into a Series in the raw parameter.

    ``feature_spec`` maps each variable index of the tree to a power of the
    parameter or to its log, exactly as in the training dataset.  Division-free
    trees (including divisions by constant subtrees) expand exactly; anything
    else is least-squares projected on Chebyshev-spaced samples of
    ``param_range``.  Log powers enter the projection basis only when the
    features include a log input.
    """
    feature_spec = tuple(feature_spec)
    feature_terms = []
    for f in feature_spec:
        if f.kind == "log":
            feature_terms.append((0, 1))
        else:
            feature_terms.append((f.power, 0))

    symbolic = _expand_symbolic(tree, feature_terms)
    if symbolic is not None:
        series = Series.from_terms(variable, [(a, b, c) for (a, b), c in symbolic.items()])
        return SeriesExtraction(series, "symbolic", 0.0, None, ())

    if param_range is None:
        raise ExtractionError("projection extraction needs the training param_range")
    lo, hi = param_range
    if not 0.0 < lo < hi:
        raise ExtractionError(f"invalid projection range [{lo}, {hi}]")

    has_log = any(f.kind == "log" for f in feature_spec)
    b_cap = max_log_power if has_log else 0
    n_samples = 4 * (max_power + 1) * (b_cap + 1)
    params = _chebyshev_points(lo, hi, n_samples)
    X = feature_matrix(feature_spec, params)
    values = evaluate_matrix(tree, X)
    norm = float(np.linalg.norm(values))

    log_p = np.log(params)
    powers = np.column_stack([params ** a for a in range(max_power + 1)])
    logs = np.column_stack([log_p ** b for b in range(b_cap + 1)])

    def fit(a_max: int, b_max: int):
        basis = [(a, b) for a in range(a_max + 1) for b in range(b_max + 1)]
        M = np.column_stack([powers[:, a] * logs[:, b] for a, b in basis])
        scale = np.linalg.norm(M, axis=0)
        scale[scale == 0.0] = 1.0
        coef_scaled, _, _, sv = np.linalg.lstsq(M / scale, values, rcond=None)
        coef = coef_scaled / scale
        condition = float(sv[0] / sv[-1]) if sv[-1] > 0 else math.inf
        residual = float(np.linalg.norm(M @ coef - values)) / (norm if norm > 0 else 1.0)
        return basis, coef, residual, condition

    # Grow the basis from small to the caps and keep the smallest one whose
    # residual has plateaued; a bigger basis past that point only degrades
    # the low-order coefficients through collinearity.
    candidates = sorted(
        ((a, b) for a in range(min(2, max_power), max_power + 1) for b in range(b_cap + 1)),
        key=lambda ab: ((ab[0] + 1) * (ab[1] + 1), ab[1]),
    )
    best = None
    for a_max, b_max in candidates:
        basis, coef, residual, condition = fit(a_max, b_max)
        if best is None or residual < best[2]:
            best = (basis, coef, residual, condition)
        if residual <= PROJECTION_PLATEAU:
            best = (basis, coef, residual, condition)
            break
    basis, coef, residual, condition = best

    warnings = []
    if condition > CONDITION_WARN_LIMIT:
        warnings.append(f"ill-conditioned projection (condition estimate {condition:.3g})")
    if residual > PROJECTION_RESIDUAL_LIMIT:
        warnings.append(f"non-series expression (relative residual {residual:.3g})")
    series = Series.from_terms(variable, [(a, b, c) for (a, b), c in zip(basis, coef)])
    return SeriesExtraction(series, "projection", residual, condition, tuple(warnings))


@dataclass(frozen=True, slots=True)
class CoefficientDelta:
    power: int
    log_power: int
    found: float
    benchmark: float
    abs_delta: float


def compare_series(found: Series, benchmark: Series, up_to: int) -> list[CoefficientDelta]:
    """Per-(power, log-power) coefficient deltas; missing terms count as zero."""
    if found.variable != benchmark.variable:
        raise ValueError(f"variable mismatch: {found.variable!r} vs {benchmark.variable!r}")
    keys = sorted(
        {(t.power, t.log_power) for t in found.terms if t.power <= up_to}
        | {(t.power, t.log_power) for t in benchmark.terms if t.power <= up_to}
    )
    out = []
    for a, b in keys:
        cf = found.coefficient(a, b)
        cb = benchmark.coefficient(a, b)
        out.append(CoefficientDelta(a, b, cf, cb, abs(cf - cb)))
    return out


def rrmse(approx, exact) -> float:
    """Relative RMS error: ||approx - exact|| / ||exact||."""
    a = np.asarray(approx, dtype=float)
    e = np.asarray(exact, dtype=float)
    if a.shape != e.shape or a.size == 0:
        raise ValueError("approx and exact must be equal-length non-empty vectors")
    norm = np.linalg.norm(e)
    if norm == 0.0:
        raise ValueError("exact vector is identically zero")
    return float(np.linalg.norm(a - e) / norm)


def rrmse_surface(series: Series, exact_fn, param_grid, n_max: int) -> np.ndarray:
    """RRMSE of each truncation order at each grid value; shape (n_max+1, grid)."""
    grid = np.asarray(param_grid, dtype=float)
    exact = np.array([exact_fn(p) for p in grid])
    out = np.empty((n_max + 1, grid.size))
    for n in range(n_max + 1):
        approx = np.array([series_eval(series, p, n) for p in grid])
        out[n] = np.abs(approx - exact) / np.abs(exact)
    return out


def optimal_truncation(series: Series, exact_fn, p: float, n_max: int) -> int:
    """Truncation order minimising |partial sum - exact| at p; ties pick the smaller n."""
    exact = exact_fn(p)
    errors = [abs(series_eval(series, p, n) - exact) for n in range(n_max + 1)]
    return int(np.argmin(errors))


@dataclass(frozen=True)
class LambRatios:
    scale: float
    a1: float
    a2: float
    expected_scale: float | None = None


def lamb_A_from_fit(fit: Series, nu_known: float | None = None) -> LambRatios:
    """A-coefficients from a K^4 fit, normalised by the Omega^2 coefficient.

    The benchmark form is K^4 = scale * Omega^2 (1 + A1 Omega + A2 Omega^2 + ...),
    so A_j is the ratio of the Omega^(j+2) coefficient to the Omega^2 one.
    """
    c2 = fit.coefficient(2, 0)
    if abs(c2) <= 1e-6:
        raise ExtractionError("fit has no usable Omega^2 term")
    expected = 1.5 * (1.0 - nu_known) if nu_known is not None else None
    return LambRatios(
        scale=c2,
        a1=fit.coefficient(3, 0) / c2,
        a2=fit.coefficient(4, 0) / c2,
        expected_scale=expected,
    )
