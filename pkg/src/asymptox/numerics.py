"""Special functions and root finding used by the problem generators.

Contents: the exponential integral E1(x) = Gamma(0, x) with a scaled variant
that avoids overflow, an adaptive-quadrature oracle for the relaxation
integral of the viscoelastic problem, even-analytic hyperbolic helpers for
the dispersion relation, and a Brent-style bracketed root finder.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.integrate import quad

__all__ = [
    "EULER_GAMMA",
    "DomainError",
    "BracketingError",
    "ConvergenceError",
    "BracketedRootConfig",
    "exp_integral_e1",
    "exp_integral_e1_scaled",
    "kv_integral_quadrature_oracle",
    "even_sinhc",
    "even_cosh",
    "find_root_bracketed",
]

EULER_GAMMA = 0.57721566490153286

_EPS = 2.220446049250313e-16


class DomainError(ValueError):
    """Argument outside the mathematical domain of the function."""


class BracketingError(ValueError):
    """The supplied interval does not bracket a sign change."""


class ConvergenceError(RuntimeError):
    """An iteration failed to converge within its budget."""


def _e1_series(x: float) -> float:
    # E1(x) = -gamma - ln x - sum_k (-x)^k / (k k!), accurate for 0 < x <= 1.
    total = -EULER_GAMMA - math.log(x)
    power = 1.0
    for k in range(1, 200):
        power *= -x / k
        delta = -power / k
        total += delta
        if abs(delta) <= 1e-17 * abs(total):
            return total
    raise ConvergenceError(f"E1 series did not converge for x={x}")


def _e1_cf_scaled(x: float) -> float:
    # Modified-Lentz continued fraction for e^x E1(x), accurate for x >= ~1:
    # e^x E1(x) = 1 / (x + 1 - 1/(x + 3 - 4/(x + 5 - 9/(...)))).
    tiny = 1e-300
    b = x + 1.0
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 300):
        an = -i * i
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 4.0 * _EPS:
            return h
    raise ConvergenceError(f"E1 continued fraction did not converge for x={x}")


def exp_integral_e1(x: float) -> float:
    """Exponential integral E1(x) = Gamma(0, x) for x > 0.

    Series branch up to x = 1, continued fraction beyond; relative error
    is comfortably below 1e-12 on either side of the switch.
    """
    if x <= 0:
        raise DomainError(f"E1 requires x > 0, got {x}")
    if x <= 1.0:
        return _e1_series(x)
    return math.exp(-x) * _e1_cf_scaled(x)


def exp_integral_e1_scaled(x: float) -> float:
    """e^x * E1(x) without overflow for arbitrarily large x > 0."""
    if x <= 0:
        raise DomainError(f"E1 requires x > 0, got {x}")
    if x <= 1.0:
        return math.exp(x) * _e1_series(x)
    return _e1_cf_scaled(x)


def kv_integral_quadrature_oracle(delta: float) -> float:
    """Independent oracle for I(delta) = int_0^inf e^-x / (1 + delta x) dx.

    The infinite range is mapped to (0, 1) via x = t / (1 - t) and handed to
    adaptive quadrature; absolute error is well under 1e-11.
    """
    if delta <= 0:
        raise DomainError(f"relaxation integral requires delta > 0, got {delta}")

    def integrand(t: float) -> float:
        u = t / (1.0 - t)
        if u > 745.0:  # e^-u underflows; tail contributes nothing
            return 0.0
        w = 1.0 + u
        return math.exp(-u) * w * w / (1.0 + delta * u)

    value, _ = quad(integrand, 0.0, 1.0, epsabs=1e-13, epsrel=1e-13, limit=200)
    return value


def even_sinhc(z: float) -> float:
    """S(z) = sinh(sqrt z)/sqrt z, continued evenly as sin(sqrt -z)/sqrt -z."""
    if abs(z) < 1e-8:
        return 1.0 + z / 6.0
    if z > 0:
        r = math.sqrt(z)
        return math.sinh(r) / r
    r = math.sqrt(-z)
    return math.sin(r) / r


def even_cosh(z: float) -> float:
    """C(z) = cosh(sqrt z), continued evenly as cos(sqrt -z)."""
    if abs(z) < 1e-8:
        return 1.0 + z / 2.0
    if z > 0:
        return math.cosh(math.sqrt(z))
    return math.cos(math.sqrt(-z))


@dataclass(frozen=True)
class BracketedRootConfig:
    abs_tol: float = 1e-13
    x_tol: float = 1e-14
    max_iter: int = 200

    def __post_init__(self) -> None:
        if self.abs_tol <= 0 or self.x_tol <= 0 or self.max_iter <= 0:
            raise ValueError("root-finder tolerances must be positive")


def find_root_bracketed(f, lo: float, hi: float, config: BracketedRootConfig | None = None) -> float:
    """Brent-style root finder on a sign-changing bracket [lo, hi].

    Stops when |f(x)| <= abs_tol or the bracket narrows below x_tol * |x|;
    never evaluates f outside the original interval.
    """
    cfg = config if config is not None else BracketedRootConfig()
    a, b = float(lo), float(hi)
    fa, fb = f(a), f(b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if (fa > 0.0) == (fb > 0.0):
        raise BracketingError(f"no sign change on [{lo}, {hi}]: f(lo)={fa}, f(hi)={fb}")

    c, fc = a, fa
    e = d = b - a
    for _ in range(cfg.max_iter):
        if abs(fc) < abs(fb):
            a, b, c = b, c, b
            fa, fb, fc = fb, fc, fb
        m = 0.5 * (c - b)
        if abs(fb) <= cfg.abs_tol or abs(2.0 * m) <= cfg.x_tol * abs(b):
            return b
        tol = 2.0 * _EPS * abs(b) + 0.5 * cfg.x_tol * abs(b)
        if abs(e) < tol or abs(fa) <= abs(fb):
            e = d = m
        else:
            s = fb / fa
            if a == c:
                p = 2.0 * m * s
                q = 1.0 - s
            else:
                q = fa / fc
                r = fb / fc
                p = s * (2.0 * m * q * (q - r) - (b - a) * (r - 1.0))
                q = (q - 1.0) * (r - 1.0) * (s - 1.0)
            if p > 0.0:
                q = -q
            else:
                p = -p
            s = e
            e = d
            if 2.0 * p < 3.0 * m * q - abs(tol * q) and p < abs(0.5 * s * q):
                d = p / q
            else:
                e = d = m
        a, fa = b, fb
        if abs(d) > tol:
            b += d
        elif m > 0.0:
            b += tol
        else:
            b -= tol
        fb = f(b)
        if fb == 0.0:
            return b
        if (fb > 0.0) == (fc > 0.0):
            c, fc = a, fa
            e = d = b - a
    raise ConvergenceError(f"root finder exceeded {cfg.max_iter} iterations on [{lo}, {hi}]")
