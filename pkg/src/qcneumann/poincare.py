"""Poincare-Sobolev constants of the two source domains.

The disc carries an exact L_2 constant 1/j'_{1,1}, where j'_{1,1} is the
first positive zero of the derivative of the Bessel function J_1 (so the
first nontrivial Neumann eigenvalue of the disc is j'_{1,1}^2).  For general
target exponents r only an upper estimate is available:

    B_{r,2}(disc) <= (pi/2)^((2-r)/(2r)) * (r+2)^((r+2)/(2r)).

Substituting r = 2*beta/(beta-1) gives the equivalent exponent form

    B <= 2 * pi^(-1/(2 beta)) * ((2 beta - 1)/(beta - 1))^((2 beta - 1)/(2 beta)).

The centered square of side sqrt(2) has the exact L_2 constant sqrt(2)/pi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

from .errors import BetaOutOfRange

KIND_UPPER = "upper-formula"
KIND_EXACT_DISC = "exact-disc"
KIND_EXACT_SQUARE = "exact-square"


@dataclass(frozen=True)
class PoincareConstant:
    r: float
    value: float
    kind: str


def j1prime_series(x: float, tol: float = 1e-20) -> float:
    """J_1'(x) by the term-wise differentiated ascending series.

    J_1(x) = sum_m (-1)^m / (m! (m+1)!) (x/2)^(2m+1), so
    J_1'(x) = (1/2) sum_m (-1)^m (2m+1) / (m! (m+1)!) (x/2)^(2m).
    Terms are accumulated until they drop below ``tol``; near the first
    root (about 1.84) fewer than 20 terms are needed.
    """
    q = 0.25 * x * x  # (x/2)^2
    term = 0.5  # m = 0 contribution
    total = term
    m = 0
    while abs(term) > tol and m < 200:
        m += 1
        term *= -q * (2 * m + 1) / ((2 * m - 1) * m * (m + 1))
        total += term
    return total


def _j1doubleprime_series(x: float, tol: float = 1e-20) -> float:
    """J_1''(x) by the twice-differentiated ascending series (for Newton)."""
    q = 0.25 * x * x
    total = 0.0
    # m >= 1 terms: (1/2) (2m+1) (2m) / (m!(m+1)!) (x/2)^(2m-1) * (1/2), signed
    term = 0.5 * 3.0 * 2.0 / (1.0 * 2.0) * (0.5 * x) * 0.5 * (-1.0)
    m = 1
    while abs(term) > tol and m < 200:
        total += term
        m += 1
        term *= -q * (2 * m + 1) * (2 * m) / ((2 * m - 1) * (2 * m - 2) * m * (m + 1))
    return total


@lru_cache(maxsize=1)
def bessel_j1prime_first_zero() -> float:
    """First positive zero of J_1', by bisection bracketing plus Newton.

    Accurate to about 1e-14 absolute; the classical value is 1.84118378134...
    """
    lo, hi = 1.5, 2.5
    flo = j1prime_series(lo)
    assert flo > 0 > j1prime_series(hi), "bracket must straddle the root"
    # a few bisection rounds to tighten the bracket
    for _ in range(20):
        mid = 0.5 * (lo + hi)
        if j1prime_series(mid) > 0:
            lo = mid
        else:
            hi = mid
    x = 0.5 * (lo + hi)
    for _ in range(50):
        fx = j1prime_series(x)
        dfx = _j1doubleprime_series(x)
        step = fx / dfx
        x_new = x - step
        if not lo <= x_new <= hi:
            x_new = 0.5 * (lo + hi)
        if j1prime_series(x_new) > 0:
            lo = x_new
        else:
            hi = x_new
        if abs(x_new - x) < 1e-15:
            x = x_new
            break
        x = x_new
    return x


def poincare_disc_upper(r: float) -> PoincareConstant:
    """Upper estimate of the disc constant for target exponent r >= 1."""
    if r < 1:
        raise ValueError("r must be >= 1")
    value = (0.5 * math.pi) ** ((2.0 - r) / (2.0 * r)) * (r + 2.0) ** ((r + 2.0) / (2.0 * r))
    return PoincareConstant(r=r, value=value, kind=KIND_UPPER)


def poincare_beta_form(beta: float) -> PoincareConstant:
    """The same upper estimate written in the exponent beta > 1, r = 2b/(b-1)."""
    if beta <= 1:
        raise BetaOutOfRange(f"beta must exceed 1, got {beta}")
    if math.isinf(beta):
        # limiting value as beta -> inf (r -> 2)
        return PoincareConstant(r=2.0, value=4.0, kind=KIND_UPPER)
    q = (2.0 * beta - 1.0) / (beta - 1.0)
    value = 2.0 * math.pi ** (-1.0 / (2.0 * beta)) * q ** ((2.0 * beta - 1.0) / (2.0 * beta))
    return PoincareConstant(r=2.0 * beta / (beta - 1.0), value=value, kind=KIND_UPPER)


def disc_exact_l2() -> PoincareConstant:
    """Exact L_2 Poincare constant of the unit disc, 1/j'_{1,1}."""
    return PoincareConstant(r=2.0, value=1.0 / bessel_j1prime_first_zero(), kind=KIND_EXACT_DISC)


def square_exact_l2() -> PoincareConstant:
    """Exact L_2 Poincare constant of the centered square, sqrt(2)/pi."""
    return PoincareConstant(r=2.0, value=math.sqrt(2.0) / math.pi, kind=KIND_EXACT_SQUARE)
