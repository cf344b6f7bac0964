"""One-dimensional ground truth via continued fractions.

Everything here is exact integer arithmetic on rational inputs.  A float
argument is first converted to the exact rational it represents, so the
continued fraction is that of the float, which matches the underlying real
number for all convergents with q_k^2 below the float's resolution; use
``quadratic_surd`` or a high-precision Fraction for deeper expansions.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from math import isqrt

__all__ = [
    "CFExpansion",
    "convergents_of_fraction",
    "quadratic_surd",
    "golden_ratio",
    "LagrangeEstimate",
    "lagrange_constant",
    "BadKappaResult",
    "bad_kappa_test",
    "hensley_dim",
    "kurzweil_band",
    "MoreiraThreshold",
    "moreira_threshold",
    "simplest_between",
]

_PI2 = math.pi ** 2
_PI4 = math.pi ** 4


def convergents_of_fraction(x: Fraction, qmax: int | None = None, depth: int | None = None):
    """Convergents (p_k, q_k) of x in [0, 1), exact, including x itself last.

    Stops early once q_k exceeds qmax or after ``depth`` partial quotients.
    """
    x = Fraction(x)
    if not (0 <= x < 1):
        raise ValueError("expects x in [0, 1)")
    h_prev, k_prev = 1, 0
    h, k = 0, 1  # a_0 = 0
    convs = [(h, k)]
    num, den = x.numerator, x.denominator
    count = 0
    while num != 0:
        a = den // num
        den, num = num, den % num
        h, h_prev = a * h + h_prev, h
        k, k_prev = a * k + k_prev, k
        count += 1
        if qmax is not None and k > qmax:
            break
        convs.append((h, k))
        if depth is not None and count >= depth:
            break
    return convs


def quadratic_surd(d: int, bits: int = 256) -> Fraction:
    """Fractional part of sqrt(d) as a rational accurate to ~2^-bits.

    Convergents of this rational agree with those of sqrt(d) as long as
    q_k^2 stays below 2^bits.
    """
    if d < 2 or isqrt(d) ** 2 == d:
        raise ValueError("d must be a non-square integer >= 2")
    scaled = isqrt(d << (2 * bits))
    return Fraction(scaled, 1 << bits) - isqrt(d)


def golden_ratio(bits: int = 256) -> Fraction:
    """(sqrt(5) - 1)/2 as a rational accurate to ~2^-bits."""
    scaled = isqrt(5 << (2 * bits))
    return Fraction(scaled - (1 << bits), 1 << (bits + 1))


@dataclass(frozen=True)
class CFExpansion:
    """Partial quotients and convergents of a number in (0, 1)."""

    x: Fraction
    partial_quotients: tuple[int, ...]
    convergents: tuple[tuple[int, int], ...]

    @classmethod
    def of(cls, x, depth: int = 64) -> "CFExpansion":
        if depth > 64:
            raise ValueError("depth is capped at 64")
        x = Fraction(x)
        if not (0 < x < 1):
            raise ValueError("expects x in (0, 1)")
        quotients = []
        num, den = x.numerator, x.denominator
        while num != 0 and len(quotients) < depth:
            a = den // num
            quotients.append(a)
            den, num = num, den % num
        convs = convergents_of_fraction(x, depth=len(quotients))
        return cls(x, tuple(quotients), tuple(convs[1:]))

    @property
    def terminated(self) -> bool:
        """True when the expansion is that of a rational exhausted before depth."""
        h, k = self.convergents[-1]
        return Fraction(h, k) == self.x


@dataclass(frozen=True)
class LagrangeEstimate:
    """Finite-depth estimate of liminf q |qx - p| with a convergence gauge.

    The values q_k |q_k x - p_k| are exact for the rational input; by best
    approximation theory the liminf over all q equals the liminf over
    convergents, so the estimate is the minimum over the computed depth.
    ``error`` is a heuristic gauge (recent oscillation plus resolution),
    not a rigorous bound on unseen deeper terms.
    """

    value: float
    error: float
    depth: int

    def __float__(self) -> float:
        return self.value


def lagrange_constant(x, depth: int = 30) -> LagrangeEstimate:
    """Estimate liminf_q q ||q x|| from the first ``depth`` convergents.

    Rational x (detected by a terminating expansion) gives exactly 0.
    """
    cf = CFExpansion.of(x, depth=depth)
    if cf.terminated:
        return LagrangeEstimate(0.0, 0.0, len(cf.convergents))
    vals = []
    for p, q in cf.convergents:
        vals.append(float(q * abs(q * cf.x - p)))
    # liminf estimate: the head of the sequence is burn-in, only the tail
    # matters for the limit inferior
    tail = vals[len(vals) // 2 :]
    est = min(tail)
    gauge = abs(vals[-1] - vals[-3]) if len(vals) >= 3 else vals[-1]
    err = gauge + 1.0 / float(cf.convergents[-1][1])
    return LagrangeEstimate(est, err, len(vals))


@dataclass(frozen=True)
class BadKappaResult:
    """Boolean-like verdict on membership in Bad_kappa, with certainty flag."""

    is_bad: bool
    certain: bool
    estimate: LagrangeEstimate

    def __bool__(self) -> bool:
        return self.is_bad


def bad_kappa_test(x, kappa: float, depth: int = 30) -> BadKappaResult:
    """True iff the estimated liminf exceeds kappa.

    ``certain`` is set when the margin beats the estimate's convergence
    gauge; indeterminate cases come back with certain=False.
    """
    est = lagrange_constant(x, depth=depth)
    is_bad = est.value > kappa
    certain = abs(est.value - kappa) > est.error
    return BadKappaResult(is_bad, certain, est)


def hensley_dim(kappa: float) -> float:
    """Dimension of Bad_kappa (m = n = 1) by the truncated expansion

        1 - (6/pi^2) kappa - (72/pi^4) kappa^2 |log kappa|,

    dropping the O(kappa^2) remainder.  Guarded to kappa <= 0.05 where the
    dropped term is comfortably below the quadratic one kept.
    """
    if kappa < 0:
        raise ValueError("kappa must be nonnegative")
    if kappa == 0:
        return 1.0
    if kappa > 0.05:
        warnings.warn("hensley_dim truncation is only calibrated for kappa <= 0.05")
    return 1.0 - (6.0 / _PI2) * kappa - (72.0 / _PI4) * kappa ** 2 * abs(math.log(kappa))


def kurzweil_band(kappa: float) -> tuple[float, float]:
    """Kurzweil's two-sided bounds (1 - .99 kappa, 1 - .25 kappa)."""
    if kappa < 0:
        raise ValueError("kappa must be nonnegative")
    if kappa > 0.1:
        warnings.warn("kurzweil_band holds for sufficiently small kappa (guard 0.1)")
    return (1.0 - 0.99 * kappa, 1.0 - 0.25 * kappa)


@dataclass(frozen=True)
class MoreiraThreshold:
    """The supremum of kappa with dim Bad_kappa > 0 in one dimension."""

    value: float
    reference: str

    def __float__(self) -> float:
        return self.value


def moreira_threshold() -> MoreiraThreshold:
    """Moreira's threshold: dim Bad_kappa = 0 iff kappa >= 1/3 (m = n = 1).

    Documentation only; note this concerns dimension zero, not emptiness
    (the golden ratio has Lagrange constant 1/sqrt(5) > 1/3).
    """
    return MoreiraThreshold(1.0 / 3.0, "Moreira, Ann. of Math. 188 (2018), Theorem 1(ii)")


def simplest_between(lo: Fraction, hi: Fraction) -> Fraction:
    """The reduced fraction with smallest denominator in [lo, hi].

    Standard continued-fraction walk; ties in denominator resolve to the
    smaller numerator via the ceil choice.
    """
    if hi < lo:
        raise ValueError("needs lo <= hi")
    lo, hi = Fraction(lo), Fraction(hi)
    # integer in range?
    c = math.ceil(lo)
    if c <= hi:
        return Fraction(c)
    f = math.floor(lo)
    return f + 1 / simplest_between(1 / (hi - f), 1 / (lo - f))
