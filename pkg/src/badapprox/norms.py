"""Ambient dimensions, norms, and the sharp constants of the measure law.

The two constants computed here,

    theta = V_mu * V_nu / (2 zeta(m+n)) * mn/(m+n)
    eta   = n * V_mu * V_nu / (2 zeta(m+n)) = ((m+n)/m) * theta,

govern respectively the first-order dimension deficit of the badly
approximable sets and the exponential measure law for the danger windows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

__all__ = [
    "Dimensions",
    "NormSpec",
    "MixedNorm",
    "zeta",
    "unit_ball_volume",
    "eta",
    "theta",
    "jbbd_dimension",
    "cube_operator_norm",
    "normalized_mu_for_half_cube",
]

# Bernoulli numbers B_2, B_4, ..., B_12 for the Euler-Maclaurin tail.
_BERNOULLI = [
    Fraction(1, 6),
    Fraction(-1, 30),
    Fraction(1, 42),
    Fraction(-1, 30),
    Fraction(5, 66),
    Fraction(-691, 2730),
]


def zeta(s: float, terms: int = 24) -> float:
    """Riemann zeta at real s > 1 by Euler-Maclaurin acceleration.

    Direct summation to ``terms``, then the integral tail plus Bernoulli
    corrections.  Absolute error is far below 1e-14 for s >= 2 with the
    default number of terms.
    """
    if s <= 1:
        raise ValueError("zeta requires s > 1")
    n = terms
    total = sum(k ** (-s) for k in range(1, n))
    # Tail: integral + half endpoint + Bernoulli corrections at k = n.
    total += n ** (1 - s) / (s - 1) + 0.5 * n ** (-s)
    deriv_factor = s
    power = n ** (-s - 1)
    factorial_piece = 1.0
    for j, b in enumerate(_BERNOULLI, start=1):
        # term: B_{2j}/(2j)! * d^{2j-1}/dx^{2j-1} [x^{-s}] at n, with sign folded in
        total += float(b) / math.factorial(2 * j) * deriv_factor * factorial_piece * power
        # update rising product s(s+1)...(s+2j) and power n^{-s-2j-1}
        factorial_piece *= (s + 2 * j - 1) * (s + 2 * j)
        power /= n * n
    return total


@dataclass(frozen=True)
class Dimensions:
    """Ambient matrix shape m x n and its derived scalars.

    ``delta = mn/(m+n)`` is the diagonal-flow exponent ratio and
    ``alpha = m/(m+n)`` the exponent tying box scale to denominator scale.
    Both are kept as exact rationals.
    """

    m: int
    n: int

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise ValueError("dimensions must be positive integers")

    @property
    def d(self) -> int:
        return self.m + self.n

    @property
    def D(self) -> int:
        return self.m * self.n

    @property
    def delta(self) -> Fraction:
        return Fraction(self.D, self.d)

    @property
    def alpha(self) -> Fraction:
        return Fraction(self.m, self.d)


@dataclass(frozen=True)
class NormSpec:
    """A norm on R^dim: sup, l1, l2, or general lp with p >= 1.

    ``scale`` multiplies the base norm; scaling the row norm by gamma is
    equivalent to dividing the approximation function by gamma, so the
    rescaling used to normalize the unit cube is exposed here explicitly.
    """

    kind: str
    dim: int
    p: float | None = None
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in ("sup", "l1", "l2", "lp"):
            raise ValueError("norm volume unavailable for kind %r" % (self.kind,))
        if self.kind == "lp" and (self.p is None or self.p < 1):
            raise ValueError("lp norm requires p >= 1")
        if self.dim < 1:
            raise ValueError("norm dimension must be positive")
        if self.scale <= 0:
            raise ValueError("norm scale must be positive")

    @classmethod
    def sup(cls, dim: int, scale: float = 1.0) -> "NormSpec":
        return cls("sup", dim, scale=scale)

    @classmethod
    def l1(cls, dim: int, scale: float = 1.0) -> "NormSpec":
        return cls("l1", dim, scale=scale)

    @classmethod
    def l2(cls, dim: int, scale: float = 1.0) -> "NormSpec":
        return cls("l2", dim, scale=scale)

    @classmethod
    def lp(cls, dim: int, p: float, scale: float = 1.0) -> "NormSpec":
        return cls("lp", dim, p=p, scale=scale)

    @property
    def exponent(self) -> float:
        """The lp exponent, with inf standing for the sup norm."""
        if self.kind == "sup":
            return math.inf
        if self.kind == "l1":
            return 1.0
        if self.kind == "l2":
            return 2.0
        return float(self.p)

    @property
    def volume(self) -> float:
        """Lebesgue volume of the unit ball."""
        return unit_ball_volume(self)

    @property
    def min_scale(self) -> float:
        """Lower bound constant c with |x| >= c * |x|_inf (c = scale for lp)."""
        return self.scale

    def __call__(self, x) -> float:
        x = np.asarray(x, dtype=float)
        p = self.exponent
        if math.isinf(p):
            base = float(np.max(np.abs(x)))
        elif p == 1.0:
            base = float(np.sum(np.abs(x)))
        elif p == 2.0:
            base = float(np.sqrt(np.sum(x * x)))
        else:
            base = float(np.sum(np.abs(x) ** p) ** (1.0 / p))
        return self.scale * base

    def of_rows(self, xs: np.ndarray) -> np.ndarray:
        """Vectorized norm along the last axis."""
        xs = np.asarray(xs, dtype=float)
        p = self.exponent
        if math.isinf(p):
            base = np.max(np.abs(xs), axis=-1)
        elif p == 1.0:
            base = np.sum(np.abs(xs), axis=-1)
        elif p == 2.0:
            base = np.sqrt(np.sum(xs * xs, axis=-1))
        else:
            base = np.sum(np.abs(xs) ** p, axis=-1) ** (1.0 / p)
        return self.scale * base


def unit_ball_volume(norm: NormSpec) -> float:
    """Exact closed-form Lebesgue volume of the norm's unit ball.

    For lp the volume is 2^d Gamma(1+1/p)^d / Gamma(1+d/p); the sup norm
    is the p -> inf limit 2^d.  A scale factor gamma shrinks the ball by
    gamma^-d.
    """
    d = norm.dim
    p = norm.exponent
    if math.isinf(p):
        base = 2.0 ** d
    else:
        base = 2.0 ** d * math.gamma(1.0 + 1.0 / p) ** d / math.gamma(1.0 + d / p)
    return base / norm.scale ** d


@dataclass(frozen=True)
class MixedNorm:
    """The norm max(|p|_mu, |q|_nu) on R^(m+n) used for lattice vectors."""

    dims: Dimensions
    mu: NormSpec
    nv: NormSpec

    def __post_init__(self):
        if self.mu.dim != self.dims.m or self.nv.dim != self.dims.n:
            raise ValueError("norm dimensions must match (m, n)")

    def __call__(self, r) -> float:
        r = np.asarray(r, dtype=float)
        m = self.dims.m
        return max(self.mu(r[:m]), self.nv(r[m:]))

    def of_rows(self, rs: np.ndarray) -> np.ndarray:
        rs = np.asarray(rs, dtype=float)
        m = self.dims.m
        return np.maximum(self.mu.of_rows(rs[..., :m]), self.nv.of_rows(rs[..., m:]))

    @property
    def ball_volume(self) -> float:
        """The mixed ball is the product B_mu x B_nu, so volumes multiply."""
        return self.mu.volume * self.nv.volume

    @property
    def min_scale(self) -> float:
        """Lower bound constant c with |r|_mixed >= c * |r|_inf."""
        return min(self.mu.scale, self.nv.scale)


def eta(dims: Dimensions, mu: NormSpec, nv: NormSpec) -> float:
    """The measure-law constant n V_mu V_nu / (2 zeta(m+n))."""
    _check_norm_dims(dims, mu, nv)
    return dims.n * mu.volume * nv.volume / (2.0 * zeta(dims.d))


def theta(dims: Dimensions, mu: NormSpec, nv: NormSpec) -> float:
    """The dimension-deficit slope V_mu V_nu/(2 zeta(m+n)) * mn/(m+n)."""
    _check_norm_dims(dims, mu, nv)
    return mu.volume * nv.volume / (2.0 * zeta(dims.d)) * dims.D / dims.d


def jbbd_dimension(dims: Dimensions, c: float) -> float:
    """Hausdorff dimension of the psi_c-approximable matrices, psi_c(q)=q^-c.

    Valid for c > n/m (the convergence regime); at c = n/m it returns the
    ambient dimension mn.
    """
    if c < dims.n / dims.m:
        raise ValueError("jbbd_dimension requires c >= n/m")
    return (dims.n - 1) * dims.m + dims.d / (1.0 + c)


def cube_operator_norm(dims: Dimensions, mu: NormSpec, nv: NormSpec) -> float:
    """Upper bound for max over A in [0,1]^(m x n) of the operator norm mu<-nu.

    Exact when mu is the sup norm (the all-ones matrix is extremal); for
    other mu norms the sup-norm value is inflated by m^(1/p).
    """
    _check_norm_dims(dims, mu, nv)
    p_nv = nv.exponent
    if math.isinf(p_nv):
        row = float(dims.n)
    else:
        # max of sum of positive parts over the nu unit ball
        row = dims.n ** (1.0 - 1.0 / p_nv)
    row /= nv.scale
    p_mu = mu.exponent
    factor = 1.0 if math.isinf(p_mu) else dims.m ** (1.0 / p_mu)
    return mu.scale * factor * row


def normalized_mu_for_half_cube(dims: Dimensions, mu: NormSpec, nv: NormSpec) -> NormSpec:
    """Rescale mu so the unit cube has operator norm at most 1/2.

    This is the explicit toggle for the half-cube normalization under
    which every slab hit satisfies |p|_mu <= |q|_nu; the constants eta and
    theta change accordingly because they depend on V_mu.
    """
    bound = cube_operator_norm(dims, mu, nv)
    return NormSpec(mu.kind, mu.dim, p=mu.p, scale=mu.scale / (2.0 * bound))


def _check_norm_dims(dims: Dimensions, mu: NormSpec, nv: NormSpec) -> None:
    if mu.dim != dims.m:
        raise ValueError("mu norm dimension must equal m")
    if nv.dim != dims.n:
        raise ValueError("nv norm dimension must equal n")
