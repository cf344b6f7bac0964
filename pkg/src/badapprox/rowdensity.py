"""Exact distribution of a row response sum(q_j t_j) with t uniform on [0,1]^n.

This is the generalized Irwin-Hall distribution: a piecewise polynomial of
degree (#nonzero q_j) - 1 with breakpoints at the subset sums of q.  Its CDF
is what makes slab measures under the sup norm exact: the rows of a random
matrix are independent, so the slab measure is a product of CDF increments.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Sequence

import numpy as np

__all__ = ["RowDensity"]

_MAX_COORDS = 20  # 2^n subset sums; beyond this the representation blows up


class RowDensity:
    """Density of sum_j q_j t_j for integer q and i.i.d. t_j ~ U[0,1]."""

    def __init__(self, q: Sequence[int]):
        q = [int(v) for v in q]
        if len(q) > _MAX_COORDS:
            raise ValueError("row density supports at most %d coordinates" % _MAX_COORDS)
        if all(v == 0 for v in q):
            raise ValueError("q must be nonzero")
        self.q = tuple(q)
        self.shift = sum(min(v, 0) for v in q)
        self.weights = tuple(abs(v) for v in q if v != 0)
        n = len(self.weights)
        self.degree = n - 1

        # subset sums with parity signs, built incrementally
        sums = np.zeros(1 << n, dtype=np.int64)
        signs = np.ones(1 << n, dtype=np.int64)
        for i, w in enumerate(self.weights):
            bit = 1 << i
            sums[bit : 2 * bit] = sums[:bit] + w
            signs[bit : 2 * bit] = -signs[:bit]
        self._sums = sums
        self._signs = signs
        self._cdf_norm = math.factorial(n) * math.prod(self.weights)
        self._pdf_norm = math.factorial(n - 1) * math.prod(self.weights)

    @property
    def support(self) -> tuple[int, int]:
        return (self.shift, self.shift + sum(self.weights))

    def breakpoints(self) -> np.ndarray:
        return np.unique(self._sums) + self.shift

    def cdf(self, x):
        """P(sum q_j t_j <= x), vectorized, clipped to [0, 1]."""
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        t = np.expand_dims(np.atleast_1d(x), -1) - float(self.shift) - self._sums
        n = len(self.weights)
        vals = np.sum(self._signs * np.maximum(t, 0.0) ** n, axis=-1) / self._cdf_norm
        out = np.clip(vals, 0.0, 1.0)
        return float(out[0]) if scalar else out

    def pdf(self, x):
        """The density itself, vectorized."""
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        xv = np.atleast_1d(x)
        t = np.expand_dims(xv, -1) - float(self.shift) - self._sums
        n = len(self.weights)
        vals = np.sum(self._signs * np.maximum(t, 0.0) ** (n - 1), axis=-1) / self._pdf_norm
        lo, hi = self.support
        out = np.where((xv < lo) | (xv > hi), 0.0, vals)
        return float(out[0]) if scalar else out

    def cdf_exact(self, x: Fraction) -> Fraction:
        """CDF with exact rational arithmetic."""
        x = Fraction(x)
        n = len(self.weights)
        total = Fraction(0)
        t0 = x - self.shift
        for s, sg in zip(self._sums.tolist(), self._signs.tolist()):
            t = t0 - s
            if t > 0:
                total += sg * t ** n
        val = total / self._cdf_norm
        return min(max(val, Fraction(0)), Fraction(1))

    def interval_probability(self, a: float, b: float) -> float:
        """P(a <= sum q_j t_j <= b)."""
        if b < a:
            return 0.0
        return max(float(self.cdf(b) - self.cdf(a)), 0.0)

    @property
    def peak_bound(self) -> float:
        """The density never exceeds 1/max|q_j| (convolution can only flatten)."""
        return 1.0 / max(self.weights)
