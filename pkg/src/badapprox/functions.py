"""Approximation functions, dimension functions, and the measure classification.

The central quantity is the window integral

    F_psi(Q1, Q2) = int_{Q1}^{Q2} q^(n-1) psi(q)^m dq
                  = int phi(q) dq/q,      phi(q) = q^n psi(q)^m,

evaluated in closed form for the built-in families and exactly per segment
for tabulated data.  Everything that has to survive astronomically large Q
(the block scheduler) goes through the log-space entry point ``F_log``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .norms import Dimensions, NormSpec, eta as eta_const

__all__ = [
    "ApproxFunction",
    "DimFunction",
    "F_psi",
    "LExponent",
    "L_exponent",
    "Verdict",
    "Classification",
    "classify",
]

_LN2 = math.log(2.0)


@dataclass(frozen=True)
class ApproxFunction:
    """A nice approximation function psi from one of three families.

    power-law      psi(q) = kappa^(1/m) q^(-n/m)          (phi constant = kappa)
    log-corrected  psi(q) = gamma^(1/m) q^(-n/m) log(2 v q)^(-1/m)
    tabulated      piecewise log-linear between (q, psi) samples, extended
                   beyond the grid with constant phi (power-law tails)

    ``phi`` must be nonincreasing; this is structural for the closed-form
    families and verified on the grid for tabulated input.
    """

    dims: Dimensions
    family: str
    kappa: float | None = None
    gamma: float | None = None
    log_q: np.ndarray | None = None
    log_psi: np.ndarray | None = None

    def __post_init__(self):
        if self.family == "power-law":
            if self.kappa is None or self.kappa < 0:
                raise ValueError("power-law requires kappa >= 0")
        elif self.family == "log-corrected":
            if self.gamma is None or self.gamma <= 0:
                raise ValueError("log-corrected requires gamma > 0")
        elif self.family == "tabulated":
            lq, lpsi = self.log_q, self.log_psi
            if lq is None or lpsi is None or len(lq) < 2 or len(lq) != len(lpsi):
                raise ValueError("tabulated requires >= 2 (q, psi) samples")
            if np.any(np.diff(lq) <= 0):
                raise ValueError("tabulated q grid must be strictly increasing")
            phis = self._table_log_phi()
            if np.any(np.diff(phis) > 1e-12):
                raise ValueError("tabulated phi(q) = q^n psi(q)^m must be nonincreasing")
        else:
            raise ValueError("unknown approximation family %r" % (self.family,))

    # --- constructors ---------------------------------------------------
    @classmethod
    def power_law(cls, dims: Dimensions, kappa: float) -> "ApproxFunction":
        return cls(dims, "power-law", kappa=float(kappa))

    @classmethod
    def log_corrected(cls, dims: Dimensions, gamma: float) -> "ApproxFunction":
        return cls(dims, "log-corrected", gamma=float(gamma))

    @classmethod
    def tabulated(cls, dims: Dimensions, samples: Sequence[tuple[float, float]]) -> "ApproxFunction":
        samples = sorted((float(q), float(v)) for q, v in samples)
        if any(q <= 0 or v <= 0 for q, v in samples):
            raise ValueError("tabulated samples must have positive q and psi")
        lq = np.array([math.log(q) for q, _ in samples])
        lpsi = np.array([math.log(v) for _, v in samples])
        return cls(dims, "tabulated", log_q=lq, log_psi=lpsi)

    @classmethod
    def dirichlet(cls, dims: Dimensions) -> "ApproxFunction":
        """The critical function psi_*(q) = q^(-n/m)."""
        return cls.power_law(dims, 1.0)

    def _table_log_phi(self) -> np.ndarray:
        return self.dims.n * self.log_q + self.dims.m * self.log_psi

    # --- pointwise evaluation -------------------------------------------
    def __call__(self, q):
        m, n = self.dims.m, self.dims.n
        q = np.asarray(q, dtype=float)
        if self.family == "power-law":
            out = self.kappa ** (1.0 / m) * q ** (-n / m)
        elif self.family == "log-corrected":
            out = self.gamma ** (1.0 / m) * q ** (-n / m) * np.log(np.maximum(q, 2.0)) ** (-1.0 / m)
        else:
            out = np.exp(self._table_log_psi(np.log(q)))
        return out if out.ndim else float(out)

    def log_psi_at(self, lq: float) -> float:
        """log psi(q) from lq = log q, safe for arguments beyond float range."""
        m, n = self.dims.m, self.dims.n
        if self.family == "power-law":
            if self.kappa == 0:
                return -math.inf
            return math.log(self.kappa) / m - (n / m) * lq
        if self.family == "log-corrected":
            return math.log(self.gamma) / m - (n / m) * lq - math.log(max(lq, _LN2)) / m
        return float(self._table_log_psi(lq))

    def _table_log_psi(self, lq):
        # linear interpolation in (log q, log psi); constant-phi tails
        lq = np.asarray(lq, dtype=float)
        m, n = self.dims.m, self.dims.n
        inner = np.interp(lq, self.log_q, self.log_psi)
        lphi = self._table_log_phi()
        lo = (lphi[0] - n * lq) / m
        hi = (lphi[-1] - n * lq) / m
        return np.where(lq < self.log_q[0], lo, np.where(lq > self.log_q[-1], hi, inner))

    def phi(self, q):
        """phi(q) = q^n psi(q)^m = (psi/psi_*)^m."""
        q = np.asarray(q, dtype=float)
        out = q ** self.dims.n * np.asarray(self(q)) ** self.dims.m
        return out if out.ndim else float(out)

    def Psi(self, q):
        """The slab thickness scale psi(q)/q."""
        q = np.asarray(q, dtype=float)
        out = np.asarray(self(q)) / q
        return out if out.ndim else float(out)

    @property
    def M_psi(self) -> float:
        """psi(1)^m = phi(1)."""
        return float(self.phi(1.0))

    # --- the window integral ---------------------------------------------
    def F(self, Q1: float, Q2: float) -> float:
        if Q2 < Q1:
            raise ValueError("F_psi requires Q1 <= Q2")
        if Q1 <= 0:
            raise ValueError("F_psi requires Q1 >= 1 > 0")
        return self.F_log(math.log(Q1), math.log(Q2))

    def F_log(self, l1: float, l2: float) -> float:
        """F over [exp(l1), exp(l2)], safe for exponents far beyond float range."""
        if l2 < l1:
            raise ValueError("F_psi requires Q1 <= Q2")
        if self.family == "power-law":
            return self.kappa * (l2 - l1)
        if self.family == "log-corrected":
            total = 0.0
            if l1 < _LN2:
                total += self.gamma / _LN2 * (min(l2, _LN2) - l1)
            if l2 > _LN2:
                a = max(l1, _LN2)
                total += self.gamma * (math.log(l2) - math.log(a))
            return total
        return self._table_F_log(l1, l2)

    def _table_F_log(self, l1: float, l2: float) -> float:
        lq = self.log_q
        lphi = self._table_log_phi()
        total = 0.0
        # constant-phi head below the grid
        if l1 < lq[0]:
            total += math.exp(lphi[0]) * (min(l2, lq[0]) - l1)
        # constant-phi tail above the grid
        if l2 > lq[-1]:
            total += math.exp(lphi[-1]) * (l2 - max(l1, lq[-1]))
        # interior segments: log phi linear in log q, so phi = A q^c and
        # int phi dq/q = A (q2^c - q1^c)/c, or A (l_hi - l_lo) when c = 0
        a, b = max(l1, lq[0]), min(l2, lq[-1])
        if a < b:
            for i in range(len(lq) - 1):
                lo, hi = max(a, lq[i]), min(b, lq[i + 1])
                if lo >= hi:
                    continue
                c = (lphi[i + 1] - lphi[i]) / (lq[i + 1] - lq[i])
                if abs(c) < 1e-13:
                    total += math.exp(lphi[i]) * (hi - lo)
                else:
                    base = lphi[i] + c * (lo - lq[i])
                    total += math.exp(base) * math.expm1(c * (hi - lo)) / c
        return total

    def F_one_log(self, lQ: float) -> float:
        """The one-sided window mass F_psi(1, Q) with Q = exp(lQ)."""
        return self.F_log(0.0, lQ)

    # --- scalings ---------------------------------------------------------
    def scaled(self, gamma: float) -> "ApproxFunction":
        """The function gamma * psi, staying inside the closed-form families."""
        if gamma <= 0:
            raise ValueError("scaling factor must be positive")
        m = self.dims.m
        if self.family == "power-law":
            return ApproxFunction.power_law(self.dims, gamma ** m * self.kappa)
        if self.family == "log-corrected":
            return ApproxFunction.log_corrected(self.dims, gamma ** m * self.gamma)
        return ApproxFunction(
            self.dims, "tabulated", log_q=self.log_q, log_psi=self.log_psi + math.log(gamma)
        )

    def scaling_ratio_to(self, other: "ApproxFunction") -> float | None:
        """Return gamma with self = gamma * other, or None if not proportional."""
        if self.dims != other.dims:
            return None
        m = self.dims.m
        if self.family == other.family == "power-law":
            if other.kappa == 0:
                return None
            return (self.kappa / other.kappa) ** (1.0 / m)
        if self.family == other.family == "log-corrected":
            return (self.gamma / other.gamma) ** (1.0 / m)
        if self.family == other.family == "tabulated":
            if self.log_q.shape == other.log_q.shape and np.allclose(self.log_q, other.log_q):
                diffs = self.log_psi - other.log_psi
                if np.allclose(diffs, diffs[0], atol=1e-12):
                    return math.exp(diffs[0])
            return None
        return None

    def block_rescaled(self, Qk: float) -> "ApproxFunction":
        """The zoomed function psi'(q) = Qk^(n/m) psi(Qk q).

        Power-law input is a fixed point; tabulated grids transform exactly.
        This is the rescaling under which the window mass F is invariant.
        """
        m, n = self.dims.m, self.dims.n
        if self.family == "power-law":
            return self
        if self.family == "tabulated":
            shift = math.log(Qk)
            return ApproxFunction(
                self.dims,
                "tabulated",
                log_q=self.log_q - shift,
                log_psi=self.log_psi + (n / m) * shift,
            )
        raise ValueError("block rescaling of a log-corrected function leaves the family")

    def vanishing_ratio_witnessed(self) -> bool:
        """Whether psi/psi_* -> 0 holds (or is witnessed on the grid)."""
        if self.family == "power-law":
            return False
        if self.family == "log-corrected":
            return True
        lphi = self._table_log_phi()
        return bool(lphi[-1] < lphi[0] - 1e-9)


def F_psi(psi: ApproxFunction, Q1: float, Q2: float) -> float:
    """Window mass int_{Q1}^{Q2} q^(n-1) psi(q)^m dq, Q1 <= Q2."""
    return psi.F(Q1, Q2)


class Verdict(enum.Enum):
    ZERO = "zero"
    INFINITY = "infinity"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class DimFunction:
    """A dimension function f from one of three families.

    power       f(rho) = rho^s, 0 < s <= mn
    log-power   f(rho) = rho^(mn) |log rho|^s, s > 0
    corollary   f(rho) = rho^(mn) exp F_psi(rho^(-m/(m+n))) capped at rho0;
                the construction whose L-exponent against gamma*psi is
                exactly gamma^(-m)
    """

    dims: Dimensions
    family: str
    s: float | None = None
    psi: ApproxFunction | None = None
    rho0: float | None = None

    def __post_init__(self):
        D = self.dims.D
        if self.family == "power":
            if self.s is None or not (0 < self.s <= D):
                raise ValueError("power requires s in (0, mn]")
        elif self.family == "log-power":
            if self.s is None or self.s <= 0:
                raise ValueError("log-power requires s > 0")
        elif self.family == "corollary":
            if self.psi is None or self.rho0 is None or not (0 < self.rho0 < 1):
                raise ValueError("corollary requires a psi and rho0 in (0, 1)")
            if self.psi.dims != self.dims:
                raise ValueError("corollary psi dimensions mismatch")
        else:
            raise ValueError("unknown dimension-function family %r" % (self.family,))
        self._check_monotone_vanishing()

    @classmethod
    def power(cls, dims: Dimensions, s: float) -> "DimFunction":
        return cls(dims, "power", s=float(s))

    @classmethod
    def log_power(cls, dims: Dimensions, s: float) -> "DimFunction":
        return cls(dims, "log-power", s=float(s))

    @classmethod
    def corollary(cls, dims: Dimensions, psi: ApproxFunction, rho0: float) -> "DimFunction":
        return cls(dims, "corollary", psi=psi, rho0=float(rho0))

    def _check_monotone_vanishing(self):
        # nondecreasing on the checked range and f(rho) -> 0: geometric grid.
        # log-power is only monotone below exp(-s/D), so the grid starts there.
        if self.family == "corollary":
            top = math.log(self.rho0)
        elif self.family == "log-power":
            top = -self.s / self.dims.D - 1e-9
        else:
            top = 0.0
        grid = top - _LN2 * np.arange(0, 61)
        vals = np.array([self.log_value(l) for l in grid])
        if np.any(np.diff(vals) > 1e-9):
            raise ValueError("dimension function must be nondecreasing")
        if vals[-1] > vals[0] - 1.0:
            raise ValueError("dimension function must tend to 0 at 0")

    # log f(rho) as a function of l = log rho, for l <= 0
    def log_value(self, l: float) -> float:
        D = self.dims.D
        if self.family == "power":
            return self.s * l
        if self.family == "log-power":
            if l == 0.0:
                return -math.inf
            return D * l + self.s * math.log(-l)
        l0 = math.log(self.rho0)
        if l > l0:
            return self.log_value(l0)
        alpha = float(self.dims.alpha)
        return D * l + self.psi.F_one_log(-alpha * l)

    def __call__(self, rho: float) -> float:
        if rho <= 0:
            raise ValueError("dimension functions are defined for rho > 0")
        return math.exp(self.log_value(math.log(min(rho, 1.0)))) if rho <= 1.0 else self(1.0)

    def log_ratio_to_fstar(self, l: float) -> float:
        """log( f(rho) / rho^mn ) at l = log rho."""
        return self.log_value(l) - self.dims.D * l


@dataclass(frozen=True)
class LExponent:
    """Value of the liminf exponent L, with provenance.

    ``exact`` marks closed-form family pairs; otherwise ``error`` is the
    spread of the deepest grid ratios and should be treated as a 1-sigma
    bar on the numerical liminf.
    """

    value: float
    error: float
    exact: bool

    def __float__(self) -> float:
        return self.value


_DEFAULT_KS = np.arange(8, 61)


def L_exponent(f: DimFunction, psi: ApproxFunction, rho_grid: np.ndarray | None = None) -> LExponent:
    """liminf over rho -> 0 of log(f/f_*)(rho) / F_psi(rho^(-m/(m+n))).

    Closed-form family pairs get the exact analytic limit; everything else
    falls back to a liminf over the dyadic grid rho_k = 2^-k, k = 8..60.
    """
    if f.dims != psi.dims:
        raise ValueError("dimension mismatch between f and psi")
    dims = f.dims
    alpha = float(dims.alpha)

    exact = _analytic_L(f, psi)
    if exact is not None:
        return LExponent(exact, 0.0, True)

    if rho_grid is None:
        ls = -_LN2 * _DEFAULT_KS
    else:
        rho_grid = np.asarray(rho_grid, dtype=float)
        if len(rho_grid) < 32 or np.any(np.diff(rho_grid) >= 0) or np.any(rho_grid <= 0) or np.any(rho_grid >= 1):
            raise ValueError("rho grid must be >= 32 points in (0,1) decreasing toward 0")
        ls = np.log(rho_grid)

    nums = np.array([f.log_ratio_to_fstar(l) for l in ls])
    dens = np.array([psi.F_one_log(-alpha * l) for l in ls])
    if np.all(dens == 0.0):
        raise ValueError("F_psi vanishes on the entire grid")
    mask = dens > 0
    ratios = nums[mask] / dens[mask]
    tail = ratios[len(ratios) // 2 :]
    value = float(np.min(tail))
    err = float(np.std(tail[-8:])) if len(tail) >= 2 else abs(value)
    return LExponent(value, err, False)


def _analytic_L(f: DimFunction, psi: ApproxFunction) -> float | None:
    dims = f.dims
    alpha = float(dims.alpha)
    D = dims.D
    if f.family == "corollary":
        ratio = psi.scaling_ratio_to(f.psi)
        if ratio is not None:
            return ratio ** (-dims.m)
        return None
    if psi.family == "power-law":
        if f.family == "power":
            if psi.kappa == 0:
                raise ValueError("F_psi vanishes identically for kappa = 0")
            return (D - f.s) / (psi.kappa * alpha)
        if f.family == "log-power":
            return 0.0
    if psi.family == "log-corrected":
        if f.family == "log-power":
            return f.s / psi.gamma
        if f.family == "power":
            return 0.0 if f.s == D else math.inf
    return None


@dataclass(frozen=True)
class Classification:
    """Hausdorff-measure verdict for the set of non-psi-approximable matrices."""

    verdict: Verdict
    L_value: float
    eta_value: float
    L_error: float = 0.0
    exact: bool = True


def classify(
    f: DimFunction,
    psi: ApproxFunction,
    dims: Dimensions,
    mu: NormSpec,
    nv: NormSpec,
) -> Classification:
    """Trichotomy: measure 0 if L < eta, infinity if L > eta, unknown at eta.

    Requires psi/psi_* -> 0 (witnessed for tabulated input by a strictly
    decreasing phi across the grid); the pure power-law family violates
    this and is rejected.
    """
    if psi.dims != dims or f.dims != dims:
        raise ValueError("dimension mismatch")
    if not psi.vanishing_ratio_witnessed():
        raise ValueError("classification requires psi/psi_* -> 0 (not witnessed)")
    L = L_exponent(f, psi)
    ev = eta_const(dims, mu, nv)
    if L.exact:
        tol = 1e-9 * max(abs(L.value), ev)
    else:
        tol = 3.0 * L.error
    if math.isinf(L.value):
        verdict = Verdict.INFINITY if L.value > 0 else Verdict.ZERO
    elif abs(L.value - ev) <= tol:
        verdict = Verdict.UNKNOWN
    elif L.value < ev:
        verdict = Verdict.ZERO
    else:
        verdict = Verdict.INFINITY
    return Classification(verdict, L.value, ev, L.error, L.exact)
