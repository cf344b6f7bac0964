"""Block scheduler: the doubling sequence (N_k) that pins window masses.

Each block takes the denominator scale from Q^k = (N^k)^alpha to Q^(k+1)
and is sized greedily (smallest power of 2) so that the window mass lands in

    beta <= F_psi(Q^k, Q^(k+1)) <= beta + M_psi * alpha * log 2.

Products N^k grow like 2^(29k) for typical parameters, so the schedule
stores integer log2 exponents and log-space Q values; the exact big-integer
products are available as properties.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .functions import ApproxFunction
from .norms import Dimensions

__all__ = ["Schedule", "build_schedule", "constant_schedule"]

_LN2 = math.log(2.0)

# Largest trial exponent before declaring the divergence assumption violated:
# 64 doublings of the trial block exponent.
_MAX_DOUBLINGS = 64


@dataclass(frozen=True)
class Schedule:
    """A block sequence N_k = 2^exponents[k] with its log-space companions."""

    psi: ApproxFunction
    beta: float
    alpha: float
    exponents: tuple[int, ...]

    @property
    def k_max(self) -> int:
        return len(self.exponents)

    @property
    def log2_nprod(self) -> tuple[int, ...]:
        """Integer log2 of N^k for k = 0..k_max (N^0 = 1)."""
        out = [0]
        for e in self.exponents:
            out.append(out[-1] + e)
        return tuple(out)

    @property
    def Nk(self) -> list[int]:
        """The blocks N_k themselves (exact integers)."""
        return [1 << e for e in self.exponents]

    @property
    def Nprod(self) -> list[int]:
        """Running products N^k for k = 0..k_max (exact big integers)."""
        return [1 << s for s in self.log2_nprod]

    @property
    def log_qk(self) -> list[float]:
        """log Q^k = alpha * log N^k for k = 0..k_max."""
        return [self.alpha * s * _LN2 for s in self.log2_nprod]

    def Qk(self, k: int) -> float:
        """Q^k as a float; may overflow to inf for very deep schedules."""
        return math.exp(self.log_qk[k])

    def F_block(self, k: int) -> float:
        """F_psi(Q^k, Q^(k+1)) for 0 <= k < k_max, exact closed form."""
        lq = self.log_qk
        return self.psi.F_log(lq[k], lq[k + 1])


def _validate(beta: float, alpha: float, k_max: int) -> None:
    if beta <= 0:
        raise ValueError("beta must be positive")
    if not (0 < alpha < 1):
        raise ValueError("alpha must lie in (0, 1)")
    if k_max < 1:
        raise ValueError("k_max must be a positive integer")


def build_schedule(psi: ApproxFunction, beta: float, alpha: float, k_max: int) -> Schedule:
    """Greedy doubling construction of the block sequence.

    At each level the block exponent is the smallest l >= 1 with
    F_psi(Q^k, (2^l N^k)^alpha) >= beta.  If no exponent up to 2^64
    achieves this, psi fails the divergence assumption.
    """
    _validate(beta, alpha, k_max)
    exponents: list[int] = []
    s = 0  # log2 N^k so far
    for _ in range(k_max):
        lo_log = alpha * s * _LN2

        def gain(ell: int) -> float:
            return psi.F_log(lo_log, alpha * (s + ell) * _LN2)

        # bracket by doubling the trial exponent, then binary-search minimality
        ell = 1
        if gain(ell) < beta:
            doublings = 0
            while gain(ell) < beta:
                ell *= 2
                doublings += 1
                if doublings > _MAX_DOUBLINGS:
                    raise ValueError(
                        "divergence assumption violated: F_psi(Q, inf) appears finite"
                    )
            lo, hi = ell // 2, ell  # gain(lo) < beta <= gain(hi)
            while lo + 1 < hi:
                mid = (lo + hi) // 2
                if gain(mid) >= beta:
                    hi = mid
                else:
                    lo = mid
            ell = hi
        exponents.append(ell)
        s += ell
    return Schedule(psi, beta, alpha, tuple(exponents))


def constant_schedule(
    kappa: float,
    beta: float,
    alpha: float,
    k_max: int,
    dims: Dimensions = Dimensions(1, 1),
) -> Schedule:
    """Constant block sequence N_k = 2^ceil(beta / (kappa alpha log 2)).

    This is the closed form the greedy construction reduces to for the
    power-law family psi(q) = kappa^(1/m) q^(-n/m), where every window
    carries mass exactly kappa * alpha * l * log 2.
    """
    _validate(beta, alpha, k_max)
    if kappa <= 0:
        raise ValueError("divergence assumption violated: kappa must be positive")
    exponent = math.ceil(beta / (kappa * alpha * _LN2) - 1e-12)
    psi = ApproxFunction.power_law(dims, kappa)
    return Schedule(psi, beta, alpha, (exponent,) * k_max)
