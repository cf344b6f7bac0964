"""Target slabs Delta_psi(p, q) inside the unit cube of matrices.

A slab is the set of matrices A with |Aq - p|_mu <= psi(|q|_nu).  Under the
sup norm its measure factors across rows into CDF increments of the row
density; other norms go through seeded Monte Carlo.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BudgetExceededError
from .functions import ApproxFunction
from .norms import NormSpec
from .rowdensity import RowDensity

__all__ = [
    "Slab",
    "slab_measure_exact",
    "slab_measure_mc",
    "enumerate_q_vectors",
    "hit_list",
    "thickness_check",
    "round_half_down",
]

DEFAULT_ENUM_BUDGET = 10 ** 8


@dataclass(frozen=True)
class Slab:
    """One target set Delta_psi(p, q) with a fixed radius psi(|q|_nu)."""

    p: tuple[int, ...]
    q: tuple[int, ...]
    radius: float

    def __post_init__(self):
        if all(v == 0 for v in self.q):
            raise ValueError("q must be nonzero")
        if self.radius <= 0:
            raise ValueError("radius must be positive")

    @property
    def m(self) -> int:
        return len(self.p)

    @property
    def n(self) -> int:
        return len(self.q)


def slab_measure_exact(slab: Slab, mu: NormSpec) -> float:
    """lambda_K(Delta) as an exact product of row-density CDF increments.

    Only the sup norm factors across rows; the axis-box structure of its
    ball is what makes the product decomposition valid.
    """
    if mu.kind != "sup":
        raise ValueError("exact measure requires sup norm")
    if mu.dim != slab.m:
        raise ValueError("mu dimension must equal len(p)")
    r = slab.radius / mu.scale
    density = RowDensity(slab.q)
    out = 1.0
    for pi in slab.p:
        out *= density.interval_probability(pi - r, pi + r)
    return out


def slab_measure_mc(
    slab: Slab, mu: NormSpec, samples: int, seed: int
) -> tuple[float, float]:
    """Unbiased Monte Carlo estimate of lambda_K(Delta) with binomial stderr."""
    if samples < 1000:
        raise ValueError("need at least 1000 samples")
    if mu.dim != slab.m:
        raise ValueError("mu dimension must equal len(p)")
    rng = np.random.default_rng(seed)
    q = np.asarray(slab.q, dtype=float)
    p = np.asarray(slab.p, dtype=float)
    hits = 0
    remaining = samples
    chunk = max(1, min(remaining, 2 * 10 ** 6 // max(slab.m * slab.n, 1)))
    while remaining > 0:
        k = min(chunk, remaining)
        A = rng.random((k, slab.m, slab.n))
        resid = A @ q - p
        hits += int(np.count_nonzero(mu.of_rows(resid) <= slab.radius))
        remaining -= k
    est = hits / samples
    stderr = math.sqrt(max(est * (1.0 - est), 0.0) / samples)
    return est, stderr


def round_half_down(y: np.ndarray) -> np.ndarray:
    """Nearest integer with exact half-integers resolved downward."""
    return np.ceil(np.asarray(y) - 0.5)


def enumerate_q_vectors(
    nv: NormSpec,
    Q1: float,
    Q2: float,
    budget: int = DEFAULT_ENUM_BUDGET,
    canonical: bool = True,
) -> tuple[np.ndarray, np.ndarray]:
    """All integer q with Q1 <= |q|_nu <= Q2, one of each +-q pair if canonical.

    Canonical representatives have their first nonzero coordinate positive.
    Returns (qs, norms) with qs of shape (K, n) in a fixed deterministic order.
    """
    if Q2 < Q1:
        raise ValueError("requires Q1 <= Q2")
    n = nv.dim
    box = int(math.floor(Q2 / nv.scale + 1e-12))
    count = (2 * box + 1) ** n
    if count > budget:
        raise BudgetExceededError(
            "q enumeration needs %d lattice points (budget %d)" % (count, budget),
            required=count,
        )
    axes = [np.arange(-box, box + 1, dtype=np.int64)] * n
    grid = np.meshgrid(*axes, indexing="ij")
    qs = np.stack([g.ravel() for g in grid], axis=-1)
    if canonical:
        keep = np.zeros(len(qs), dtype=bool)
        decided = np.zeros(len(qs), dtype=bool)
        for j in range(n):
            col = qs[:, j]
            keep |= (~decided) & (col > 0)
            decided |= col != 0
        qs = qs[keep]
    else:
        qs = qs[np.any(qs != 0, axis=1)]
    norms = nv.of_rows(qs)
    mask = (norms >= Q1) & (norms <= Q2)
    return qs[mask], norms[mask]


def hit_list(
    A: np.ndarray,
    psi: ApproxFunction,
    Q1: float,
    Q2: float,
    nv: NormSpec,
    mu: NormSpec | None = None,
    budget: int = DEFAULT_ENUM_BUDGET,
) -> list[tuple[np.ndarray, np.ndarray]]:
    """All pairs (p, q) with A in Delta_psi(p, q) and Q1 <= |q|_nu <= Q2.

    q runs over canonical representatives (first nonzero coordinate
    positive; the pair (-p, -q) describes the same slab).  For each q the
    candidate p is the nearest integer vector to Aq, half-integers rounded
    down, which minimizes any monotone norm of the residual.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    m, n = A.shape
    if nv.dim != n:
        raise ValueError("nv dimension must equal n")
    if mu is None:
        mu = NormSpec.sup(m)
    qs, qnorms = enumerate_q_vectors(nv, Q1, Q2, budget=budget)
    if len(qs) == 0:
        return []
    Y = qs.astype(float) @ A.T  # (K, m)
    P = round_half_down(Y)
    dists = mu.of_rows(Y - P)
    radii = np.asarray(psi(qnorms))
    sel = np.nonzero(dists <= radii)[0]
    return [(P[i].astype(np.int64), qs[i]) for i in sel]


def _operator_norm_bound(E: np.ndarray, mu: NormSpec, nv: NormSpec) -> float:
    """Upper bound for the mu<-nu operator norm of E via row sums."""
    row = float(np.max(np.sum(np.abs(E), axis=1)))
    p_mu = mu.exponent
    mfac = 1.0 if math.isinf(p_mu) else E.shape[0] ** (1.0 / p_mu)
    return mu.scale * mfac * row / nv.scale


def thickness_check(
    slab: Slab,
    psi2_radius: float,
    mu: NormSpec | None = None,
    nv: NormSpec | None = None,
    samples: int = 10 ** 4,
    inflate: float = 1.0,
    seed: int = 0,
) -> bool:
    """Probe the slab-thickness inclusion N(Delta_psi1, psi2/|q|) <= Delta_(psi1+psi2).

    Samples points in the slab, perturbs each by a matrix of operator norm
    at most inflate * psi2_radius / |q|_nu, and reports True iff every
    perturbed point lands in the fattened slab.  With inflate = 1 this is
    the inclusion itself; larger inflation factors can break it.
    """
    m, n = slab.m, slab.n
    if mu is None:
        mu = NormSpec.sup(m)
    if nv is None:
        nv = NormSpec.sup(n)
    rng = np.random.default_rng(seed)
    q = np.asarray(slab.q, dtype=float)
    p = np.asarray(slab.p, dtype=float)
    qn = nv(q)
    qq = float(q @ q)
    r1 = slab.radius
    for _ in range(samples):
        A = rng.random((m, n))
        z = A @ q - p
        zn = mu(z)
        target = r1 * rng.random()
        if zn > 0:
            A = A - np.outer((1.0 - target / zn) * z, q) / qq
        # now |Aq - p|_mu = target <= r1 (up to roundoff)
        E = rng.standard_normal((m, n))
        bound = _operator_norm_bound(E, mu, nv)
        E *= inflate * psi2_radius / (qn * bound)
        B = A + E
        if mu(B @ q - p) > r1 + psi2_radius + 1e-9 * (r1 + psi2_radius):
            return False
    return True
