"""Measures of the danger windows W_psi(Q1, Q2) and their audits.

The headline law: for a union of slabs over denominators in a band,

    -log lambda_K(B_psi(Q1, Q2)) ~ eta * F_psi(Q1, Q2),

i.e. the survivor measure behaves like exp(-eta F).  This module estimates
the window measure by seeded Monte Carlo, computes exact multiplicity sums
over primitive representatives, audits the quasi-independence of slab pairs,
and localizes the estimate to coding cylinders.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BudgetExceededError
from .functions import ApproxFunction
from .geometry import DEFAULT_ENUM_BUDGET, enumerate_q_vectors, round_half_down
from .norms import Dimensions, NormSpec, eta as eta_const
from .rowdensity import RowDensity
from .scheduler import Schedule

__all__ = [
    "WindowReport",
    "mc_window_measure",
    "sum_with_multiplicity",
    "pair_correlation_audit",
    "local_window_measure",
    "window_report",
    "regime_flag",
]

_SAMPLE_CHUNK = 1 << 16
_Q_BLOCK = 128


def regime_flag(psi: ApproxFunction, Q1: float, Q2: float) -> str:
    """'in-regime' when the asymptotic assumptions of the measure law are
    comfortably satisfied (Q1 >= 100, phi(Q1) <= F/10, F <= 0.5)."""
    F = psi.F(Q1, Q2)
    ok = Q1 >= 100 and psi.phi(Q1) <= F / 10.0 and F <= 0.5
    return "in-regime" if ok else "marginal"


def _hit_any(
    A_flat: np.ndarray,
    qs: np.ndarray,
    radii: np.ndarray,
    mu: NormSpec,
    m: int,
    n: int,
) -> np.ndarray:
    """Boolean mask: which sample matrices lie in some slab of the window."""
    C = len(A_flat)
    alive = np.arange(C)
    hit = np.zeros(C, dtype=bool)
    if m == 1 and n == 1:
        x = A_flat[:, 0]
        qv = qs[:, 0].astype(float)
        scale = mu.scale
        for start in range(0, len(qv), _Q_BLOCK):
            qb = qv[start : start + _Q_BLOCK]
            rb = radii[start : start + _Q_BLOCK]
            y = x[alive, None] * qb[None, :]
            d = np.abs(y - np.rint(y)) * scale
            newly = np.any(d <= rb[None, :], axis=1)
            hit[alive[newly]] = True
            alive = alive[~newly]
            if len(alive) == 0:
                break
        return hit
    A = A_flat.reshape(C, m, n)
    for i in range(len(qs)):
        if len(alive) == 0:
            break
        y = A[alive] @ qs[i].astype(float)
        d = mu.of_rows(y - round_half_down(y))
        newly = d <= radii[i]
        hit[alive[newly]] = True
        alive = alive[~newly]
    return hit


def mc_window_measure(
    psi: ApproxFunction,
    Q1: float,
    Q2: float,
    dims: Dimensions,
    mu: NormSpec,
    nv: NormSpec,
    samples: int,
    seed: int,
    budget: int = DEFAULT_ENUM_BUDGET,
) -> tuple[float, float]:
    """Fraction of uniform A in K hitting some slab with Q1 <= |q|_nu <= Q2.

    Deterministic for fixed (seed, samples): a single generator stream is
    consumed in fixed-size chunks in a fixed order.
    """
    m, n = dims.m, dims.n
    qs, qnorms = enumerate_q_vectors(nv, Q1, Q2, budget=budget)
    order = np.lexsort(qs.T[::-1])  # deterministic, roughly ascending
    order = order[np.argsort(qnorms[order], kind="stable")]
    qs, qnorms = qs[order], qnorms[order]
    radii = np.asarray(psi(qnorms), dtype=float)
    rng = np.random.default_rng(seed)
    hits = 0
    done = 0
    while done < samples:
        k = min(_SAMPLE_CHUNK, samples - done)
        A_flat = rng.random((k, m * n))
        hits += int(np.count_nonzero(_hit_any(A_flat, qs, radii, mu, m, n)))
        done += k
    est = hits / samples
    stderr = math.sqrt(max(est * (1.0 - est), 0.0) / samples)
    return est, stderr


def sum_with_multiplicity(
    psi: ApproxFunction,
    Q1: float,
    Q2: float,
    dims: Dimensions,
    mu: NormSpec,
    nv: NormSpec,
    budget: int = DEFAULT_ENUM_BUDGET,
    primitive: bool = True,
) -> float:
    """Sum of exact slab measures over representatives in the band.

    By default one of each +-(p, q) primitive pair is counted (first
    nonzero coordinate of q positive), p running over every integer vector
    whose slab meets the cube; this is the sum the law eta * F predicts.
    With primitive=False all integer pairs are included, which is the
    actual union bound for the window (reducible pairs whose primitive
    part falls below Q1 carry extra measure).  Requires the sup norm on
    the residual side for exact measures.
    """
    if mu.kind != "sup":
        raise ValueError("exact measure requires sup norm")
    m, n = dims.m, dims.n
    qs, qnorms = enumerate_q_vectors(nv, Q1, Q2, budget=budget)
    radii = np.asarray(psi(qnorms), dtype=float) / mu.scale
    if m == 1 and n == 1:
        return _sum_multiplicity_1x1(qs[:, 0], radii, primitive)
    total = 0.0
    for q, r in zip(qs, radii):
        if r <= 0:
            continue
        density = RowDensity(q)
        lo, hi = density.support
        p_lo = math.ceil(lo - r)
        p_hi = math.floor(hi + r)
        if p_hi < p_lo:
            continue
        p_range = np.arange(p_lo, p_hi + 1, dtype=np.int64)
        count = len(p_range) ** m
        if count > budget:
            raise BudgetExceededError(
                "p enumeration needs %d points (budget %d)" % (count, budget),
                required=count,
            )
        meas_1d = np.maximum(
            density.cdf(p_range + r) - density.cdf(p_range - r), 0.0
        )
        if not primitive:
            # without the gcd filter the p-sum factorizes across rows
            total += float(np.sum(meas_1d)) ** m
            continue
        gq = int(np.gcd.reduce(np.abs(q)))
        grids = np.meshgrid(*([p_range] * m), indexing="ij")
        meas = np.ones(grids[0].shape)
        gcd_p = np.zeros(grids[0].shape, dtype=np.int64)
        for g in grids:
            gcd_p = np.gcd(gcd_p, np.abs(g))
            meas = meas * meas_1d[np.searchsorted(p_range, g)]
        primitive_mask = np.gcd(gcd_p, gq) == 1
        total += float(np.sum(meas[primitive_mask]))
    return total


def _sum_multiplicity_1x1(qs: np.ndarray, radii: np.ndarray, primitive: bool) -> float:
    total = 0.0
    for q, r in zip(qs.tolist(), radii.tolist()):
        if r <= 0:
            continue
        p = np.arange(0, q + 1, dtype=np.int64)
        if primitive:
            p = p[np.gcd(p, q) == 1]
        lo = np.maximum((p - r) / q, 0.0)
        hi = np.minimum((p + r) / q, 1.0)
        lengths = np.maximum(hi - lo, 0.0)
        total += float(np.sum(lengths))
    return total


def pair_correlation_audit(
    psi: ApproxFunction,
    Q1: float,
    Q2: float,
    dims: Dimensions,
    sample_r: int,
    seed: int,
    budget: int = DEFAULT_ENUM_BUDGET,
) -> float:
    """Quasi-independence audit: worst pairwise-overlap ratio over sampled slabs.

    For each sampled primitive r = (p, q) the exact sum over r' not in Zr
    (|q| <= |q'| <= Q2, canonical sign) of the overlap measure of the two
    slab intervals is compared to Psi(|r|)^m * (F + phi(Q1)); the maximum
    ratio is the empirical constant of the bound.  Exact path for m = n = 1.
    """
    if dims.m != 1 or dims.n != 1:
        raise NotImplementedError("exact pair correlation audit requires m = n = 1")
    if Q2 - Q1 > budget:
        raise BudgetExceededError("denominator range exceeds budget", required=int(Q2 - Q1))
    rng = np.random.default_rng(seed)
    q_lo, q_hi = math.ceil(Q1), math.floor(Q2)
    F = psi.F(Q1, Q2)
    phi1 = psi.phi(Q1)
    worst = 0.0
    for _ in range(sample_r):
        q = int(rng.integers(q_lo, q_hi + 1))
        candidates = np.nonzero(np.gcd(np.arange(q + 1), q) == 1)[0]
        p = int(candidates[rng.integers(0, len(candidates))])
        w = float(psi(q)) / q
        lo0, hi0 = max(p / q - w, 0.0), min(p / q + w, 1.0)
        total = 0.0
        for q2 in range(q, q_hi + 1):
            w2 = float(psi(q2)) / q2
            p_lo = math.floor(q2 * (lo0 - w2))
            p_hi = math.ceil(q2 * (hi0 + w2))
            p2 = np.arange(p_lo, p_hi + 1, dtype=np.int64)
            if q2 % q == 0:
                p2 = p2[p2 != (q2 // q) * p]  # exclude r' in Zr
            lo2 = np.maximum(p2 / q2 - w2, 0.0)
            hi2 = np.minimum(p2 / q2 + w2, 1.0)
            overlap = np.maximum(np.minimum(hi2, hi0) - np.maximum(lo2, lo0), 0.0)
            total += float(np.sum(overlap))
        rnorm = max(abs(p), q)
        denom = float(psi.Psi(rnorm)) ** dims.m * (F + phi1)
        if denom > 0:
            worst = max(worst, total / denom)
    return worst


def local_window_measure(
    schedule: Schedule,
    omega_cell,
    psi: ApproxFunction,
    Q1: float,
    Q2: float,
    dims: Dimensions,
    mu: NormSpec,
    nv: NormSpec,
    samples: int = 10 ** 5,
    seed: int = 0,
    budget: int = DEFAULT_ENUM_BUDGET,
) -> float:
    """(N^k)^D * lambda_K(K_omega intersect W_psi(Q1, Q2)) by restricted MC.

    The cylinder K_omega is sampled through its affine chart A = corner +
    A'/N^k, so the returned number is the conditional hitting probability
    within the cylinder.  The window must sit inside the block
    [Q^k, Q^(k+1)] for k = |omega|.
    """
    k = len(omega_cell)
    lq = schedule.log_qk
    if k >= len(lq) - 1 and k > 0:
        raise ValueError("omega deeper than the schedule")
    tol = 1e-9
    if math.log(Q1) < lq[k] - tol or math.log(Q2) > lq[k + 1] + tol or Q2 < Q1:
        raise ValueError("window [Q1, Q2] must lie inside the block [Q^k, Q^(k+1)]")
    m, n = dims.m, dims.n
    D = dims.D
    log2N = schedule.log2_nprod[k]
    if log2N > 900:
        raise ValueError("cylinder too deep for float sampling")
    Nk = float(2 ** log2N)
    corner = _cylinder_corner(schedule, omega_cell, dims)
    qs, qnorms = enumerate_q_vectors(nv, Q1, Q2, budget=budget)
    radii = np.asarray(psi(qnorms), dtype=float)
    rng = np.random.default_rng(seed)
    hits = 0
    done = 0
    corner_flat = corner.reshape(-1)
    while done < samples:
        c = min(_SAMPLE_CHUNK, samples - done)
        A_flat = corner_flat[None, :] + rng.random((c, m * n)) / Nk
        hits += int(np.count_nonzero(_hit_any(A_flat, qs, radii, mu, m, n)))
        done += c
    return hits / samples


def _cylinder_corner(schedule: Schedule, omega_cell, dims: Dimensions) -> np.ndarray:
    """pi(omega) as an (m, n) float matrix; digits are flat indices in [0, N_k^D)."""
    m, n = dims.m, dims.n
    corner = np.zeros((m, n))
    running = 1.0
    for j, digit in enumerate(omega_cell):
        Nk = 1 << schedule.exponents[j]
        running *= Nk
        e = int(digit)
        if not (0 <= e < Nk ** dims.D):
            raise ValueError("digit out of range at level %d" % (j + 1,))
        coords = np.empty(dims.D)
        for i in range(dims.D):
            coords[i] = e % Nk
            e //= Nk
        corner += coords.reshape(m, n) / running
    return corner


@dataclass(frozen=True)
class WindowReport:
    """Everything measured about one window, next to its predicted law."""

    Q1: float
    Q2: float
    mc_measure: float
    mc_stderr: float
    multiplicity_sum: float
    predicted_F: float
    predicted_measure: float
    pair_correlation: float
    regime: str


def window_report(
    psi: ApproxFunction,
    Q1: float,
    Q2: float,
    dims: Dimensions,
    mu: NormSpec,
    nv: NormSpec,
    samples: int,
    seed: int,
    pair_samples: int = 16,
    budget: int = DEFAULT_ENUM_BUDGET,
) -> WindowReport:
    """Assemble the full audit of one window against the predicted law."""
    est, err = mc_window_measure(psi, Q1, Q2, dims, mu, nv, samples, seed, budget=budget)
    mult = sum_with_multiplicity(psi, Q1, Q2, dims, mu, nv, budget=budget)
    F = psi.F(Q1, Q2)
    ev = eta_const(dims, mu, nv)
    pair = (
        pair_correlation_audit(psi, Q1, Q2, dims, pair_samples, seed, budget=budget)
        if dims.m == 1 and dims.n == 1
        else float("nan")
    )
    return WindowReport(
        Q1=Q1,
        Q2=Q2,
        mc_measure=est,
        mc_stderr=err,
        multiplicity_sum=mult,
        predicted_F=F,
        predicted_measure=1.0 - math.exp(-ev * F),
        pair_correlation=pair,
        regime=regime_flag(psi, Q1, Q2),
    )
