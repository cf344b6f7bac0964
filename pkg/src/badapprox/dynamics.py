"""The homogeneous-dynamics dictionary: u_A, g_t, Delta, and excursions.

A matrix A fails to be psi-approximable exactly when the diagonal-flow
orbit g_t u_A Z^d stays below the height profile r_psi(t) for all large t;
this module builds the matrices, tracks the height Delta = -log lambda_1,
solves for the profile, and reports finite-horizon agreement between the
two sides of the correspondence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BudgetExceededError
from .fractal import CodingScheme
from .functions import ApproxFunction
from .geometry import hit_list
from .lattices import Lattice, shortest_vector
from .norms import Dimensions, MixedNorm, NormSpec
from .scheduler import Schedule

__all__ = [
    "make_u",
    "make_g",
    "FlowPoint",
    "flow_point",
    "delta_fn",
    "r_psi_solve",
    "DaniReport",
    "dani_check",
    "cylinder_lattice",
]


def make_u(A: np.ndarray) -> np.ndarray:
    """The unipotent correction [[I_m, -A], [0, I_n]]; u_(A+B) = u_A u_B."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    m, n = A.shape
    out = np.eye(m + n)
    out[:m, m:] = -A
    return out


def make_g(t: float, dims: Dimensions) -> np.ndarray:
    """The diagonal flow diag(e^(t/m) I_m, e^(-t/n) I_n), determinant 1."""
    m, n = dims.m, dims.n
    return np.diag([math.exp(t / m)] * m + [math.exp(-t / n)] * n)


def delta_fn(lat: Lattice, norm: MixedNorm) -> float:
    """Delta(Lambda) = -log lambda_1 under the mixed norm |p|_mu v |q|_nu."""
    _, lam1 = shortest_vector(lat, norm)
    return -math.log(lam1)


@dataclass(frozen=True)
class FlowPoint:
    """One point of the orbit t -> g_t u_A Z^d with its height."""

    t: float
    A: np.ndarray
    lattice: Lattice
    delta: float


def flow_point(A: np.ndarray, t: float, dims: Dimensions, norm: MixedNorm) -> FlowPoint:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    lat = Lattice(make_g(t, dims) @ make_u(A))
    return FlowPoint(t, A, lat, delta_fn(lat, norm))


def r_psi_solve(psi: ApproxFunction, t: float, dims: Dimensions, tol: float = 1e-12) -> float:
    """The height profile r with psi(e^(t/n - r)) = e^(-t/m - r).

    The left side is nondecreasing in r and the right side decreasing, so
    bisection finds the unique root; the domain requires the common value
    to stay <= 1 (r >= -t/m) and psi's argument >= 1 (r <= t/n).
    """
    m, n = dims.m, dims.n

    def gap(r: float) -> float:
        # log psi(e^(t/n - r)) + t/m + r, increasing in r
        return psi.log_psi_at(t / n - r) + t / m + r

    lo, hi = -t / m, t / n
    if gap(hi) < 0:
        raise ValueError("t below the domain start of r_psi (no solution with argument >= 1)")
    if gap(lo) > 0:
        raise ValueError("t below the domain start of r_psi (solution would exceed height 1)")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if gap(mid) <= 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol:
            break
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class DaniReport:
    """Finite-horizon comparison of flow excursions against slab hits.

    The correspondence is exact only in the limit of arbitrarily large t;
    at a finite horizon we report the per-time booleans and their
    agreement fraction, plus the horizon itself.
    """

    ts: tuple[float, ...]
    excursions: tuple[bool, ...]
    hits: tuple[bool, ...]
    r_values: tuple[float, ...]
    agreement: float
    horizon: float


def dani_check(
    A: np.ndarray,
    psi: ApproxFunction,
    t_grid,
    dims: Dimensions,
    mu: NormSpec,
    nv: NormSpec,
    budget: int = 10 ** 7,
) -> DaniReport:
    """Compare [Delta(g_t u_A Z^d) >= r_psi(t)] with slab hits at scale e^(t/n - r).

    Times below the r_psi domain are skipped.  The hit side asks for some
    (p, q) with |q|_nu <= e^(t/n - r(t)) and |Aq - p|_mu <= psi(|q|_nu).
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    norm = MixedNorm(dims, mu, nv)
    ts, exc, hits, rvals = [], [], [], []
    for t in t_grid:
        try:
            r = r_psi_solve(psi, float(t), dims)
        except ValueError:
            continue
        point = flow_point(A, float(t), dims, norm)
        Q_t = math.exp(t / dims.n - r)
        found = len(hit_list(A, psi, 1.0, Q_t, nv, mu=mu, budget=budget)) > 0
        ts.append(float(t))
        exc.append(point.delta >= r)
        hits.append(found)
        rvals.append(r)
    agree = (
        sum(1 for e, h2 in zip(exc, hits) if e == h2) / len(ts) if ts else float("nan")
    )
    return DaniReport(
        tuple(ts), tuple(exc), tuple(hits), tuple(rvals), agree, max(ts) if ts else 0.0
    )


def cylinder_lattice(schedule: Schedule, omega, dims: Dimensions) -> Lattice:
    """Lambda_omega = g_(delta log N^k) u_(pi(omega)) Z^d for k = |omega|."""
    k = len(omega)
    if k > schedule.k_max:
        raise ValueError("omega deeper than the schedule")
    scheme = CodingScheme(schedule, dims)
    s_k = schedule.log2_nprod[k]
    t_k = float(dims.delta) * s_k * math.log(2.0)
    if t_k / dims.m * s_k > 0 and t_k / min(dims.m, dims.n) > 700:
        raise ValueError("cylinder lattice too deep for float entries")
    corner = scheme.encode(omega)
    return Lattice(make_g(t_k, dims) @ make_u(corner))
