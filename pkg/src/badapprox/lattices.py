"""Unimodular lattices: minima, duals, irregularity, and the epsilon_K census.

The irregularity of a lattice vector,

    Irr(r) = |r| / lambda_1(dual intersect r-perp)^(d-1),

measures the smallest-covolume hyperplane section containing r; vectors of
low irregularity admit nearly cylindrical fundamental domains, which is what
quasi-independence of slabs rests on.  All orthogonality computations happen
in the integer coefficient lattice (s.r = y.x for s = B^-T y, r = B x), so
sublattice bases are exact.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import BudgetExceededError
from .norms import MixedNorm, NormSpec

__all__ = [
    "Lattice",
    "VectorReport",
    "lll_reduce",
    "short_coefficient_vectors",
    "shortest_vector",
    "successive_minima",
    "dual",
    "covolume",
    "codiameter_upper",
    "integer_kernel_basis",
    "line_section_covolume",
    "dual_section_covolume",
    "irregularity",
    "lattice_irregularity",
    "epsilon_K_profile",
    "epsilon_K_scan",
]

_MAX_DIM = 8
_ENUM_CAP = 10 ** 7


@dataclass(frozen=True)
class Lattice:
    """A unimodular lattice given by a column basis matrix."""

    basis: np.ndarray

    def __post_init__(self):
        B = np.asarray(self.basis, dtype=float)
        object.__setattr__(self, "basis", B)
        if B.ndim != 2 or B.shape[0] != B.shape[1]:
            raise ValueError("basis must be a square matrix")
        det = np.linalg.det(B)
        if abs(abs(det) - 1.0) > 1e-9:
            raise ValueError("basis must be unimodular (|det| = 1)")

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @classmethod
    def standard(cls, d: int) -> "Lattice":
        return cls(np.eye(d))

    def vector(self, coeffs) -> np.ndarray:
        return self.basis @ np.asarray(coeffs, dtype=float)


@dataclass(frozen=True)
class VectorReport:
    """Irregularity data for one lattice vector."""

    coeffs: tuple[int, ...]
    embedding: np.ndarray
    norm: float
    primitive: bool
    irr: float


def lll_reduce(B: np.ndarray, delta: float = 0.75) -> np.ndarray:
    """LLL-reduced column basis (Euclidean), plain floating-point variant."""
    B = np.array(B, dtype=float)
    d = B.shape[1]

    def gram_schmidt(M):
        k = M.shape[1]
        mu = np.zeros((k, k))
        star = np.zeros_like(M)
        norms2 = np.zeros(k)
        for i in range(k):
            v = M[:, i].copy()
            for j in range(i):
                if norms2[j] > 0:
                    mu[i, j] = M[:, i] @ star[:, j] / norms2[j]
                    v -= mu[i, j] * star[:, j]
            star[:, i] = v
            norms2[i] = v @ v
        return mu, norms2

    mu, norms2 = gram_schmidt(B)
    k = 1
    iterations = 0
    while k < d:
        iterations += 1
        if iterations > 10000:
            break  # floating-point stagnation; basis is already near-reduced
        for j in range(k - 1, -1, -1):
            q = round(mu[k, j])
            if q != 0:
                B[:, k] -= q * B[:, j]
                mu, norms2 = gram_schmidt(B)
        if norms2[k] >= (delta - mu[k, k - 1] ** 2) * norms2[k - 1]:
            k += 1
        else:
            B[:, [k - 1, k]] = B[:, [k, k - 1]]
            mu, norms2 = gram_schmidt(B)
            k = max(k - 1, 1)
    return B


def short_coefficient_vectors(
    B: np.ndarray, radius: float, cap: int = _ENUM_CAP
) -> np.ndarray:
    """All nonzero integer x with |Bx|_2 <= radius (both signs), Fincke-Pohst.

    B may be a d x k embedding of a k-dimensional sublattice.  Raises
    BudgetExceededError when more than ``cap`` vectors would be produced.
    """
    B = np.asarray(B, dtype=float)
    k = B.shape[1]
    Q, R = np.linalg.qr(B)
    signs = np.where(np.diag(R) < 0, -1.0, 1.0)
    R = R * signs[:, None]
    out: list[list[int]] = []
    x = [0] * k
    rad2 = radius * radius

    def rec(i: int, used: float):
        if len(out) > cap:
            raise BudgetExceededError("lattice enumeration exceeded cap", required=len(out))
        if i < 0:
            if any(x):
                out.append(list(x))
            return
        t = sum(R[i, j] * x[j] for j in range(i + 1, k))
        room = math.sqrt(max(rad2 - used, 0.0))
        lo = math.ceil((-room - t) / R[i, i] - 1e-12)
        hi = math.floor((room - t) / R[i, i] + 1e-12)
        for xi in range(lo, hi + 1):
            x[i] = xi
            contrib = (R[i, i] * xi + t) ** 2
            if contrib <= rad2 - used + 1e-12:
                rec(i - 1, used + contrib)
        x[i] = 0

    rec(k - 1, 0.0)
    if not out:
        return np.zeros((0, k), dtype=np.int64)
    return np.array(out, dtype=np.int64)


def _norm_of(norm, vectors: np.ndarray) -> np.ndarray:
    if hasattr(norm, "of_rows"):
        return norm.of_rows(vectors)
    return np.array([norm(v) for v in vectors])


def _shortest_in_embedding(E: np.ndarray, norm) -> tuple[np.ndarray, np.ndarray, float]:
    """Shortest nonzero vector of the lattice spanned by the columns of E.

    Returns (coefficient vector, embedded vector, norm value).  The search
    ball is Euclidean: |r| >= min_scale * |r|_inf >= min_scale |r|_2/sqrt(d)
    for every supported norm, so a Euclidean radius of sqrt(d)/min_scale
    times the best known value is exhaustive.
    """
    d = E.shape[0]
    reduced = lll_reduce(E) if E.shape[1] > 1 else np.array(E, dtype=float)
    col_norms = _norm_of(norm, reduced.T)
    best = float(np.min(col_norms))
    c = getattr(norm, "min_scale", 1.0)
    radius = math.sqrt(d) * best / c * (1.0 + 1e-9)
    coeffs = short_coefficient_vectors(reduced, radius)
    if len(coeffs) == 0:
        i = int(np.argmin(col_norms))
        return np.eye(E.shape[1], dtype=np.int64)[i], reduced[:, i], best
    vectors = coeffs @ reduced.T
    norms = _norm_of(norm, vectors)
    i = int(np.argmin(norms))
    return coeffs[i], vectors[i], float(norms[i])


def shortest_vector(lat: Lattice, norm) -> tuple[np.ndarray, float]:
    """Exact first minimum of the lattice under the given norm, d <= 8."""
    if lat.dim > _MAX_DIM:
        raise ValueError("shortest vector enumeration limited to d <= %d" % _MAX_DIM)
    _, vec, val = _shortest_in_embedding(lat.basis, norm)
    return vec, val


def successive_minima(lat: Lattice, norm) -> np.ndarray:
    """All d successive minima under the norm, by exhaustive enumeration."""
    if lat.dim > _MAX_DIM:
        raise ValueError("enumeration limited to d <= %d" % _MAX_DIM)
    d = lat.dim
    reduced = lll_reduce(lat.basis)
    upper = float(np.max(_norm_of(norm, reduced.T)))
    c = getattr(norm, "min_scale", 1.0)
    coeffs = short_coefficient_vectors(reduced, math.sqrt(d) * upper / c * (1.0 + 1e-9))
    vectors = coeffs @ reduced.T
    norms = _norm_of(norm, vectors)
    order = np.argsort(norms, kind="stable")
    minima = []
    chosen: list[np.ndarray] = []
    for idx in order:
        candidate = vectors[idx]
        trial = np.column_stack(chosen + [candidate])
        if np.linalg.matrix_rank(trial, tol=1e-9) == len(chosen) + 1:
            chosen.append(candidate)
            minima.append(float(norms[idx]))
            if len(minima) == d:
                break
    return np.array(minima)


def dual(lat: Lattice) -> Lattice:
    """Dual lattice: inverse-transpose basis; an involution."""
    return Lattice(np.linalg.inv(lat.basis).T)


def covolume(lat: Lattice, norm=None) -> float:
    """|det| of the basis; if a norm is given, normalized so its unit ball
    has measure 1 (full-dimensional lattices only)."""
    det = abs(float(np.linalg.det(lat.basis)))
    if norm is None:
        return det
    vol = norm.ball_volume if hasattr(norm, "ball_volume") else norm.volume
    return det / vol


def codiameter_upper(lat: Lattice, norm) -> float:
    """Covering-radius upper bound (1/2) sum of successive minima."""
    return 0.5 * float(np.sum(successive_minima(lat, norm)))


def _extended_gcd(a: int, b: int) -> tuple[int, int, int]:
    if b == 0:
        return (abs(a), 1 if a >= 0 else -1, 0)
    g, x, y = _extended_gcd(b, a % b)
    return (g, y, x - (a // b) * y)


def integer_kernel_basis(coeffs) -> np.ndarray:
    """Columns spanning {y in Z^d : y . coeffs = 0}, exact integer arithmetic.

    Built from the unimodular column operations that reduce coeffs to
    (g, 0, ..., 0); this is the Hermite-form style elimination.
    """
    v = [int(c) for c in coeffs]
    d = len(v)
    if all(c == 0 for c in v):
        raise ValueError("coefficient vector must be nonzero")
    U = [[1 if i == j else 0 for j in range(d)] for i in range(d)]
    pivot = next(i for i, c in enumerate(v) if c != 0)
    if pivot != 0:
        for row in U:
            row[0], row[pivot] = row[pivot], row[0]
        v[0], v[pivot] = v[pivot], v[0]
    for i in range(1, d):
        if v[i] == 0:
            continue
        g, a, b = _extended_gcd(v[0], v[i])
        q0, qi = v[0] // g, v[i] // g
        for row in U:
            c0, ci = row[0], row[i]
            row[0] = a * c0 + b * ci
            row[i] = -qi * c0 + q0 * ci
        v[0], v[i] = g, 0
    return np.array([[U[r][c] for c in range(1, d)] for r in range(d)], dtype=np.int64)


def line_section_covolume(lat: Lattice, coeffs) -> float:
    """Lebesgue covolume of the rank-1 section along r = B coeffs."""
    c = np.asarray(coeffs, dtype=np.int64)
    g = int(np.gcd.reduce(np.abs(c[c != 0]))) if np.any(c != 0) else 0
    if g == 0:
        raise ValueError("coefficient vector must be nonzero")
    primitive = lat.basis @ (c / g)
    return float(np.linalg.norm(primitive))


def dual_section_covolume(lat: Lattice, coeffs) -> float:
    """Lebesgue covolume of the dual hyperplane section Lambda* intersect r-perp."""
    kernel = integer_kernel_basis(coeffs)
    S = np.linalg.inv(lat.basis).T @ kernel.astype(float)
    gram = S.T @ S
    return float(math.sqrt(abs(np.linalg.det(gram))))


def irregularity(lat: Lattice, coeffs, norm: MixedNorm) -> float:
    """Irr(r) = |r| / lambda_1(Lambda* intersect r-perp)^(d-1)."""
    if lat.dim > _MAX_DIM:
        raise ValueError("enumeration limited to d <= %d" % _MAX_DIM)
    c = np.asarray(coeffs, dtype=np.int64)
    if not np.any(c):
        raise ValueError("r must be nonzero")
    d = lat.dim
    r = lat.basis @ c.astype(float)
    kernel = integer_kernel_basis(c)
    S = np.linalg.inv(lat.basis).T @ kernel.astype(float)
    _, _, lam1 = _shortest_in_embedding(S, norm)
    return norm(r) / lam1 ** (d - 1)


def lattice_irregularity(lat: Lattice, norm) -> float:
    """Irr(Lambda) = lambda_1(Lambda)^-(2d-1)."""
    _, lam1 = shortest_vector(lat, norm)
    return lam1 ** (-(2 * lat.dim - 1))


def _plane_points_within(P: np.ndarray, radius: float, norm, cap: int) -> np.ndarray:
    """Integer z with |P z| <= radius (norm), P a d x (d-1) embedding.

    Enumerates a coefficient box sized from the Gram-Schmidt profile of an
    LLL-reduced basis, vectorized, then filters by the actual norm.
    """
    d1 = P.shape[1]
    c = getattr(norm, "min_scale", 1.0)
    R_eucl = math.sqrt(P.shape[0]) * radius / c * (1.0 + 1e-9)
    reduced = lll_reduce(P) if d1 > 1 else np.array(P, dtype=float)
    Q, R = np.linalg.qr(reduced)
    star = np.abs(np.diag(R))
    # box bounds: |z_i| <= R/star_i plus slack for the off-center back
    # substitution intervals (|mu| <= 1/2 after LLL)
    bounds = [0] * d1
    for i in range(d1 - 1, -1, -1):
        slack = 0.5 * sum(bounds[i + 1 :])
        bounds[i] = int(math.floor(R_eucl / star[i] + slack + 1e-9))
    count = math.prod(2 * b + 1 for b in bounds)
    if count > cap:
        raise BudgetExceededError("plane enumeration box too large", required=count)
    axes = [np.arange(-b, b + 1, dtype=np.int64) for b in bounds]
    grid = np.meshgrid(*axes, indexing="ij")
    Z = np.stack([g.ravel() for g in grid], axis=-1)
    vectors = Z @ reduced.T
    keep = _norm_of(norm, vectors) <= radius
    keep &= np.any(Z != 0, axis=1)
    # back to coefficients of the original columns of P
    T = np.linalg.lstsq(P, reduced, rcond=None)[0]
    Zorig = np.rint(Z[keep] @ T.T).astype(np.int64)
    return Zorig


def epsilon_K_profile(
    lat: Lattice,
    Ks: list[float],
    Q: float,
    norm: MixedNorm,
    cap: int = _ENUM_CAP,
) -> dict[float, float]:
    """#{r in Lambda : Irr(r) >= K, |r| <= Q} / Q^d for each K at once.

    Uses the dual characterization: Irr(r) >= K iff some nonzero dual
    vector s orthogonal to r has K |s|^(d-1) <= |r|.  Only dual vectors
    with |s| <= (Q/K_min)^(1/(d-1)) can matter, so the census walks short
    dual vectors and sweeps their orthogonal hyperplane sections.
    """
    if lat.dim > _MAX_DIM:
        raise ValueError("enumeration limited to d <= %d" % _MAX_DIM)
    d = lat.dim
    K_min = min(Ks)
    irr_lat = lattice_irregularity(lat, norm)
    if Q < max(Ks) * irr_lat:
        # outside the regime of the vanishing statement; the census itself
        # is still well defined (and typically 0 for huge K)
        warnings.warn("epsilon_K census outside the regime Q >= K * Irr(Lambda)")
    S_max = (Q / K_min) ** (1.0 / (d - 1))
    Bd = np.linalg.inv(lat.basis).T
    c = getattr(norm, "min_scale", 1.0)
    ys = short_coefficient_vectors(Bd, math.sqrt(d) * S_max / c * (1.0 + 1e-9), cap=cap)
    if len(ys) == 0:
        return {K: 0.0 for K in Ks}
    s_norms = _norm_of(norm, ys @ Bd.T)
    keep = s_norms <= S_max
    ys, s_norms = ys[keep], s_norms[keep]
    # canonical half: orthogonality is sign-invariant
    lead = np.zeros(len(ys), dtype=bool)
    decided = np.zeros(len(ys), dtype=bool)
    for j in range(d):
        col = ys[:, j]
        lead |= (~decided) & (col > 0)
        decided |= col != 0
    ys, s_norms = ys[lead], s_norms[lead]
    order = np.argsort(s_norms, kind="stable")
    lam_star: dict[tuple, float] = {}
    r_norm: dict[tuple, float] = {}
    for idx in order:
        y = ys[idx]
        kernel = integer_kernel_basis(y)
        P = lat.basis @ kernel.astype(float)
        zs = _plane_points_within(P, Q, norm, cap)
        if len(zs) == 0:
            continue
        xs = zs @ kernel.T
        norms = _norm_of(norm, xs @ lat.basis.T)
        for x, nr in zip(map(tuple, xs.tolist()), norms.tolist()):
            if x not in lam_star:
                lam_star[x] = float(s_norms[idx])
                r_norm[x] = nr
        if len(lam_star) > cap:
            raise BudgetExceededError("irregular-vector census exceeded cap", required=len(lam_star))
    out = {}
    lam = np.array(list(lam_star.values()))
    nr = np.array([r_norm[x] for x in lam_star])
    for K in Ks:
        count = int(np.count_nonzero(nr >= K * lam ** (d - 1)))
        out[K] = count / Q ** d
    return out


def epsilon_K_scan(lat: Lattice, K: float, Q: float, norm: MixedNorm, cap: int = _ENUM_CAP) -> float:
    """Fraction of lattice vectors of norm <= Q with irregularity >= K."""
    if K < 1:
        raise ValueError("K must be >= 1")
    return epsilon_K_profile(lat, [K], Q, norm, cap=cap)[K]
