"""Cantor-series coding, evaporating trees, and dimension bounds.

Trees here are prefix-closed word sets over the mixed-radix alphabet of a
block schedule.  The per-level extremes of the removed-children fraction
(the evaporation rates P_k-, P_k+) drive the two comparison functions

    f_pm(rho) = prod_{j <= k(rho)} (1 - P_j_pm)^-1 * rho^D,

which bound the Hausdorff measure of the limit set from both sides via the
mass distribution principle and box counting.

Cylinder centers are exact dyadic rationals; removal tests against slab
unions run in exact integer arithmetic through the continued-fraction
expansion of the center (1x1 case), so a cylinder is never misclassified
by floating point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from math import isqrt

import numpy as np

from .cfrac import convergents_of_fraction, simplest_between
from .errors import BudgetExceededError
from .functions import ApproxFunction, DimFunction
from .norms import Dimensions
from .scheduler import Schedule

__all__ = [
    "CodingScheme",
    "Tree",
    "build_tree",
    "build_survivor_tree",
    "build_avoidance_tree",
    "DimensionBounds",
    "dimension_bounds",
    "box_count",
    "dump_tree",
]

_FULL_CHILD_CAP = 4096  # enumerate all children when the alphabet fits
_ND_BAND_CAP = 10 ** 6


def _iroot(value: int, k: int) -> int:
    """floor(value^(1/k)) for nonnegative integers, exact."""
    if value < 0 or k < 1:
        raise ValueError("iroot needs value >= 0, k >= 1")
    if k == 1 or value in (0, 1):
        return value
    x = 1 << (-(-value.bit_length() // k))
    while True:
        y = ((k - 1) * x + value // x ** (k - 1)) // k
        if y >= x:
            break
        x = y
    while x ** k > value:
        x -= 1
    while (x + 1) ** k <= value:
        x += 1
    return x


@dataclass(frozen=True)
class CodingScheme:
    """Mixed-radix Cantor coding attached to a block schedule.

    Level-k digits are flat indices in [0, N_k^D); cylinders are cubes of
    side 1/N^k.  Everything exact: N^k = 2^(integer), and Q^k boundaries
    come from integer roots.
    """

    schedule: Schedule
    dims: Dimensions

    @property
    def depth_cap(self) -> int:
        return self.schedule.k_max

    def alphabet(self, k: int) -> int:
        """Number of children of a level-(k-1) node, (N_k)^D."""
        return 1 << (self.schedule.exponents[k - 1] * self.dims.D)

    def log2_nprod(self, k: int) -> int:
        return self.schedule.log2_nprod[k]

    def side(self, k: int) -> float:
        """Cylinder side length 1/N^k."""
        return 2.0 ** (-self.log2_nprod(k))

    def digit_matrix(self, level: int, digit: int) -> np.ndarray:
        """Decode a flat digit into its D base-N_level coordinates (m x n)."""
        N = 1 << self.schedule.exponents[level - 1]
        e = int(digit)
        if not (0 <= e < N ** self.dims.D):
            raise ValueError("digit out of range at level %d" % level)
        coords = np.empty(self.dims.D, dtype=float)
        for i in range(self.dims.D):
            coords[i] = e % N
            e //= N
        return coords.reshape(self.dims.m, self.dims.n)

    def encode(self, word) -> np.ndarray:
        """The coding map pi(word) = sum of digit/N^k, as an (m, n) matrix."""
        corner = np.zeros((self.dims.m, self.dims.n))
        for j, digit in enumerate(word, start=1):
            corner += self.digit_matrix(j, digit) / 2.0 ** self.log2_nprod(j)
        return corner

    def corner_numerator(self, word) -> int:
        """For D = 1: integer U with pi(word) = U / 2^log2_nprod(len(word))."""
        if self.dims.D != 1:
            raise ValueError("exact corners require D = 1")
        U = 0
        for j, digit in enumerate(word, start=1):
            U = (U << self.schedule.exponents[j - 1]) + int(digit)
        return U

    def center_fraction(self, word) -> Fraction:
        """Exact center of the D = 1 cylinder K_word."""
        s = self.log2_nprod(len(word))
        return Fraction(2 * self.corner_numerator(word) + 1, 1 << (s + 1))

    def k_of_rho(self, rho: float) -> int:
        """The unique k with 1/N^(k+1) < rho <= 1/N^k, boundary-exact."""
        if not (0 < rho <= 1):
            raise ValueError("rho must lie in (0, 1]")
        r = Fraction(rho)
        for k in range(self.depth_cap):
            if Fraction(1, 1 << self.log2_nprod(k + 1)) < r:
                return k
        raise ValueError("rho below the schedule depth")

    def _alpha_fraction(self) -> Fraction:
        a = self.schedule.alpha
        return a if isinstance(a, Fraction) else Fraction(a).limit_denominator(10 ** 6)

    def _ceil_Q(self, k: int) -> int:
        """ceil(Q^k) = ceil(2^(s_k * a/b)) via exact integer roots."""
        alpha = self._alpha_fraction()
        s = self.log2_nprod(k)
        power = 1 << (s * alpha.numerator)
        root = _iroot(power, alpha.denominator)
        return root if root ** alpha.denominator == power else root + 1

    def q_band(self, k: int, Q0: float = 1.0) -> tuple[int, int]:
        """Integer denominators of the level-k block: [Q^k, Q^(k+1)) cut at Q0."""
        lo = max(self._ceil_Q(k), math.ceil(Q0))
        hi = self._ceil_Q(k + 1) - 1
        return lo, hi


@dataclass
class Tree:
    """A prefix-closed word set with its per-level evaporation extremes.

    ``words[k]`` is an int64 array of shape (nodes, k); ``kept_counts[k]``
    counts surviving children per level-k node wherever level k was
    expanded.  P_plus/P_minus are the max/min removed-children fractions
    per level (estimated from sampled children when ``sampled``).
    """

    scheme: CodingScheme
    words: list[np.ndarray]
    kept_counts: list[np.ndarray]
    P_plus: list[float]
    P_minus: list[float]
    sampled: bool = False
    truncated: bool = False
    died: bool = False

    @property
    def depth(self) -> int:
        return len(self.words) - 1

    def nodes_at(self, k: int) -> np.ndarray:
        return self.words[k]

    def M_plus(self, k: int) -> float:
        """Max surviving children at level k: (N_k)^D (1 - P_k^-)."""
        return self.scheme.alphabet(k) * (1.0 - self.P_minus[k - 1])

    def M_minus(self, k: int) -> float:
        """Min surviving children at level k: (N_k)^D (1 - P_k^+)."""
        return self.scheme.alphabet(k) * (1.0 - self.P_plus[k - 1])

    def _log_growth(self, rates: list[float], k: int) -> float:
        """log prod_{j<=k} 1/(1 - P_j)."""
        total = 0.0
        for p in rates[:k]:
            if p >= 1.0:
                return math.inf
            total -= math.log1p(-p)
        return total

    def log_f_plus(self, k: int) -> float:
        """log f_+ at rho = 1/N^k."""
        D = self.scheme.dims.D
        return self._log_growth(self.P_plus, k) - D * self.scheme.log2_nprod(k) * math.log(2.0)

    def log_f_minus(self, k: int) -> float:
        D = self.scheme.dims.D
        return self._log_growth(self.P_minus, k) - D * self.scheme.log2_nprod(k) * math.log(2.0)


def build_tree(scheme: CodingScheme, keep, depth: int, max_nodes: int = 10 ** 7) -> Tree:
    """Full expansion of the tree defined by keep(word, digit) -> bool.

    Meant for synthetic trees with small alphabets (constant evaporation,
    middle-thirds analogues); every child is enumerated.
    """
    if depth > scheme.depth_cap:
        raise ValueError("depth exceeds the schedule length")
    words = [np.zeros((1, 0), dtype=np.int64)]
    kept_counts: list[np.ndarray] = []
    P_plus: list[float] = []
    P_minus: list[float] = []
    truncated = died = False
    total = 1
    for k in range(1, depth + 1):
        A = scheme.alphabet(k)
        if A > _FULL_CHILD_CAP:
            raise ValueError("alphabet too large for full expansion; sample instead")
        parents = words[k - 1]
        next_rows = []
        counts = np.zeros(len(parents), dtype=np.int64)
        worst = 0.0
        best = 1.0
        for i, parent in enumerate(parents):
            ptuple = tuple(int(v) for v in parent)
            kept = [a for a in range(A) if keep(ptuple, a)]
            counts[i] = len(kept)
            removed_frac = 1.0 - len(kept) / A
            worst = max(worst, removed_frac)
            best = min(best, removed_frac)
            for a in kept:
                next_rows.append(ptuple + (a,))
        P_plus.append(worst)
        P_minus.append(best)
        kept_counts.append(counts)
        if not next_rows:
            died = True
            words.append(np.zeros((0, k), dtype=np.int64))
            break
        total += len(next_rows)
        if total > max_nodes:
            truncated = True
            break
        words.append(np.array(next_rows, dtype=np.int64))
    return Tree(scheme, words, kept_counts, P_plus, P_minus, False, truncated, died)


# ---------------------------------------------------------------------------
# Exact slab-hit search for 1x1 cylinders
# ---------------------------------------------------------------------------


def _farey_neighbors(a: int, b: int, N: int) -> tuple[Fraction, Fraction]:
    """Left and right neighbors of the reduced a/b in the Farey sequence of order N."""
    inv = pow(a % b, -1, b) if b > 1 else 0
    # left neighbor: a q - b p = 1 with q = max q <= N, q = inv (mod b)
    q = N - ((N - inv) % b)
    p = (a * q - 1) // b
    left = Fraction(p, q)
    q2 = N - ((N + inv) % b)
    p2 = (a * q2 + 1) // b
    right = Fraction(p2, q2)
    return left, right


def _fractions_in_interval(lo: Fraction, hi: Fraction, qmax: int, cap: int = 64) -> list[Fraction]:
    """All reduced fractions with denominator <= qmax inside [lo, hi]."""
    out: list[Fraction] = []
    stack = [(lo, hi)]
    while stack:
        a, b = stack.pop()
        if a > b:
            continue
        f = simplest_between(a, b)
        if f.denominator > qmax:
            continue
        out.append(f)
        if len(out) > cap:
            raise BudgetExceededError("interval fraction enumeration exceeded cap", required=len(out))
        left, right = _farey_neighbors(f.numerator, f.denominator, qmax)
        if left >= a:
            stack.append((a, left))
        if right <= b:
            stack.append((right, b))
    return out


class _SlabThreshold:
    """psi(q) as an exact rational, vectorized over multiples g of one q'."""

    def __init__(self, psi: ApproxFunction):
        if psi.dims.m != 1 or psi.dims.n != 1:
            raise ValueError("exact slab search requires m = n = 1")
        self.psi = psi
        self.kappa = Fraction(psi.kappa) if psi.family == "power-law" else None

    def __call__(self, q: int) -> Fraction:
        if self.kappa is not None:
            return self.kappa / q
        return Fraction(float(self.psi(q)))


def _exists_hit_1d(
    c: Fraction,
    h: Fraction,
    psi: ApproxFunction,
    qlo: int,
    qhi: int,
    mode: str,
) -> bool:
    """Does the interval [c-h, c+h] meet (or lie inside) some slab with q in [qlo, qhi]?

    mode='subset': exists (p, q) with the whole interval inside the slab
    |x - p/q| <= psi(q)/q, i.e. |qc - p| <= psi(q) - qh.
    mode='meets':  exists (p, q) with |qc - p| <= psi(q) + qh.

    Complete search: every solution's reduced fraction must be a convergent
    of c unless its denominator exceeds sqrt((1/2 - phi(qlo))/h), and that
    far regime is swept by Farey enumeration in a tiny interval around c.
    Requires phi(qlo) < 0.45.
    """
    if qlo > qhi:
        return False
    if mode not in ("subset", "meets"):
        raise ValueError("mode must be 'subset' or 'meets'")
    thresh = _SlabThreshold(psi)
    phi_max = float(psi.phi(qlo))
    if phi_max >= 0.45:
        raise ValueError("exact slab search requires phi(Q1) < 0.45")
    if float(thresh(qlo)) + qhi * float(h) >= 0.5:
        raise ValueError("slab threshold must stay below 1/2 for unique rounding")
    sign = 1 if mode == "subset" else -1

    def multiples_hit(p_red: int, q_red: int, e: Fraction) -> bool:
        g_lo = max(-(-qlo // q_red), 1)
        if g_lo * q_red > qhi:
            return False
        slope = e + sign * q_red * h
        if slope <= 0:
            return True  # meets mode with the fraction inside the cylinder
        # g -> g*slope is increasing and g -> thresh(g q) - is nonincreasing,
        # so valid g form an initial segment; the band is hit iff g_lo works
        return g_lo * slope <= thresh(g_lo * q_red)

    for p_red, q_red in convergents_of_fraction(c, qmax=qhi):
        if q_red > qhi:
            break
        e = abs(q_red * c - p_red)
        if multiples_hit(p_red, q_red, e):
            return True

    if mode == "meets":
        q_nc = isqrt(int((0.5 - phi_max) / float(2 * h))) if h > 0 else qhi + 1
        q_nc = max(q_nc // 2, 1)  # generous safety margin on the split point
        if q_nc <= qhi:
            eps = Fraction(2 * phi_max + 1e-12) / (q_nc * q_nc) + 2 * h
            lo = max(c - eps, Fraction(0))
            hi = min(c + eps, Fraction(1))
            for f in _fractions_in_interval(lo, hi, qhi):
                e = abs(f.denominator * c - f.numerator)
                if multiples_hit(f.numerator, f.denominator, e):
                    return True
    return False


def _exists_hit_nd(
    corner: np.ndarray,
    halfside: float,
    psi: ApproxFunction,
    qlo: int,
    qhi: int,
    mode: str,
) -> bool:
    """Direct-enumeration version for D > 1 (sup norms, float thresholds)."""
    dims = psi.dims
    n = dims.n
    if (2 * qhi + 1) ** n > _ND_BAND_CAP:
        raise BudgetExceededError(
            "denominator band too large for direct cylinder tests",
            required=(2 * qhi + 1) ** n,
        )
    axes = [np.arange(-qhi, qhi + 1, dtype=np.int64)] * n
    grid = np.meshgrid(*axes, indexing="ij")
    qs = np.stack([g.ravel() for g in grid], axis=-1)
    norms = np.max(np.abs(qs), axis=-1)
    qs = qs[(norms >= qlo) & (norms <= qhi)]
    if len(qs) == 0:
        return False
    center = corner + halfside
    Y = qs.astype(float) @ center.T  # (K, m)
    dist = np.max(np.abs(Y - np.rint(Y)), axis=-1)
    radii = np.asarray(psi(np.max(np.abs(qs), axis=-1)), dtype=float)
    spread = halfside * np.sum(np.abs(qs), axis=-1)
    margin = radii - spread if mode == "subset" else radii + spread
    return bool(np.any(dist <= margin))


# ---------------------------------------------------------------------------
# Window-driven tree builders
# ---------------------------------------------------------------------------


def _build_window_tree(
    psi: ApproxFunction,
    Q0: float,
    scheme: CodingScheme,
    depth: int,
    mode: str,
    child_samples: int,
    node_cap: int,
    seed: int,
    max_nodes: int,
) -> Tree:
    if depth > scheme.depth_cap:
        raise ValueError("depth exceeds the schedule length")
    if psi.dims != scheme.dims:
        raise ValueError("psi and scheme dimensions disagree")
    dims = scheme.dims
    exact_1d = dims.D == 1
    rng = np.random.default_rng(seed)
    words = [np.zeros((1, 0), dtype=np.int64)]
    kept_counts: list[np.ndarray] = []
    P_plus: list[float] = []
    P_minus: list[float] = []
    sampled = False
    truncated = died = False
    total = 1
    for k in range(1, depth + 1):
        A = scheme.alphabet(k)
        qlo, qhi = scheme.q_band(k - 1, Q0=Q0)
        parents = words[k - 1]
        if len(parents) > node_cap:
            parents = parents[:node_cap]
            sampled = True
        s_child = scheme.log2_nprod(k)
        h_frac = Fraction(1, 1 << (s_child + 1))
        h_float = 0.5 ** (s_child + 1)
        next_rows: list[tuple] = []
        counts = np.zeros(len(parents), dtype=np.int64)
        worst, best = 0.0, 1.0
        for i, parent in enumerate(parents):
            ptuple = tuple(int(v) for v in parent)
            if A <= max(child_samples, _FULL_CHILD_CAP):
                digits = np.arange(A, dtype=np.int64)
            else:
                sampled = True
                digits = np.unique(rng.integers(0, A, size=2 * child_samples))[:child_samples]
            removed = 0
            kept_digits = []
            if exact_1d:
                U_parent = scheme.corner_numerator(ptuple)
                ell = scheme.schedule.exponents[k - 1]
                for a in digits.tolist():
                    if qlo > qhi:
                        kept_digits.append(a)
                        continue
                    center = Fraction(2 * ((U_parent << ell) + a) + 1, 1 << (s_child + 1))
                    if _exists_hit_1d(center, h_frac, psi, qlo, qhi, mode):
                        removed += 1
                    else:
                        kept_digits.append(a)
            else:
                parent_corner = scheme.encode(ptuple)
                side = 2.0 ** (-s_child)
                for a in digits.tolist():
                    if qlo > qhi:
                        kept_digits.append(a)
                        continue
                    corner = parent_corner + scheme.digit_matrix(k, a) * side
                    if _exists_hit_nd(corner, h_float, psi, qlo, qhi, mode):
                        removed += 1
                    else:
                        kept_digits.append(a)
            frac = removed / len(digits) if len(digits) else 0.0
            worst = max(worst, frac)
            best = min(best, frac)
            counts[i] = len(kept_digits)
            for a in kept_digits:
                next_rows.append(ptuple + (a,))
        P_plus.append(worst)
        P_minus.append(best if len(parents) else 0.0)
        kept_counts.append(counts)
        if not next_rows:
            died = True
            words.append(np.zeros((0, k), dtype=np.int64))
            break
        total += len(next_rows)
        if total > max_nodes:
            truncated = True
            break
        words.append(np.array(next_rows, dtype=np.int64))
    return Tree(scheme, words, kept_counts, P_plus, P_minus, sampled, truncated, died)


def build_survivor_tree(
    psi: ApproxFunction,
    Q0: float,
    scheme: CodingScheme,
    depth: int,
    child_samples: int = 512,
    node_cap: int = 24,
    seed: int = 0,
    max_nodes: int = 10 ** 7,
) -> Tree:
    """Tree of cylinders not yet certified inside the danger union.

    A child is removed only when its whole cylinder provably sits inside a
    single slab of the level's block window (threshold psi(q) - q*halfside),
    so the surviving tree still covers every matrix avoiding all slabs; the
    recorded P_k^- underestimates nothing on the safe side.  For giant
    alphabets children are sampled and the rates are empirical.
    """
    return _build_window_tree(
        psi, Q0, scheme, depth, "subset", child_samples, node_cap, seed, max_nodes
    )


def build_avoidance_tree(
    psi: ApproxFunction,
    Q0: float,
    scheme: CodingScheme,
    depth: int,
    child_samples: int = 512,
    node_cap: int = 24,
    seed: int = 0,
    max_nodes: int = 10 ** 7,
) -> Tree:
    """Tree of cylinders disjoint from every slab in their block windows.

    A child is removed as soon as its cylinder meets any slab (threshold
    psi(q) + q*halfside), so every infinite branch avoids the full danger
    union beyond Q0.  This unconditional-geometry variant over-removes
    compared to the conditioned construction: its P_k^+ carries an extra
    boundary term on top of the eta*beta prediction.
    """
    return _build_window_tree(
        psi, Q0, scheme, depth, "meets", child_samples, node_cap, seed, max_nodes
    )


# ---------------------------------------------------------------------------
# Dimension bounds, box counting, dumps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DimensionBounds:
    """Two-sided dimension/measure comparison extracted from evaporation rates.

    hausdorff_lower: liminf f/f_+ over the level grid (mass distribution
    side; valid when ``lower_available``).  box_upper: liminf f/f_- (box
    counting side).  dim_lower/dim_upper solve f_pm(rho) ~ rho^s at the
    deepest level.
    """

    lower_available: bool
    upper_available: bool
    hausdorff_lower: float
    box_upper: float
    dim_lower: float
    dim_upper: float


def dimension_bounds(tree: Tree, f: DimFunction) -> DimensionBounds:
    """Evaluate both evaporation-rate bounds for the dimension function f."""
    depth = len(tree.P_plus)
    if depth == 0:
        raise ValueError("tree has no expanded levels")
    lower_ok = max(tree.P_plus) < 1.0
    ln2 = math.log(2.0)
    D = tree.scheme.dims.D
    h_lower = math.inf
    b_upper = math.inf
    for k in range(1, depth + 1):
        l_rho = -tree.scheme.log2_nprod(k) * ln2
        log_f = f.log_value(l_rho)
        if lower_ok:
            h_lower = min(h_lower, math.exp(log_f - tree.log_f_plus(k)))
        b_upper = min(b_upper, math.exp(log_f - tree.log_f_minus(k)))
    if not lower_ok:
        h_lower = 0.0
    logN = tree.scheme.log2_nprod(depth) * ln2
    sum_plus = tree._log_growth(tree.P_plus, depth)
    sum_minus = tree._log_growth(tree.P_minus, depth)
    dim_lower = D - sum_plus / logN if math.isfinite(sum_plus) else -math.inf
    dim_upper = D - sum_minus / logN
    return DimensionBounds(lower_ok, True, h_lower, b_upper, dim_lower, dim_upper)


def box_count(obj, rho: float, tree_halfopen: bool = True) -> int:
    """Grid-based cover count with boxes of side 2*rho.

    For a point array, boxes are left-open (x = 0 pinned to box 0), so the
    closed unit interval at rho = 1/8 costs 4 boxes.  For a Tree, the
    surviving deepest cylinders are treated as half-open boxes [a, a + w).
    The aligned grid overshoots an optimal cover by at most 2^D.
    """
    width = 2.0 * rho
    if isinstance(obj, Tree):
        scheme = obj.scheme
        depth = obj.depth
        side = scheme.side(depth)
        boxes = set()
        dims = scheme.dims
        for word in obj.words[depth]:
            corner = scheme.encode(tuple(int(v) for v in word)).ravel()
            ranges = []
            for a in corner:
                i_lo = math.floor(a / width + 1e-12)
                i_hi = math.ceil((a + side) / width - 1e-12) - 1
                ranges.append(range(i_lo, max(i_hi, i_lo) + 1))
            idx = [()]
            for r in ranges:
                idx = [t + (i,) for t in idx for i in r]
            boxes.update(idx)
        return len(boxes)
    pts = np.asarray(obj, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    idx = np.ceil(pts / width) - 1
    idx = np.maximum(idx, 0).astype(np.int64)
    return len({tuple(row) for row in idx.tolist()})


def dump_tree(tree: Tree, stream) -> None:
    """Line-oriented dump: one node per line 'level,digit.digit...,kept'.

    Nodes of the deepest (unexpanded) level carry kept = -1.
    """
    close = False
    if isinstance(stream, str):
        stream = open(stream, "w")
        close = True
    try:
        for k, level_words in enumerate(tree.words):
            counts = tree.kept_counts[k] if k < len(tree.kept_counts) else None
            for i, word in enumerate(level_words):
                digits = ".".join(str(int(v)) for v in word)
                kept = int(counts[i]) if counts is not None and i < len(counts) else -1
                stream.write("%d,%s,%d\n" % (k, digits, kept))
    finally:
        if close:
            stream.close()
