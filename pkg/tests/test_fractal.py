import io
import math
from fractions import Fraction

import numpy as np
import pytest

from badapprox import (
    ApproxFunction,
    CodingScheme,
    DimFunction,
    Dimensions,
    NormSpec,
    Schedule,
    box_count,
    build_avoidance_tree,
    build_schedule,
    build_survivor_tree,
    build_tree,
    dimension_bounds,
    dump_tree,
    eta,
)
from badapprox.cfrac import convergents_of_fraction
from badapprox.fractal import _exists_hit_1d, dump_tree as dump

D11 = Dimensions(1, 1)


def constant_scheme(exponent, depth, dims=D11):
    psi = ApproxFunction.power_law(dims, 1.0)
    return CodingScheme(Schedule(psi, 1.0, float(dims.alpha), (exponent,) * depth), dims)


class TestCoding:
    def test_encode_binary(self):
        scheme = constant_scheme(1, 4)
        assert scheme.encode((1, 0, 1))[0, 0] == pytest.approx(0.625)

    def test_k_of_rho(self):
        scheme = constant_scheme(1, 8)
        assert scheme.k_of_rho(0.3) == 1  # 1/4 < 0.3 <= 1/2
        assert scheme.k_of_rho(0.5) == 1  # boundary: 1/4 < 1/2 <= 1/2
        assert scheme.k_of_rho(1.0) == 0
        with pytest.raises(ValueError):
            scheme.k_of_rho(1.5)

    def test_affine_cylinder_image(self):
        # K_omega = pi(omega) + K / N^|omega|: corners and side lengths
        scheme = constant_scheme(2, 3)
        word = (3, 1)
        corner = scheme.encode(word)[0, 0]
        assert corner == pytest.approx(3 / 4 + 1 / 16)
        assert scheme.side(2) == pytest.approx(1 / 16)

    def test_center_fraction(self):
        scheme = constant_scheme(1, 4)
        assert scheme.center_fraction((1, 0)) == Fraction(5, 8)

    def test_matrix_digits(self):
        dims = Dimensions(2, 1)
        psi = ApproxFunction.power_law(dims, 1.0)
        scheme = CodingScheme(Schedule(psi, 1.0, float(dims.alpha), (1, 1)), dims)
        assert scheme.alphabet(1) == 4  # N^D with N = 2, D = 2
        mats = [scheme.digit_matrix(1, e) for e in range(4)]
        assert {tuple(m.ravel()) for m in mats} == {(0, 0), (1, 0), (0, 1), (1, 1)}

    def test_q_band_exact_roots(self):
        psi = ApproxFunction.power_law(D11, 0.05)
        sched = build_schedule(psi, 0.5, 0.5, 3)
        scheme = CodingScheme(sched, D11)
        lo0, hi0 = scheme.q_band(0)
        assert lo0 == 1
        assert hi0 == math.isqrt(2 ** 29)  # floor(2^14.5)
        lo1, hi1 = scheme.q_band(1)
        assert lo1 == hi0 + 1
        assert hi1 == 2 ** 29 - 1


class TestSyntheticTrees:
    def test_constant_evaporation(self):
        scheme = constant_scheme(2, 12)
        tree = build_tree(scheme, lambda w, a: a < 3, 12)
        assert tree.P_plus == [0.25] * 12
        assert tree.P_minus == [0.25] * 12
        b = dimension_bounds(tree, DimFunction.power(D11, 1.0))
        target = math.log(3) / math.log(4)
        assert b.dim_lower == pytest.approx(target, abs=1e-12)
        assert b.dim_upper == pytest.approx(target, abs=1e-12)

    def test_full_tree(self):
        scheme = constant_scheme(2, 6)
        tree = build_tree(scheme, lambda w, a: True, 6)
        b = dimension_bounds(tree, DimFunction.power(D11, 1.0))
        assert b.dim_lower == 1.0 and b.dim_upper == 1.0

    def test_single_child(self):
        scheme = constant_scheme(2, 8)
        tree = build_tree(scheme, lambda w, a: a == 0, 8)
        b = dimension_bounds(tree, DimFunction.power(D11, 0.5))
        assert b.dim_lower == pytest.approx(0.0, abs=1e-12)
        assert b.dim_upper == pytest.approx(0.0, abs=1e-12)

    def test_prefix_closure_and_pm_identity(self):
        scheme = constant_scheme(2, 5)
        tree = build_tree(scheme, lambda w, a: (a + sum(w)) % 4 != 0, 5)
        for k in range(1, tree.depth + 1):
            words = {tuple(int(v) for v in w) for w in tree.words[k]}
            parents = {tuple(int(v) for v in w) for w in tree.words[k - 1]}
            for w in words:
                assert w[:-1] in parents
            # M_k identities
            A = scheme.alphabet(k)
            assert tree.M_minus(k) == pytest.approx(A * (1 - tree.P_plus[k - 1]))
            assert tree.M_plus(k) == pytest.approx(A * (1 - tree.P_minus[k - 1]))

    def test_sandwich_on_power_family(self):
        scheme = constant_scheme(2, 8)
        tree = build_tree(scheme, lambda w, a: a < 3, 8)
        for s in (0.3, 0.6, 0.79, 0.9):
            b = dimension_bounds(tree, DimFunction.power(D11, s))
            assert b.hausdorff_lower <= b.box_upper + 1e-9

    def test_dead_tree_flag(self):
        scheme = constant_scheme(1, 4)
        tree = build_tree(scheme, lambda w, a: len(w) < 2, 4)
        assert tree.died

    def test_mass_distribution_principle(self):
        # uniform measure on the keep-3 tree: mu(ball) <= C f_+(rho)
        scheme = constant_scheme(2, 9)
        tree = build_tree(scheme, lambda w, a: a < 3, 9)
        rng = np.random.default_rng(3)
        depth = tree.depth
        deep_words = tree.words[depth]
        corners = np.array(
            [scheme.encode(tuple(int(v) for v in w))[0, 0] for w in deep_words]
        )
        side = scheme.side(depth)
        n_nodes = len(deep_words)
        for _ in range(1000):
            x = float(rng.random())
            rho = float(rng.uniform(scheme.side(depth - 1), 0.5))
            k = scheme.k_of_rho(rho)
            # mu(ball) = fraction of deepest cylinders meeting the ball
            hits = np.count_nonzero((corners + side >= x - rho) & (corners <= x + rho))
            mu = hits / n_nodes
            f_plus = math.exp(tree.log_f_plus(k)) if k >= 1 else 1.0
            assert mu <= 8.0 * f_plus + 1e-12


class TestExactHitSearch:
    def brute(self, c, h, kappa, qlo, qhi, mode):
        c, h = Fraction(c), Fraction(h)
        kap = Fraction(kappa)
        for q in range(qlo, qhi + 1):
            thresh = kap / q - q * h if mode == "subset" else kap / q + q * h
            if thresh < 0:
                continue
            y = q * c
            p = round(y)
            if abs(y - p) <= thresh:
                return True
        return False

    def test_against_brute_force(self):
        rng = np.random.default_rng(7)
        psi = ApproxFunction.power_law(D11, 0.07)
        agreements = 0
        for _ in range(300):
            c = Fraction(int(rng.integers(1, 2 ** 20)), 2 ** 20)
            h = Fraction(1, 2 ** int(rng.integers(8, 22)))
            qlo = int(rng.integers(1, 40))
            qhi = qlo + int(rng.integers(1, 300))
            for mode in ("subset", "meets"):
                got = _exists_hit_1d(c, h, psi, qlo, qhi, mode)
                want = self.brute(c, h, 0.07, qlo, qhi, mode)
                assert got == want, (c, h, qlo, qhi, mode)
                agreements += 1
        assert agreements == 600

    def test_deep_band_consistency(self):
        # far beyond brute-force reach: subset hits imply meets hits
        rng = np.random.default_rng(11)
        psi = ApproxFunction.power_law(D11, 0.05)
        for _ in range(50):
            c = Fraction(int(rng.integers(1, 2 ** 60)), 2 ** 60)
            h = Fraction(1, 2 ** 60)
            if _exists_hit_1d(c, h, psi, 10 ** 6, 10 ** 9, "subset"):
                assert _exists_hit_1d(c, h, psi, 10 ** 6, 10 ** 9, "meets")


class TestWindowTrees:
    def setup_method(self):
        self.psi = ApproxFunction.power_law(D11, 0.05)
        self.sched = build_schedule(self.psi, 0.5, 0.5, 4)
        self.scheme = CodingScheme(self.sched, D11)

    def test_zero_psi_full_tree(self):
        zero = ApproxFunction.power_law(D11, 0.0)
        sched = Schedule(zero, 1.0, 0.5, (2, 2, 2))
        scheme = CodingScheme(sched, D11)
        tree = build_survivor_tree(zero, 1.0, scheme, 3)
        assert tree.P_plus == [0.0, 0.0, 0.0]
        assert len(tree.words[3]) == 4 ** 3
        tree2 = build_avoidance_tree(zero, 1.0, scheme, 3)
        assert tree2.P_plus == [0.0, 0.0, 0.0]

    def test_survivor_rates_in_eta_beta_band(self):
        tree = build_survivor_tree(
            self.psi, 1.0, self.scheme, 3, child_samples=384, node_cap=16, seed=5
        )
        ev = eta(D11, NormSpec.sup(1), NormSpec.sup(1))
        lo, hi = 0.5 * ev * 0.5, 2.0 * ev * 0.5
        for p in tree.P_minus:
            assert lo <= p <= hi
        assert tree.sampled

    def test_survivor_monotone_in_kappa(self):
        bigger = ApproxFunction.power_law(D11, 0.1)
        t1 = build_survivor_tree(self.psi, 1.0, self.scheme, 2, child_samples=256, node_cap=8, seed=5)
        t2 = build_survivor_tree(bigger, 1.0, self.scheme, 2, child_samples=256, node_cap=8, seed=5)
        for a, b in zip(t1.P_minus, t2.P_minus):
            assert a <= b + 1e-12

    def test_avoidance_points_avoid_slabs(self):
        tree = build_avoidance_tree(
            self.psi, 1.0, self.scheme, 2, child_samples=128, node_cap=8, seed=7
        )
        assert not tree.died
        kap = Fraction(self.psi.kappa)
        for w in tree.words[tree.depth][:10]:
            c = self.scheme.center_fraction(tuple(int(v) for v in w))
            for k in range(tree.depth):
                qlo, qhi = self.scheme.q_band(k, Q0=1.0)
                for p, q in convergents_of_fraction(c, qmax=qhi):
                    g = max(-(-qlo // q), 1)
                    while g * q <= qhi:
                        assert abs(g * q * c - g * p) > kap / (g * q)
                        g += 1 if g > 2 else g  # sparse spot check of multiples

    def test_avoidance_rates_near_eta_beta(self):
        tree = build_avoidance_tree(
            self.psi, 1.0, self.scheme, 2, child_samples=256, node_cap=8, seed=9
        )
        ev = eta(D11, NormSpec.sup(1), NormSpec.sup(1))
        # unconditional-geometry variant over-removes: allow a wide band above
        for p in tree.P_plus:
            assert 0.3 * ev * 0.5 <= p <= 1.0

    def test_matrix_variant_small(self):
        dims = Dimensions(1, 2)
        psi = ApproxFunction.power_law(dims, 0.4)
        sched = build_schedule(psi, 0.4, float(dims.alpha), 3)
        scheme = CodingScheme(sched, dims)
        tree = build_survivor_tree(psi, 1.0, scheme, 1, child_samples=64, node_cap=4, seed=1)
        assert 0.0 <= tree.P_plus[0] <= 1.0


class TestBoxCount:
    def test_unit_interval(self):
        assert box_count(np.linspace(0, 1, 2001), 1 / 8) == 4

    def test_unit_square(self):
        g = np.linspace(0, 1, 101)
        pts = np.stack(np.meshgrid(g, g), -1).reshape(-1, 2)
        assert box_count(pts, 1 / 4) == 4

    def test_middle_thirds_analogue(self):
        # binary analogue: keep digits {0, 3} of a base-4 code; at depth k the
        # survivors are 2^k cylinders of side 4^-k, countable at rho = 4^-k/2
        scheme = constant_scheme(2, 6)
        tree = build_tree(scheme, lambda w, a: a in (0, 3), 6)
        for k in (2, 3, 4):
            partial = build_tree(scheme, lambda w, a: a in (0, 3), k)
            assert box_count(partial, 0.5 * 4.0 ** -k) == 2 ** k


class TestDump:
    def test_format(self):
        scheme = constant_scheme(1, 3)
        tree = build_tree(scheme, lambda w, a: True, 2)
        buf = io.StringIO()
        dump_tree(tree, buf)
        lines = buf.getvalue().strip().split("\n")
        assert lines[0] == "0,,2"
        assert set(lines[1:3]) == {"1,0,2", "1,1,2"}
        # deepest level carries kept = -1
        assert all(line.endswith(",-1") for line in lines[3:])
        assert len(lines) == 1 + 2 + 4
