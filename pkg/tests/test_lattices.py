import math

import numpy as np
import pytest

from badapprox import (
    Dimensions,
    Lattice,
    MixedNorm,
    NormSpec,
    dual,
    epsilon_K_profile,
    epsilon_K_scan,
    irregularity,
    lattice_irregularity,
    make_g,
    make_u,
    shortest_vector,
    successive_minima,
)
from badapprox.lattices import (
    codiameter_upper,
    covolume,
    dual_section_covolume,
    integer_kernel_basis,
    line_section_covolume,
    lll_reduce,
)

D11 = Dimensions(1, 1)
MIX2 = MixedNorm(D11, NormSpec.sup(1), NormSpec.sup(1))
D21 = Dimensions(2, 1)
MIX3 = MixedNorm(D21, NormSpec.sup(2), NormSpec.sup(1))


def random_unimodular(rng, d, size=3, ops=None):
    """Integer unimodular matrix from random elementary column operations."""
    M = np.eye(d)
    for _ in range(ops if ops is not None else 6 * d):
        i, j = rng.integers(0, d, size=2)
        if i != j:
            M[:, j] += int(rng.integers(-size, size + 1)) * M[:, i]
    return M


class TestBasics:
    def test_unimodularity_enforced(self):
        with pytest.raises(ValueError):
            Lattice(np.diag([2.0, 1.0]))

    def test_shortest_standard(self):
        for d, mix in ((2, MIX2), (3, MIX3)):
            v, lam = shortest_vector(Lattice.standard(d), mix)
            assert lam == 1.0

    def test_shortest_diag(self):
        v, lam = shortest_vector(Lattice(np.diag([2.0, 0.5])), MIX2)
        assert lam == pytest.approx(0.5)
        assert abs(v[1]) == pytest.approx(0.5) and v[0] == 0.0

    def test_shortest_flow_matches_convergents(self):
        # at the balanced time t* = (1/2) log(q / ||q x||) the convergent
        # vector (p, q) has both flowed coordinates equal to sqrt(q ||q x||),
        # and it realizes the first minimum of g_t* u_A Z^2
        from badapprox.cfrac import CFExpansion, golden_ratio

        x = golden_ratio()
        cf = CFExpansion.of(x, depth=12)
        A = np.array([[float(x)]])
        for p, q in cf.convergents[6:10]:
            dist = abs(q * float(x) - p)
            t_star = 0.5 * math.log(q / dist)
            lat = Lattice(make_g(t_star, D11) @ make_u(A))
            _, lam = shortest_vector(lat, MIX2)
            assert lam == pytest.approx(math.sqrt(q * dist), rel=1e-9)

    def test_successive_minima_ordered(self):
        rng = np.random.default_rng(2)
        for _ in range(5):
            lat = Lattice(random_unimodular(rng, 3, 2))
            mins = successive_minima(lat, MIX3)
            assert len(mins) == 3
            assert np.all(np.diff(mins) >= -1e-12)


class TestDual:
    def test_self_dual(self):
        for d in (2, 3, 4):
            assert np.allclose(dual(Lattice.standard(d)).basis, np.eye(d))

    def test_diag(self):
        got = dual(Lattice(np.diag([3.0, 1 / 3.0])))
        assert np.allclose(sorted(np.diag(got.basis)), [1 / 3.0, 3.0])

    def test_involution_and_covolume(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            lat = Lattice(random_unimodular(rng, 4, 1, ops=8))
            again = dual(dual(lat))
            scale = max(1.0, np.max(np.abs(lat.basis)))
            assert np.max(np.abs(again.basis - lat.basis)) < 1e-12 * scale
            assert covolume(lat) * covolume(dual(lat)) == pytest.approx(1.0, abs=1e-12)

    def test_cassels_duality(self):
        # lambda_i(L*) * lambda_(d+1-i)(L) bounded above and below
        rng = np.random.default_rng(7)
        for _ in range(15):
            lat = Lattice(random_unimodular(rng, 3, 2))
            a = successive_minima(lat, MIX3)
            b = successive_minima(dual(lat), MIX3)
            for i in range(3):
                prod = b[i] * a[3 - 1 - i]
                assert 1.0 / 20.0 <= prod <= 20.0

    def test_minkowski_product(self):
        rng = np.random.default_rng(11)
        for _ in range(15):
            lat = Lattice(random_unimodular(rng, 3, 3))
            _, lam1 = shortest_vector(lat, MIX3)
            assert lam1 ** 3 <= 8.0 + 1e-9  # lambda_1^d <= 2^d covol / V + slack


class TestKernels:
    def test_kernel_orthogonality(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            d = int(rng.integers(2, 6))
            x = rng.integers(-20, 21, size=d)
            if not np.any(x):
                x[0] = 7
            K = integer_kernel_basis(x)
            assert K.shape == (d, d - 1)
            assert np.all(K.T @ x == 0)
            # full rank
            assert np.linalg.matrix_rank(K.astype(float)) == d - 1

    def test_line_vs_dual_section_covolume(self):
        # exact identity for unimodular lattices under Euclidean wedge norms
        rng = np.random.default_rng(9)
        for _ in range(25):
            d = int(rng.integers(2, 5))
            lat = Lattice(random_unimodular(rng, d, 2))
            coeffs = rng.integers(-5, 6, size=d)
            if not np.any(coeffs):
                coeffs[0] = 1
            g = np.gcd.reduce(np.abs(coeffs[coeffs != 0]))
            coeffs = coeffs // g
            line = line_section_covolume(lat, coeffs)
            section = dual_section_covolume(lat, coeffs)
            assert line == pytest.approx(section, rel=1e-9)


class TestIrregularity:
    def test_z2_35(self):
        assert irregularity(Lattice.standard(2), (3, 5), MIX2) == pytest.approx(1.0)

    def test_unit_vector(self):
        d21 = MixedNorm(D21, NormSpec.sup(2), NormSpec.sup(1))
        assert irregularity(Lattice.standard(3), (0, 0, 1), d21) == pytest.approx(1.0)

    def test_multiple_scaling(self):
        rng = np.random.default_rng(13)
        for _ in range(10):
            coeffs = rng.integers(-6, 7, size=3)
            if not np.any(coeffs):
                coeffs[2] = 1
            g = np.gcd.reduce(np.abs(coeffs[coeffs != 0]))
            coeffs = coeffs // g
            base = irregularity(Lattice.standard(3), coeffs, MIX3)
            for k in (2, 3):
                got = irregularity(Lattice.standard(3), k * coeffs, MIX3)
                assert got == pytest.approx(k * base, rel=1e-9)

    def test_rejects_zero(self):
        with pytest.raises(ValueError):
            irregularity(Lattice.standard(2), (0, 0), MIX2)

    def test_lattice_irregularity(self):
        assert lattice_irregularity(Lattice.standard(3), MIX3) == pytest.approx(1.0)
        assert lattice_irregularity(Lattice(np.diag([0.5, 2.0])), MIX2) == pytest.approx(8.0)

    def test_irregularity_grows_along_flow(self):
        # monotone growth holds until the first change of minimizing vector;
        # for the golden ratio that window is t in [0, log(1/0.382)/2)
        from badapprox.cfrac import golden_ratio

        A = np.array([[float(golden_ratio())]])
        values = []
        for t in (0.0, 0.15, 0.3, 0.45):
            lat = Lattice(make_g(t, D11) @ make_u(A))
            values.append(lattice_irregularity(lat, MIX2))
        assert all(a <= b + 1e-9 for a, b in zip(values, values[1:]))
        assert values[-1] > values[0]

    def test_irr_bounded_below(self):
        # universal lower bound for the sup-norm pair, measured empirically:
        # all sampled vectors stay above the frozen constant 0.4
        rng = np.random.default_rng(17)
        lat = Lattice(random_unimodular(rng, 3, 2))
        for _ in range(30):
            coeffs = rng.integers(-4, 5, size=3)
            if not np.any(coeffs):
                coeffs[1] = 2
            assert irregularity(lat, coeffs, MIX3) > 0.4


class TestEpsilonScan:
    def test_huge_K_empty(self):
        import warnings as _w

        with _w.catch_warnings():
            _w.simplefilter("ignore")
            assert epsilon_K_scan(Lattice.standard(3), 500.0, 30.0, MIX3) == 0.0

    def test_z2_K1_counts_most(self):
        # every r in Z^2 has Irr(r) >= 1 via its orthogonal companion, except
        # where the companion is longer; at K = 1 the census catches a
        # positive density comparable to the full count
        val = epsilon_K_scan(Lattice.standard(2), 1.0, 20.0, MIX2)
        full_density = (41 ** 2 - 1) / 20.0 ** 2
        assert val > 0.5 * full_density

    def test_monotone_in_K(self):
        prof = epsilon_K_profile(Lattice.standard(3), [2.0, 4.0, 8.0, 16.0], 40.0, MIX3)
        vals = [prof[k] for k in (2.0, 4.0, 8.0, 16.0)]
        assert all(a >= b - 1e-12 for a, b in zip(vals, vals[1:]))
        assert vals[-1] < vals[0]

    def test_warns_outside_regime(self):
        with pytest.warns(UserWarning, match="regime"):
            assert epsilon_K_scan(Lattice.standard(3), 40.0, 30.0, MIX3) >= 0.0

    def test_against_brute_force(self):
        # small panel: direct enumeration of all vectors and their Irr
        lat = Lattice.standard(3)
        Q = 6.0
        brute = 0
        K = 2.0
        for x in np.ndindex(13, 13, 13):
            c = np.array(x) - 6
            if not np.any(c):
                continue
            if MIX3(c.astype(float)) <= Q:
                if irregularity(lat, c, MIX3) >= K:
                    brute += 1
        got = epsilon_K_scan(lat, K, Q, MIX3)
        assert got == pytest.approx(brute / Q ** 3, rel=1e-12)


class TestSumIntegralSandwich:
    def test_count_vs_volume(self):
        # #(Lambda in ball Q) sandwiched by mixed-ball volumes at Q -+ codiam
        rng = np.random.default_rng(23)
        checked = 0
        for _ in range(50):
            lat = Lattice(random_unimodular(rng, 3, 1))
            codiam = codiameter_upper(lat, MIX3)
            Q = 2.0 * codiam + 3.0
            coeffs = np.stack(np.meshgrid(*[np.arange(-60, 61)] * 3, indexing="ij"), -1).reshape(-1, 3)
            vectors = coeffs @ lat.basis.T
            norms = MIX3.of_rows(vectors)
            assert norms[np.any(coeffs != 0, axis=1)].min() * 60 > Q, "box too small"
            count = int(np.count_nonzero(norms <= Q))
            vol = MIX3.ball_volume
            upper = vol * (Q + codiam) ** 3
            lower = vol * max(Q - codiam, 0.0) ** 3
            assert lower <= count <= upper
            checked += 1
        assert checked == 50
