import math

import numpy as np
import pytest
from scipy.integrate import quad

from badapprox import (
    ApproxFunction,
    DimFunction,
    Dimensions,
    F_psi,
    L_exponent,
    NormSpec,
    Verdict,
    classify,
    eta,
)

D11 = Dimensions(1, 1)
SUP1 = NormSpec.sup(1)


def quad_F_oracle(psi, Q1, Q2):
    m, n = psi.dims.m, psi.dims.n
    val, err = quad(lambda q: q ** (n - 1) * float(psi(q)) ** m, Q1, Q2, limit=200)
    assert err < 1e-7
    return val


class TestFPsi:
    def test_power_law_closed_form(self):
        psi = ApproxFunction.power_law(D11, 0.05)
        assert F_psi(psi, 10, 1000) == pytest.approx(0.05 * math.log(100), rel=1e-14)

    def test_empty_window(self):
        for psi in (ApproxFunction.power_law(D11, 0.3), ApproxFunction.log_corrected(D11, 2.0)):
            assert F_psi(psi, 7.0, 7.0) == 0.0

    def test_log_corrected_quadrature_oracle(self):
        psi = ApproxFunction.log_corrected(D11, 1.0)
        got = F_psi(psi, math.e ** 2, math.e ** 4)
        assert got == pytest.approx(math.log(2), rel=1e-12)
        assert got == pytest.approx(quad_F_oracle(psi, math.e ** 2, math.e ** 4), rel=1e-8)
        # window straddling the q = 2 kink
        assert F_psi(psi, 1.2, 9.0) == pytest.approx(quad_F_oracle(psi, 1.2, 9.0), rel=1e-9)

    def test_argument_error(self):
        psi = ApproxFunction.power_law(D11, 0.1)
        with pytest.raises(ValueError):
            F_psi(psi, 10, 9)

    def test_tabulated_matches_quadrature(self):
        dims = Dimensions(2, 1)
        base = ApproxFunction.log_corrected(dims, 0.7)
        grid = np.geomspace(1.0, 1e4, 60)
        psi = ApproxFunction.tabulated(dims, [(q, float(base(q))) for q in grid])
        got = F_psi(psi, 2.5, 5000.0)
        # adaptive quadrature oracle, told about the interpolation kinks
        breaks = [q for q in grid if 2.5 < q < 5000.0]
        oracle, err = quad(
            lambda q: float(psi(q)) ** 2, 2.5, 5000.0, limit=400, points=breaks
        )
        assert got == pytest.approx(oracle, rel=1e-9)

    def test_additivity(self):
        rng = np.random.default_rng(5)
        psis = [
            ApproxFunction.power_law(D11, 0.2),
            ApproxFunction.log_corrected(Dimensions(2, 1), 1.3),
            ApproxFunction.tabulated(D11, [(1, 1.0), (10, 0.05), (100, 0.004), (1000, 0.0003)]),
        ]
        for psi in psis:
            for _ in range(50):
                qs = np.sort(1.0 + 2000 * rng.random(3))
                left = psi.F(qs[0], qs[1]) + psi.F(qs[1], qs[2])
                assert psi.F(qs[0], qs[2]) == pytest.approx(left, rel=1e-12, abs=1e-15)

    def test_sandwich_bounds(self):
        # phi(Q2) log(Q2/Q1) <= F <= phi(Q1) log(Q2/Q1), and F <= M_psi log(Q2/Q1)
        rng = np.random.default_rng(11)
        for _ in range(1000):
            kind = rng.integers(0, 3)
            dims = Dimensions(int(rng.integers(1, 3)), int(rng.integers(1, 3)))
            if kind == 0:
                psi = ApproxFunction.power_law(dims, float(rng.random()) * 0.9 + 0.01)
            elif kind == 1:
                psi = ApproxFunction.log_corrected(dims, float(rng.random()) * 2 + 0.1)
            else:
                qs = np.sort(1 + 100 * rng.random(4))
                base = ApproxFunction.log_corrected(dims, 1.0)
                psi = ApproxFunction.tabulated(dims, [(q, float(base(q))) for q in qs])
            Q1 = 1.0 + 50 * rng.random()
            Q2 = Q1 * (1.0 + 10 * rng.random())
            F = psi.F(Q1, Q2)
            ratio = math.log(Q2 / Q1)
            assert psi.phi(Q2) * ratio <= F * (1 + 1e-9) + 1e-12
            assert F <= psi.phi(Q1) * ratio * (1 + 1e-9) + 1e-12
            assert F <= psi.M_psi * ratio * (1 + 1e-9) + 1e-12


class TestFamilies:
    def test_phi_nonincreasing_guard(self):
        with pytest.raises(ValueError, match="nonincreasing"):
            ApproxFunction.tabulated(D11, [(1, 0.1), (10, 0.05)])  # phi jumps 0.1 -> 0.5

    def test_m_psi(self):
        assert ApproxFunction.power_law(Dimensions(2, 1), 0.3).M_psi == pytest.approx(0.3)
        psi = ApproxFunction.log_corrected(D11, 1.0)
        assert psi.M_psi == pytest.approx(1.0 / math.log(2))

    def test_scaled_power_law(self):
        dims = Dimensions(2, 3)
        psi = ApproxFunction.power_law(dims, 0.2)
        doubled = psi.scaled(2.0)
        q = 17.0
        assert float(doubled(q)) == pytest.approx(2.0 * float(psi(q)), rel=1e-12)
        assert doubled.scaling_ratio_to(psi) == pytest.approx(2.0, rel=1e-12)

    def test_block_rescaling_F_invariance(self):
        dims = Dimensions(1, 1)
        grid = np.geomspace(1, 1e6, 80)
        base = ApproxFunction.log_corrected(dims, 1.0)
        psi = ApproxFunction.tabulated(dims, [(q, float(base(q))) for q in grid])
        Qk = 31.0
        zoomed = psi.block_rescaled(Qk)
        assert zoomed.F(100.0 / Qk, 900.0 / Qk) == pytest.approx(
            psi.F(100.0, 900.0), rel=1e-12
        )
        power = ApproxFunction.power_law(dims, 0.07)
        assert power.block_rescaled(123.0) is power


class TestLExponent:
    def test_log_power_vs_log_corrected(self):
        for s, gamma in [(0.5, 1.0), (2.0, 1.0), (1.4, 0.7)]:
            f = DimFunction.log_power(D11, s)
            psi = ApproxFunction.log_corrected(D11, gamma)
            L = L_exponent(f, psi)
            assert L.exact
            assert L.value == pytest.approx(s / gamma, rel=1e-14)

    def test_power_vs_power_law(self):
        dims = Dimensions(2, 1)
        s = 0.8
        kappa = 0.3
        f = DimFunction.power(dims, dims.D - s)
        psi = ApproxFunction.power_law(dims, kappa)
        L = L_exponent(f, psi)
        assert L.value == pytest.approx((s / kappa) * (dims.d / dims.m), rel=1e-14)

    def test_corollary_construction(self):
        for dims in (D11, Dimensions(2, 1)):
            base = ApproxFunction.log_corrected(dims, 1.0)
            f = DimFunction.corollary(dims, base, 0.25)
            for gamma in (0.5, 1.0, 2.0):
                L = L_exponent(f, base.scaled(gamma))
                assert L.exact
                assert L.value == pytest.approx(gamma ** (-dims.m), rel=1e-12)

    def test_grid_fallback_conservative(self):
        # tabulated copy of the log-corrected family forces the grid path;
        # the ratio sequence converges only logarithmically to 1.5, so the
        # finite-depth tail infimum sits below the limit but above 1
        grid = np.geomspace(1, 2 ** 40, 300)
        base = ApproxFunction.log_corrected(D11, 1.0)
        psi = ApproxFunction.tabulated(D11, [(q, float(base(q))) for q in grid])
        f = DimFunction.log_power(D11, 1.5)
        L = L_exponent(f, psi)
        assert not L.exact
        assert 1.0 <= L.value <= 1.5
        assert L.error > 0

    def test_vanishing_denominator(self):
        f = DimFunction.power(D11, 0.5)
        with pytest.raises(ValueError, match="vanishes"):
            L_exponent(f, ApproxFunction.power_law(D11, 0.0))


class TestClassify:
    def test_example_grid(self):
        ev = eta(D11, SUP1, SUP1)
        psi = ApproxFunction.log_corrected(D11, 1.0)
        for s in (0.5, 1.0, 1.5, 2.0):
            got = classify(DimFunction.log_power(D11, s), psi, D11, SUP1, SUP1)
            expected = Verdict.ZERO if s < ev else Verdict.INFINITY
            assert got.verdict is expected, (s, got)

    def test_boundary_unknown(self):
        ev = eta(D11, SUP1, SUP1)
        psi = ApproxFunction.log_corrected(D11, 1.0)
        got = classify(DimFunction.log_power(D11, ev), psi, D11, SUP1, SUP1)
        assert got.verdict is Verdict.UNKNOWN

    def test_power_law_rejected(self):
        # psi/psi_* constant, not tending to 0
        with pytest.raises(ValueError, match="psi/psi_"):
            classify(DimFunction.power(D11, 0.5), ApproxFunction.power_law(D11, 0.5), D11, SUP1, SUP1)

    def test_tabulated_needs_decay_witness(self):
        flat = ApproxFunction.tabulated(D11, [(1, 1.0), (10, 0.1), (100, 0.01)])  # phi constant
        with pytest.raises(ValueError):
            classify(DimFunction.power(D11, 0.5), flat, D11, SUP1, SUP1)

    def test_corollary_flip_with_gamma(self):
        # L = gamma^-m strictly decreasing: verdict flips infinity -> zero
        base = ApproxFunction.log_corrected(D11, 1.0)
        f = DimFunction.corollary(D11, base, 0.25)
        values = []
        for gamma in (0.5, 0.9, 1.2, 2.0):
            got = classify(f, base.scaled(gamma), D11, SUP1, SUP1)
            values.append(got.L_value)
        assert all(a > b for a, b in zip(values, values[1:]))
        assert classify(f, base.scaled(0.5), D11, SUP1, SUP1).verdict is Verdict.INFINITY
        assert classify(f, base.scaled(2.0), D11, SUP1, SUP1).verdict is Verdict.ZERO


class TestDimFunction:
    def test_monotone_and_vanishing(self):
        f = DimFunction.log_power(Dimensions(2, 2), 3.0)
        rhos = np.geomspace(1e-18, 0.4, 40)
        vals = [f(r) for r in rhos]
        assert all(a <= b * (1 + 1e-12) for a, b in zip(vals, vals[1:]))
        assert vals[0] < 1e-30

    def test_power_range_guard(self):
        with pytest.raises(ValueError):
            DimFunction.power(D11, 1.5)  # s > mn
        with pytest.raises(ValueError):
            DimFunction.power(D11, 0.0)
