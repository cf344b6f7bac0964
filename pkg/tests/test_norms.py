import math

import numpy as np
import pytest
import scipy.special

from badapprox import Dimensions, MixedNorm, NormSpec, eta, jbbd_dimension, theta, unit_ball_volume, zeta
from badapprox.norms import cube_operator_norm, normalized_mu_for_half_cube


def zeta3_series_oracle():
    # independent evaluation: direct sum with integral tail bracket
    N = 2000
    head = sum(k ** -3 for k in range(1, N + 1))
    lo = head + 1.0 / (2 * (N + 1) ** 2)
    hi = head + 1.0 / (2 * N ** 2)
    assert hi - lo < 1e-9
    return 0.5 * (lo + hi)


def test_zeta_against_scipy():
    for s in (2, 3, 4, 5, 6.5):
        assert zeta(s) == pytest.approx(float(scipy.special.zeta(s, 1)), abs=1e-14)


def test_zeta_closed_forms():
    assert zeta(2) == pytest.approx(math.pi ** 2 / 6, abs=1e-14)
    assert zeta(4) == pytest.approx(math.pi ** 4 / 90, abs=1e-14)


def test_unit_ball_volumes():
    assert unit_ball_volume(NormSpec.sup(1)) == 2.0
    assert unit_ball_volume(NormSpec.sup(3)) == 8.0
    assert unit_ball_volume(NormSpec.l2(2)) == pytest.approx(math.pi, rel=1e-12)
    # l1 ball in R^d has volume 2^d / d!
    assert unit_ball_volume(NormSpec.l1(3)) == pytest.approx(8.0 / 6.0, rel=1e-12)
    # lp formula interpolates: p = 2 matches the sphere in R^3
    assert unit_ball_volume(NormSpec.lp(3, 2.0)) == pytest.approx(4.0 * math.pi / 3.0, rel=1e-12)
    with pytest.raises(ValueError, match="norm volume unavailable"):
        NormSpec("fancy", 2)


def test_scaled_norm_volume():
    # |x|' = 2|x| shrinks the ball by 2^-d
    assert unit_ball_volume(NormSpec.sup(2, scale=2.0)) == 1.0


def test_theta_eta_11():
    dims = Dimensions(1, 1)
    sup1 = NormSpec.sup(1)
    assert theta(dims, sup1, sup1) == pytest.approx(6.0 / math.pi ** 2, abs=1e-13)
    assert eta(dims, sup1, sup1) == pytest.approx(12.0 / math.pi ** 2, abs=1e-13)


def test_eta_21_series_oracle():
    dims = Dimensions(2, 1)
    value = eta(dims, NormSpec.sup(2), NormSpec.sup(1))
    expected = 1 * 4 * 2 / (2 * zeta3_series_oracle())
    assert value == pytest.approx(expected, rel=1e-9)
    assert value == pytest.approx(3.327629, abs=1e-5)


def test_theta_22():
    dims = Dimensions(2, 2)
    value = theta(dims, NormSpec.sup(2), NormSpec.sup(2))
    assert value == pytest.approx(8.0 / (math.pi ** 4 / 90.0), rel=1e-12)
    assert value == pytest.approx(7.391507, abs=1e-5)


def test_eta_theta_relation():
    rng = np.random.default_rng(3)
    kinds = [NormSpec.sup, NormSpec.l1, NormSpec.l2]
    for _ in range(20):
        m, n = int(rng.integers(1, 4)), int(rng.integers(1, 4))
        dims = Dimensions(m, n)
        mu = kinds[rng.integers(0, 3)](m)
        nv = kinds[rng.integers(0, 3)](n)
        assert eta(dims, mu, nv) == pytest.approx(
            (m + n) / m * theta(dims, mu, nv), rel=1e-14
        )


def test_jbbd():
    assert jbbd_dimension(Dimensions(1, 1), 2.0) == pytest.approx(2.0 / 3.0, rel=1e-14)
    # limit c -> inf is (n-1)m
    assert jbbd_dimension(Dimensions(1, 2), 1e12) == pytest.approx(1.0, abs=1e-11)
    assert jbbd_dimension(Dimensions(1, 1), 1.0) == pytest.approx(1.0, rel=1e-14)
    with pytest.raises(ValueError):
        jbbd_dimension(Dimensions(1, 2), 1.5)


def test_mixed_norm():
    dims = Dimensions(2, 1)
    norm = MixedNorm(dims, NormSpec.l2(2), NormSpec.sup(1))
    assert norm([3.0, 4.0, 2.0]) == pytest.approx(5.0)
    assert norm([0.1, 0.1, 7.0]) == pytest.approx(7.0)
    assert norm.ball_volume == pytest.approx(math.pi * 2.0, rel=1e-12)
    rows = np.array([[3.0, 4.0, 2.0], [0.0, 0.0, 1.0]])
    assert norm.of_rows(rows) == pytest.approx([5.0, 1.0])


def test_half_cube_normalization():
    dims = Dimensions(1, 2)
    mu, nv = NormSpec.sup(1), NormSpec.sup(2)
    assert cube_operator_norm(dims, mu, nv) == pytest.approx(2.0)
    mu2 = normalized_mu_for_half_cube(dims, mu, nv)
    assert cube_operator_norm(dims, mu2, nv) == pytest.approx(0.5)
