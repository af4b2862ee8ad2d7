import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from apparent_stability.geometry import (
    BallSpec,
    CapQuery,
    basis_vector,
    cap_fraction_bound,
    cap_fraction_exact,
    cap_fractions,
    log_cap_fraction_bound,
    log_unit_ball_volume,
    sample_ball_axis_coordinate,
    sample_uniform_ball,
    sample_uniform_half_ball,
)


def cap_by_quadrature(n, r, h):
    """Cap volume fraction by integrating (n-1)-ball cross sections along the axis."""
    if n == 1:
        return h / (2 * r)
    # fraction = int_{r-h}^{r} (1 - (t/r)^2)^((n-1)/2) dt / int_{-r}^{r} (same)
    f = lambda t: (1.0 - (t / r) ** 2) ** ((n - 1) / 2)
    num, _ = integrate.quad(f, r - h, r, epsabs=0, epsrel=1e-13, limit=200)
    den, _ = integrate.quad(f, -r, r, epsabs=0, epsrel=1e-13, limit=200)
    return num / den


# ---- volumes ---------------------------------------------------------------


def test_log_volume_small_dims():
    assert log_unit_ball_volume(2) == pytest.approx(1.1447298858, abs=1e-10)
    assert log_unit_ball_volume(1) == pytest.approx(math.log(2), abs=1e-15)
    assert log_unit_ball_volume(3) == pytest.approx(math.log(4 * math.pi / 3), abs=1e-14)


def test_log_volume_matches_direct_gamma():
    for n in (5, 17, 100, 170):
        direct = math.pi ** (n / 2) / math.gamma(n / 2 + 1)
        assert math.exp(log_unit_ball_volume(n)) == pytest.approx(direct, rel=1e-12)
    # frozen from a 30-digit evaluation
    assert log_unit_ball_volume(100) == pytest.approx(-91.24127265930302, abs=1e-10)


def test_log_volume_rejects_bad_dimension():
    with pytest.raises(ValueError):
        log_unit_ball_volume(0)
    with pytest.raises(ValueError):
        log_unit_ball_volume(2.5)


# ---- exact caps --------------------------------------------------------------


@pytest.mark.parametrize("n", [1, 2, 3, 10, 1000])
def test_hemisphere_is_half(n):
    assert cap_fraction_exact(CapQuery(n, 1.0, 1.0)) == pytest.approx(0.5, abs=1e-15)


def test_cap_worked_values():
    assert cap_fraction_exact(CapQuery(3, 1.0, 0.5)) == pytest.approx(0.15625, rel=1e-13)
    assert cap_fraction_exact(CapQuery(1, 1.0, 0.4)) == pytest.approx(0.2, rel=1e-13)


def test_cap_three_d_closed_form():
    for r, h in [(1.0, 0.2), (2.0, 0.7), (0.5, 0.9)]:
        expected = (math.pi * h * h * (3 * r - h) / 3) / (4 * math.pi * r**3 / 3)
        assert cap_fraction_exact(CapQuery(3, r, h)) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("n", [2, 5, 50])
@pytest.mark.parametrize("rel", [0.05, 0.3, 0.8, 1.0, 1.4, 1.9])
def test_cap_matches_quadrature(n, rel):
    r = 1.7
    got = cap_fraction_exact(CapQuery(n, r, rel * r))
    assert got == pytest.approx(cap_by_quadrature(n, r, rel * r), rel=1e-9)


def test_cap_complement_symmetry():
    for n in (2, 7, 40):
        for h in (0.1, 0.6, 0.99):
            a = cap_fraction_exact(CapQuery(n, 1.0, h))
            b = cap_fraction_exact(CapQuery(n, 1.0, 2.0 - h))
            assert a + b == pytest.approx(1.0, abs=1e-14)


def test_cap_endpoints():
    assert cap_fraction_exact(CapQuery(4, 1.0, 0.0)) == 0.0
    assert cap_fraction_exact(CapQuery(4, 1.0, 2.0)) == 1.0


def test_cap_query_rejects_out_of_range():
    with pytest.raises(ValueError):
        CapQuery(3, 1.0, 2.5)
    with pytest.raises(ValueError):
        CapQuery(3, 1.0, -0.1)
    with pytest.raises(ValueError):
        CapQuery(3, 0.0, 0.0)


def test_vectorised_caps_match_scalar():
    hs = np.linspace(0, 2, 41)
    vec = cap_fractions(12, 1.0, hs)
    scal = [cap_fraction_exact(CapQuery(12, 1.0, h)) for h in hs]
    np.testing.assert_allclose(vec, scal, rtol=1e-14, atol=0)


@settings(max_examples=60, deadline=None)
@given(
    n=st.integers(1, 400),
    h1=st.floats(0.0, 2.0),
    h2=st.floats(0.0, 2.0),
)
def test_cap_monotone_in_height(n, h1, h2):
    lo, hi = sorted((h1, h2))
    assert cap_fraction_exact(CapQuery(n, 1.0, lo)) <= cap_fraction_exact(CapQuery(n, 1.0, hi)) + 1e-15


@settings(max_examples=60, deadline=None)
@given(n=st.integers(1, 300), h=st.floats(0.01, 0.99))
def test_small_caps_shrink_with_dimension(n, h):
    assert cap_fraction_exact(CapQuery(n + 1, 1.0, h)) <= cap_fraction_exact(CapQuery(n, 1.0, h)) + 1e-15


# ---- cap bound ---------------------------------------------------------------


def test_cap_bound_worked_values():
    # frozen from 30-digit evaluations of 0.5 * (1 - (1 - h)^2)^(n/2)
    assert cap_fraction_bound(CapQuery(10000, 1.0, 0.95)) == pytest.approx(1.834390523972894e-06, rel=1e-10)
    assert cap_fraction_bound(CapQuery(3, 1.0, 0.5)) == pytest.approx(0.3247595264191645, rel=1e-13)
    assert cap_fraction_bound(CapQuery(3, 1.0, 0.5)) >= cap_fraction_exact(CapQuery(3, 1.0, 0.5))
    assert cap_fraction_bound(CapQuery(77, 1.0, 1.0)) == pytest.approx(0.5, abs=1e-15)


def test_cap_bound_log_space_survives_huge_n():
    lg = log_cap_fraction_bound(CapQuery(10**7, 1.0, 0.5))
    assert math.isfinite(lg)
    assert lg == pytest.approx(math.log(0.5) + 0.5e7 * math.log(0.75), rel=1e-14)


def test_cap_bound_domain():
    with pytest.raises(ValueError):
        cap_fraction_bound(CapQuery(3, 1.0, 1.5))
    with pytest.raises(ValueError):
        cap_fraction_bound(CapQuery(3, 1.0, 0.0))


@settings(max_examples=100, deadline=None)
@given(n=st.integers(1, 2000), rel=st.floats(1e-3, 1.0), r=st.floats(0.1, 10.0))
def test_cap_bound_dominates_exact(n, rel, r):
    q = CapQuery(n, r, rel * r)
    assert cap_fraction_bound(q) >= cap_fraction_exact(q) * (1 - 1e-12)


# ---- samplers ----------------------------------------------------------------


def test_ball_samples_stay_inside():
    rng = np.random.default_rng(0)
    for n, r in [(1, 1.0), (3, 2.0), (200, 0.5)]:
        c = np.arange(n, dtype=float)
        pts = sample_uniform_ball(rng, BallSpec(c, r), 5000)
        assert pts.shape == (5000, n)
        assert np.all(np.linalg.norm(pts - c, axis=1) <= r)


def test_single_draw_shape():
    x = sample_uniform_ball(np.random.default_rng(1), BallSpec.centered(4))
    assert x.shape == (4,)


def test_one_dimensional_ball_is_uniform_interval():
    pts = sample_uniform_ball(np.random.default_rng(2), BallSpec.centered(1), 100_000)[:, 0]
    sigma = math.sqrt(1 / 3 / pts.size)
    assert abs(pts.mean()) < 3 * sigma


def test_radial_distribution():
    m = 1_000_000
    pts = sample_uniform_ball(np.random.default_rng(3), BallSpec.centered(50, 2.0), m)
    frac = np.mean(np.linalg.norm(pts, axis=1) <= 1.8)
    p = 0.9**50
    assert abs(frac - p) < 3 * math.sqrt(p * (1 - p) / m)


def test_half_disc_centroid():
    m = 100_000
    pts = sample_uniform_half_ball(np.random.default_rng(4), BallSpec.centered(2), basis_vector(2), 1, m)
    assert np.all(pts[:, 0] >= 0)
    # std of x1 on the half disc: E[x1^2] = 1/4
    mu = 4 / (3 * math.pi)
    sd = math.sqrt(0.25 - mu * mu)
    assert abs(pts[:, 0].mean() - mu) < 3 * sd / math.sqrt(m)


def test_half_ball_negative_side_and_offset_center():
    c = np.array([0.5, -1.0, 2.0])
    u = np.array([0.0, 0.6, 0.8])
    pts = sample_uniform_half_ball(np.random.default_rng(5), BallSpec(c, 0.7), u, -1, 2000)
    assert np.all((pts - c) @ u <= 0)
    assert np.all(np.linalg.norm(pts - c, axis=1) <= 0.7 + 1e-15)


def test_half_ball_rejects_non_unit_normal():
    with pytest.raises(ValueError):
        sample_uniform_half_ball(np.random.default_rng(0), BallSpec.centered(2), np.array([1.0, 1e-5]))


def test_axis_coordinate_matches_full_vectors():
    from scipy import stats

    n = 7
    a = sample_ball_axis_coordinate(np.random.default_rng(6), n, 1.0, 20_000)
    b = sample_uniform_ball(np.random.default_rng(7), BallSpec.centered(n), 20_000)[:, 0]
    assert stats.ks_2samp(a, b).pvalue > 0.01
    assert np.all(np.abs(a) <= 1.0)


def test_sampler_is_seed_deterministic():
    a = sample_uniform_ball(np.random.default_rng(9), BallSpec.centered(5), 10)
    b = sample_uniform_ball(np.random.default_rng(9), BallSpec.centered(5), 10)
    np.testing.assert_array_equal(a, b)
