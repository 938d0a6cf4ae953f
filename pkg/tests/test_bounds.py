import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from matrix_tails import bounds as B
from matrix_tails.errors import DomainError, EmptyDomain, SideDomainError, ThetaOutOfDomain


def _mp_divergence(a, u):
    a, u = mpmath.mpf(a), mpmath.mpf(u)
    return float(a * mpmath.log(a / u) + (1 - a) * mpmath.log((1 - a) / (1 - u)))


def test_binary_divergence_values():
    assert B.binary_divergence(0.5, 0.5) == 0.0
    assert B.binary_divergence(0.0, 0.3) == pytest.approx(-math.log(0.7), rel=1e-15)
    assert B.binary_divergence(0.9, 0.5) == pytest.approx(0.368064, abs=1e-6)
    assert B.binary_divergence(0.9, 0.5) == pytest.approx(_mp_divergence(0.9, 0.5), rel=1e-14)
    assert B.binary_divergence(1.0, 1.0) == 0.0
    with pytest.raises(DomainError):
        B.binary_divergence(1.2, 0.5)
    with pytest.raises(DomainError):
        B.binary_divergence(0.5, 0.0)


def test_bennett_h_values():
    assert B.bennett_h(0.0) == 0.0
    assert B.bennett_h(1.0) == pytest.approx(2 * math.log(2) - 1, abs=1e-12)
    assert B.bennett_h(3.0) == pytest.approx(4 * math.log(4) - 3, rel=1e-14)
    assert B.bennett_h(3.0) >= 2.25
    u = 3e-5
    exact = float((1 + mpmath.mpf(u)) * mpmath.log1p(mpmath.mpf(u)) - u)
    assert B.bennett_h(u) == pytest.approx(exact, rel=1e-12)
    with pytest.raises(DomainError):
        B.bennett_h(-0.1)


def test_h_dominates_bernstein_exponent():
    u = np.linspace(0, 100, 2001)
    assert np.all(B.bennett_h(u) >= (u * u / 2) / (1 + u / 3) - 1e-15)


def test_gaussian_series_examples():
    assert B.gaussian_series_tail(1, 2, 0) == 2
    assert B.gaussian_series_tail(1, 2, 2) == pytest.approx(0.270671, abs=1e-6)
    for d in (1, 4, 17):
        t = math.sqrt(2 * math.log(2 * d))
        assert B.gaussian_series_tail(1, d, t, two_sided=True) == pytest.approx(1.0, rel=1e-14)
    with pytest.raises(DomainError):
        B.gaussian_series_tail(0, 2, 1)


def test_rectangular_series_examples():
    assert B.rectangular_series_tail(1, 1, 1, 1.3) == B.gaussian_series_tail(1, 2, 1.3)
    assert B.rectangular_series_tail(4, 3, 2, 0) == 5
    # B = I_2 has sigma^2 = 1 and d1 + d2 = 4
    assert B.rectangular_series_tail(1, 2, 2, 3) == pytest.approx(float(4 * mpmath.exp(-4.5)), rel=1e-14)


def test_chernoff_examples():
    assert B.chernoff_divergence(10, 3, 0.5, 0.5, "upper") == 3
    up = B.chernoff_divergence(10, 3, 0.5, 0.9, "upper")
    assert up == pytest.approx(3 * math.exp(-10 * _mp_divergence(0.9, 0.5)), rel=1e-13)
    assert B.chernoff_divergence(10, 3, 0.5, 0.1, "lower") == pytest.approx(up, rel=1e-12)
    with pytest.raises(SideDomainError):
        B.chernoff_divergence(10, 3, 0.5, 0.1, "upper")
    with pytest.raises(SideDomainError):
        B.chernoff_divergence(10, 3, 0.5, 0.9, "lower")


def test_chernoff_multiplicative_examples():
    for side in ("lower", "upper"):
        assert B.chernoff_multiplicative(7, 1, 3, 0.0, side) == 3
    oracle = float(2 * (mpmath.exp(0.5) / mpmath.mpf(1.5) ** 1.5) ** 10)
    assert B.chernoff_multiplicative(10, 1, 2, 0.5, "upper") == pytest.approx(oracle, rel=1e-13)
    assert B.chernoff_multiplicative(10, 1, 2, 1.0, "lower") == pytest.approx(2 * math.exp(-10))
    assert B.chernoff_multiplicative(6, 2, 2, 1.0, "lower", simplified=True) == pytest.approx(2 * math.exp(-1.5))
    # below t = e the simplified upper form falls back to the full form
    full = B.chernoff_multiplicative(4, 1, 2, 1.0, "upper")
    assert B.chernoff_multiplicative(4, 1, 2, 1.0, "upper", simplified=True) == full
    t = 4.0
    assert B.chernoff_multiplicative(4, 1, 2, t - 1, "upper", simplified=True) == pytest.approx(
        2 * (math.e / t) ** (t * 4))
    with pytest.raises(DomainError):
        B.chernoff_multiplicative(4, 1, 2, 1.5, "lower")


@given(st.floats(0.01, 0.99), st.floats(0.0, 1.0), st.integers(1, 50), st.integers(1, 10))
@settings(max_examples=200, deadline=None)
def test_divergence_form_is_tighter(mu_bar, delta, n, d):
    mu = n * mu_bar
    lower = B.chernoff_divergence(n, d, mu_bar, (1 - delta) * mu_bar, "lower")
    assert lower <= B.chernoff_multiplicative(mu, 1, d, delta, "lower") * (1 + 1e-12)
    alpha = (1 + delta) * mu_bar
    if alpha <= 1:
        upper = B.chernoff_divergence(n, d, mu_bar, alpha, "upper")
        assert upper <= B.chernoff_multiplicative(mu, 1, d, delta, "upper") * (1 + 1e-12)


def test_bernstein_examples():
    res = B.bernstein_bounded_tail(1, 1, 1, 1)
    assert res.bennett == pytest.approx(0.67957, abs=1e-5)
    assert res.bernstein == pytest.approx(0.68729, abs=1e-5)
    assert res.split == pytest.approx(0.68729, abs=1e-5)
    assert B.bernstein_bounded_tail(2, 1, 3, 0) == (3, 3, 3)
    assert B.bernstein_bounded_tail(1, 1, 1, 4).split == pytest.approx(math.exp(-1.5))
    sub = B.bernstein_subexp_tail(1, 1, 1, 1)
    assert sub.main == pytest.approx(math.exp(-0.25)) and sub.split == pytest.approx(math.exp(-0.25))
    sub = B.bernstein_subexp_tail(1, 1, 2, 3)
    assert sub.main == pytest.approx(2 * math.exp(-9 / 8))
    assert sub.split == pytest.approx(2 * math.exp(-0.75))
    assert B.bernstein_rect_tail(2, 1, 2, 3, 2) == pytest.approx(5 * math.exp(-0.75))
    assert B.bernstein_rect_tail(2, 1, 2, 3, 0) == 5


def test_bernstein_chains_on_random_grid():
    rng = np.random.default_rng(11)
    sigma2 = rng.uniform(0.01, 10, 1000)
    R = rng.uniform(0.01, 5, 1000)
    d = rng.integers(1, 50, 1000)
    t = rng.uniform(0, 30, 1000)
    for s2, r, dd, tt in zip(sigma2, R, d, t):
        b = B.bernstein_bounded_tail(s2, r, int(dd), tt)
        assert b.bennett <= b.bernstein * (1 + 1e-12)
        assert b.bernstein <= b.split * (1 + 1e-12)
        e = B.bernstein_subexp_tail(s2, r, int(dd), tt)
        assert e.main <= e.split * (1 + 1e-12)


@given(st.floats(0.01, 10), st.floats(0.01, 5), st.integers(1, 20), st.floats(0, 30))
@settings(max_examples=200, deadline=None)
def test_bernstein_scale_equivariance(sigma2, R, d, t):
    a = B.bernstein_bounded_tail(sigma2, R, d, t)
    b = B.bernstein_bounded_tail(sigma2 / R**2, 1.0, d, t / R)
    for x, y in zip(a, b):
        assert x == pytest.approx(y, rel=1e-12, abs=1e-300)


def test_martingale_examples():
    assert B.azuma_tail(1, 2, 0) == 2
    assert B.azuma_tail(1, 2, 2) == pytest.approx(1.2131, abs=1e-4)
    assert B.azuma_tail(1, 2, 2, conditionally_symmetric=True) == pytest.approx(0.27067, abs=1e-5)
    assert B.azuma_tail(1, 2, 2, True) == B.gaussian_series_tail(1, 2, 2)
    assert B.mcdiarmid_tail(4, 3, 8) == pytest.approx(0.40601, abs=1e-5)
    assert B.mcdiarmid_tail(0.7, 5, 1.1) == B.azuma_tail(0.7, 5, 1.1)


def test_mean_brackets():
    lo, hi = B.expected_norm_bracket(1.0, 1)
    assert lo == 1.0 and hi == pytest.approx(float(mpmath.sqrt(2 * mpmath.log(2 * mpmath.e))), rel=1e-14)
    lo, hi = B.expected_norm_bracket(4.0, 1024)
    assert hi / lo == pytest.approx(float(mpmath.sqrt(2 * mpmath.log(2048 * mpmath.e))), rel=1e-14)
    d = 32
    assert B.expected_norm_bracket(d + 3, d)[1] == pytest.approx(
        math.sqrt((d + 3) * 2 * math.log(2 * math.e * d)))
    assert B.expected_max_bounds("bernstein", d=1, R=1, sigma=1) == 0
    assert B.expected_max_bounds("bernstein", d=3, R=1, sigma=2) == pytest.approx(
        max(2 * math.sqrt(math.log(3)), math.log(3)))
    assert B.expected_max_bounds("chernoff", 1.0, d=3, R=0, mu_max=10) == 10


def test_mgf_models():
    I = np.eye(3)
    assert np.allclose(B.log_mgf_bound(B.MgfModel("gaussian", I), 1.0), I / 2)
    m = B.MgfModel("bernstein_bounded", I)
    assert B.log_mgf_bound(m, 1e-5)[0, 0] / 1e-10 == pytest.approx(0.5, rel=1e-4)
    assert m.g(0.5) == pytest.approx(math.exp(0.5) - 1.5, rel=1e-14)
    sub = B.MgfModel("bernstein_subexp", I)
    with pytest.raises(ThetaOutOfDomain):
        sub.g(1.0)
    assert B.MgfModel("bernstein_subexp", I, scale=4).theta_domain == (0.0, 0.25)
    with pytest.raises(ValueError):
        B.MgfModel("gaussian", -I)


def _reflection_models(rng, d, n, kind):
    coeffs = rng.uniform(0.2, 2.0, n)
    models = []
    for c in coeffs:
        v = rng.standard_normal(d)
        v /= np.linalg.norm(v)
        A = c * (np.eye(d) - 2 * np.outer(v, v))
        models.append(B.MgfModel(kind, A @ A))
    return models, float(np.sum(coeffs**2))


def test_master_matches_gaussian_closed_form():
    rng = np.random.default_rng(5)
    models, sigma2 = _reflection_models(rng, 4, 3, "gaussian")
    for t in (0.5, 2.0, 5.0):
        res = B.master_tail_numeric(models, t)
        assert res.bound == pytest.approx(B.gaussian_series_tail(sigma2, 4, t), rel=1e-6)
        assert res.theta_star == pytest.approx(t / sigma2, abs=1e-4)


def test_master_t_zero_and_monotone():
    models, _ = _reflection_models(np.random.default_rng(6), 3, 2, "gaussian")
    assert B.master_tail_numeric(models, 0.0).bound == pytest.approx(3.0, rel=1e-6)
    vals = [B.master_tail_numeric(models, t).bound for t in np.linspace(0, 6, 13)]
    assert all(b <= a * (1 + 1e-12) for a, b in zip(vals, vals[1:]))


def test_master_subexp_respects_domain():
    model = B.MgfModel("bernstein_subexp", np.eye(2), scale=2.0)
    res = B.master_tail_numeric([model], 3.0)
    assert 0 < res.theta_star < 0.5
    assert res.bound <= B.bernstein_subexp_tail(1.0, 2.0, 2, 3.0).main * (1 + 1e-9)


def test_master_errors():
    with pytest.raises(EmptyDomain):
        B.master_tail_numeric([], 1.0)
    with pytest.raises(ValueError):
        B.master_tail_numeric([B.MgfModel("gaussian", np.eye(2)), B.MgfModel("gaussian", np.eye(3))], 1.0)


def test_bound_curve_clipping():
    c = B.BoundCurve([0.0, 1.0], [2.0, 0.5], "x", {"d": 2})
    assert c.clipped.tolist() == [1.0, 0.5]
    with pytest.raises(ValueError):
        B.BoundCurve([0.0], [-1.0], "x")
