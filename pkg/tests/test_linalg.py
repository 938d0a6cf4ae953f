import itertools

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from matrix_tails import linalg as L
from matrix_tails.ensembles import goe_family
from matrix_tails.errors import DimensionMismatch, KindMismatch, NonFinite, NotPositiveDefinite


def _sym(rng, d):
    G = rng.standard_normal((d, d))
    return 0.5 * (G + G.T)


sym_matrices = st.integers(1, 5).flatmap(
    lambda d: arrays(np.float64, (d, d), elements=st.floats(-3, 3)).map(lambda A: 0.5 * (A + A.T))
)


def test_expm_logm_match_scipy():
    rng = np.random.default_rng(0)
    for d in (1, 3, 6):
        A = _sym(rng, d)
        assert np.allclose(L.expm(A), scipy.linalg.expm(A), rtol=1e-12, atol=1e-12)
        P = A @ A + np.eye(d)
        assert np.allclose(L.logm(P), scipy.linalg.logm(P).real, atol=1e-11)


def test_matrix_function_named_and_callable_agree():
    A = _sym(np.random.default_rng(1), 4)
    assert np.allclose(L.matrix_function(A, "square"), A @ A)
    assert np.allclose(L.matrix_function(A, lambda x: x**2), A @ A)
    assert np.array_equal(L.matrix_function(A, "identity"), L.matrix_function(A, "identity").T)


def test_log_rejects_singular_and_nonfinite_is_reported():
    with pytest.raises(NotPositiveDefinite):
        L.logm(np.diag([1.0, 0.0]))
    with pytest.raises(NonFinite):
        L.matrix_function(np.diag([1000.0, 0.0]), "exp")


def test_symmetrize_requires_square():
    with pytest.raises(DimensionMismatch):
        L.symmetrize(np.zeros((2, 3)))


@given(sym_matrices)
@settings(max_examples=60, deadline=None)
def test_transfer_rule_and_extremes(A):
    lam = np.linalg.eigvalsh(A)
    ex = L.extremes(A)
    assert ex.lambda_min == pytest.approx(lam[0], abs=1e-12)
    assert ex.spectral_norm == pytest.approx(np.abs(lam).max(), abs=1e-12)
    # f(x) = x^2 + 1 >= 2x on the spectrum transfers to the semidefinite order
    assert L.psd_order_leq(2 * A, L.matrix_function(A, lambda x: x * x + 1.0))
    assert L.log_trace_exp(A) == pytest.approx(np.log(L.trace_exp(A)), rel=1e-12, abs=1e-12)


def test_psd_order_and_tolerance():
    A = np.diag([1.0, 2.0])
    assert L.psd_order_leq(A, A)
    assert not L.psd_order_leq(A, A - 1e-3 * np.eye(2))
    assert L.psd_order_leq(A, A - 1e-3 * np.eye(2), tol=1e-2)
    assert L.psd_gap(np.zeros((2, 2)), A) == pytest.approx(1.0)
    with pytest.raises(DimensionMismatch):
        L.psd_order_leq(np.eye(2), np.eye(3))


def test_dilation_spectrum_is_plus_minus_singular_values():
    rng = np.random.default_rng(2)
    Bm = rng.standard_normal((3, 5))
    s = np.linalg.svd(Bm, compute_uv=False)
    lam = np.linalg.eigvalsh(L.dilation(Bm))
    expected = np.sort(np.concatenate([s, -s, np.zeros(2)]))
    assert np.allclose(lam, expected, atol=1e-12)
    assert lam[-1] == pytest.approx(np.linalg.norm(Bm, 2))


def test_family_validation():
    with pytest.raises(DimensionMismatch):
        L.MatrixFamily.self_adjoint([])
    with pytest.raises(KindMismatch):
        L.MatrixFamily("hermitian", np.zeros((1, 2, 2)))
    fam = L.MatrixFamily.self_adjoint([np.array([[0.0, 1.0], [0.0, 0.0]])])
    assert np.array_equal(fam[0], fam[0].T)
    with pytest.raises(KindMismatch):
        L.variance_parameter(fam, "rect")


def test_variance_parameter_brute_force():
    rng = np.random.default_rng(3)
    members = [_sym(rng, 4) for _ in range(5)]
    fam = L.MatrixFamily.self_adjoint(members)
    total = np.zeros((4, 4))
    for A in members:
        total += A @ A
    assert L.variance_parameter(fam) == pytest.approx(np.linalg.norm(total, 2), rel=1e-12)
    aw = sum(np.linalg.norm(A @ A, 2) for A in members)
    assert L.variance_parameter(fam, "aw") == pytest.approx(aw, rel=1e-12)

    rect = L.MatrixFamily.rectangular([rng.standard_normal((2, 3)) for _ in range(4)])
    rows = sum(Bk @ Bk.T for Bk in rect)
    cols = sum(Bk.T @ Bk for Bk in rect)
    expected = max(np.linalg.norm(rows, 2), np.linalg.norm(cols, 2))
    assert L.variance_parameter(rect, "rect") == pytest.approx(expected, rel=1e-12)
    # the dilated family has the same variance parameter
    assert L.variance_parameter(rect.dilated()) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("d", [1, 2, 5, 8])
def test_goe_variance_is_d_plus_3(d):
    fam = goe_family(d)
    total = np.zeros((d, d))
    for A in fam:
        total += A @ A
    assert np.allclose(total, (d + 3) * np.eye(d), atol=0)
    assert L.variance_parameter(fam) == pytest.approx(d + 3, rel=1e-12)


def test_weak_variance_against_sphere_grid():
    rng = np.random.default_rng(4)
    fam = L.MatrixFamily.self_adjoint([_sym(rng, 2) for _ in range(3)])
    angles = np.linspace(0, np.pi, 721)
    circle = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    grid_best = max(L.weak_variance_objective(fam, u, v) for u, v in itertools.product(circle, circle))
    est = L.weak_variance_estimate(fam, restarts=4, seed=0)
    assert est >= grid_best - 1e-9
    assert est <= L.variance_parameter(fam) + 1e-12
    assert est <= grid_best + 1e-3


def test_schur_product():
    X = np.arange(4.0).reshape(2, 2)
    assert np.array_equal(L.schur_product(X, X), X * X)
