"""Dense symmetric linear algebra: matrix functions, semidefinite order, dilations.

Self-adjoint matrices are real symmetric ``numpy`` arrays. Inputs are
symmetrized as ``(A + A.T) / 2`` wherever symmetry is assumed, so that
``A[i, j] == A[j, i]`` holds exactly afterwards.
"""

from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Union

import numpy as np

from .errors import (
    DimensionMismatch,
    KindMismatch,
    NonFinite,
    NotPositiveDefinite,
)

__all__ = [
    "EigenPair",
    "Extremes",
    "MatrixFamily",
    "symmetrize",
    "eigh",
    "matrix_function",
    "expm",
    "logm",
    "extremes",
    "psd_gap",
    "psd_order_leq",
    "default_psd_tol",
    "dilation",
    "variance_parameter",
    "weak_variance_estimate",
    "weak_variance_objective",
    "schur_product",
    "trace_exp",
    "log_trace_exp",
    "unit_matrix",
]

SELF_ADJOINT = "self_adjoint"
RECTANGULAR = "rectangular"


class EigenPair(NamedTuple):
    values: np.ndarray
    vectors: np.ndarray


class Extremes(NamedTuple):
    lambda_min: float
    lambda_max: float
    spectral_norm: float


def symmetrize(A):
    """Return ``(A + A.T) / 2`` as a float array; A must be square."""
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
        raise DimensionMismatch(f"expected a nonempty square matrix, got shape {A.shape}")
    return 0.5 * (A + A.T)


def unit_matrix(d, j, k):
    """The matrix unit E_jk of dimension d (zero-based indices)."""
    E = np.zeros((d, d))
    E[j, k] = 1.0
    return E


def eigh(A):
    """Eigendecomposition with ascending eigenvalues and orthonormal columns."""
    values, vectors = np.linalg.eigh(symmetrize(A))
    return EigenPair(values, vectors)


_NAMED = {
    "identity": lambda x: x,
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "square": np.square,
    "cosh": np.cosh,
}


def matrix_function(A, f: Union[str, Callable]):
    """Apply a scalar function to a symmetric matrix through its eigenvalues.

    Parameters
    ----------
    A : array_like, shape (d, d)
        Symmetric matrix.
    f : str or callable
        One of ``"identity"``, ``"exp"``, ``"log"``, ``"sqrt"``, ``"square"``,
        ``"cosh"``, or a vectorized callable on real arrays.

    Returns
    -------
    ndarray
        ``Q f(Lambda) Q^T`` where ``A = Q Lambda Q^T``.

    Raises
    ------
    NotPositiveDefinite
        For the logarithm when ``lambda_min(A) <= 1e-12 * max(1, lambda_max)``.
    NonFinite
        When ``f`` yields NaN or infinity on the spectrum.
    """
    is_log = f == "log" or f is np.log
    func = _NAMED[f] if isinstance(f, str) else f
    lam, Q = eigh(A)
    if is_log:
        pd_tol = 1e-12 * max(1.0, lam[-1])
        if lam[0] <= pd_tol:
            raise NotPositiveDefinite(
                f"matrix logarithm needs lambda_min > {pd_tol:.3g}, got {lam[0]:.3g}"
            )
    with np.errstate(all="ignore"):
        flam = np.asarray(func(lam), dtype=np.float64)
    if not np.all(np.isfinite(flam)):
        raise NonFinite("function is not finite on the spectrum")
    out = (Q * flam) @ Q.T
    return 0.5 * (out + out.T)


def expm(A):
    return matrix_function(A, "exp")


def logm(A):
    return matrix_function(A, "log")


def trace_exp(A):
    return float(np.exp(np.linalg.eigvalsh(symmetrize(A))).sum())


def log_trace_exp(A):
    """``log tr exp(A)`` evaluated without overflow."""
    lam = np.linalg.eigvalsh(symmetrize(A))
    top = lam[-1]
    return float(top + np.log(np.exp(lam - top).sum()))


def extremes(A):
    lam = np.linalg.eigvalsh(symmetrize(A))
    lo, hi = float(lam[0]), float(lam[-1])
    return Extremes(lo, hi, max(abs(lo), abs(hi)))


def _check_same_shape(A, B):
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if A.shape != B.shape:
        raise DimensionMismatch(f"shapes differ: {A.shape} vs {B.shape}")
    return A, B


def default_psd_tol(A, B):
    """Relative tolerance ``1e-9 * max(1, ||A|| + ||B||)``."""
    scale = np.linalg.norm(A, 2) + np.linalg.norm(B, 2)
    return 1e-9 * max(1.0, float(scale))


def psd_gap(A, B):
    """``lambda_min(B - A)``; nonnegative exactly when ``A <= B``."""
    A, B = _check_same_shape(A, B)
    return float(np.linalg.eigvalsh(symmetrize(B - A))[0])


def psd_order_leq(A, B, tol=None):
    """Semidefinite order test ``A <= B`` up to ``tol``.

    ``tol`` defaults to :func:`default_psd_tol`.
    """
    A, B = _check_same_shape(A, B)
    if tol is None:
        tol = default_psd_tol(A, B)
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    return psd_gap(A, B) >= -tol


def dilation(B):
    """Self-adjoint dilation ``[[0, B], [B^T, 0]]`` of a rectangular matrix."""
    B = np.atleast_2d(np.asarray(B, dtype=np.float64))
    d1, d2 = B.shape
    S = np.zeros((d1 + d2, d1 + d2))
    S[:d1, d1:] = B
    S[d1:, :d1] = B.T
    return S


def schur_product(X, Y):
    """Entrywise (Hadamard) product."""
    X, Y = _check_same_shape(X, Y)
    return X * Y


@dataclass
class MatrixFamily:
    """An ordered list of fixed coefficient matrices.

    ``members`` is stored as an array of shape ``(n, rows, cols)``. Self-adjoint
    members are symmetrized on construction.
    """

    kind: str
    members: np.ndarray
    label: str = ""
    allow_empty: bool = field(default=False, repr=False)

    def __post_init__(self):
        if self.kind not in (SELF_ADJOINT, RECTANGULAR):
            raise KindMismatch(f"unknown family kind {self.kind!r}")
        members = np.asarray(self.members, dtype=np.float64)
        if members.ndim == 2:
            members = members[None]
        if members.ndim != 3:
            raise DimensionMismatch("members must have shape (n, rows, cols)")
        if members.shape[0] == 0 and not self.allow_empty:
            raise DimensionMismatch("family must be nonempty")
        if self.kind == SELF_ADJOINT:
            if members.shape[1] != members.shape[2]:
                raise DimensionMismatch("self-adjoint members must be square")
            members = 0.5 * (members + np.swapaxes(members, 1, 2))
        self.members = members

    @classmethod
    def self_adjoint(cls, members, label=""):
        return cls(SELF_ADJOINT, np.asarray(list(members), dtype=np.float64), label)

    @classmethod
    def rectangular(cls, members, label=""):
        return cls(RECTANGULAR, np.asarray(list(members), dtype=np.float64), label)

    def __len__(self):
        return self.members.shape[0]

    def __iter__(self):
        return iter(self.members)

    def __getitem__(self, k):
        return self.members[k]

    @property
    def shape(self):
        return self.members.shape[1:]

    def dilated(self):
        """The self-adjoint family of dilations of a rectangular family."""
        if self.kind != RECTANGULAR:
            raise KindMismatch("only rectangular families are dilated")
        d1, d2 = self.shape
        S = np.zeros((len(self), d1 + d2, d1 + d2))
        S[:, :d1, d1:] = self.members
        S[:, d1:, :d1] = np.swapaxes(self.members, 1, 2)
        return MatrixFamily(SELF_ADJOINT, S, self.label, allow_empty=True)


def _norm_psd(M):
    return float(max(np.linalg.eigvalsh(symmetrize(M))[-1], 0.0))


def variance_parameter(fam: MatrixFamily, mode="sa"):
    """Variance scale of a coefficient family.

    ``mode="sa"`` gives ``||sum A_k^2||``; ``"rect"`` gives
    ``max(||sum B_k B_k^T||, ||sum B_k^T B_k||)``; ``"aw"`` gives
    ``sum ||A_k^2||``.
    """
    if mode not in ("sa", "rect", "aw"):
        raise ValueError(f"unknown mode {mode!r}")
    want = RECTANGULAR if mode == "rect" else SELF_ADJOINT
    if fam.kind != want:
        raise KindMismatch(f"mode {mode!r} needs a {want} family, got {fam.kind}")
    M = fam.members
    if mode == "rect":
        if len(fam) == 0:
            return 0.0
        rows = np.einsum("kij,klj->il", M, M)
        cols = np.einsum("kji,kjl->il", M, M)
        return max(_norm_psd(rows), _norm_psd(cols))
    if mode == "sa":
        return _norm_psd(np.einsum("kij,kjl->il", M, M))
    return float(sum(np.linalg.norm(A, 2) ** 2 for A in M))


def weak_variance_objective(fam: MatrixFamily, u, v):
    """``sum_k (u^T A_k v)^2`` for unit vectors u, v."""
    return float(np.sum(np.einsum("i,kij,j->k", u, fam.members, v) ** 2))


def _best_partner(fam, u):
    # sum_k A_k u u^T A_k = G G^T with G = [A_1 u, ..., A_n u]
    G = fam.members @ u
    lam, Q = np.linalg.eigh(G.T @ G)
    return lam[-1], Q[:, -1]


def weak_variance_estimate(fam: MatrixFamily, restarts=8, seed=0, max_iter=500):
    """Lower estimate of the weak variance by alternating maximization.

    Each restart fixes ``u``, takes the best ``v`` (top eigenvector of
    ``sum_k A_k u u^T A_k``), swaps roles, and stops once the value changes by
    less than 1e-10 relatively. The returned value is the objective evaluated
    at an explicit pair of unit vectors, so it never exceeds the true supremum.
    """
    if fam.kind != SELF_ADJOINT:
        raise KindMismatch("weak variance needs a self-adjoint family")
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    rng = np.random.default_rng(seed)
    d = fam.shape[0]
    best = 0.0
    for _ in range(restarts):
        u = rng.standard_normal(d)
        u /= np.linalg.norm(u)
        value = 0.0
        for _ in range(max_iter):
            new_value, v = _best_partner(fam, u)
            u, v = v, u
            if abs(new_value - value) <= 1e-10 * max(abs(new_value), 1e-300):
                value = new_value
                break
            value = new_value
        best = max(best, weak_variance_objective(fam, u, v))
    return best
