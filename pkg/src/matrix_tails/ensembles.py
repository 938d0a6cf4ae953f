"""Random matrix sums used as test beds, with keyed sampling and exact supports.

Every draw is keyed by ``(seed, trial, summand)`` through a counter-based
generator, so a trial's realization is bitwise reproducible no matter how the
trials are chunked or scheduled.
"""

import math
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional

import numpy as np

from . import _philox
from .errors import NotEnumerable, SpecInvalid, SupportTooLarge
from .io import family_from_dict, family_to_dict
from .linalg import RECTANGULAR, SELF_ADJOINT, MatrixFamily, unit_matrix

__all__ = [
    "TAGS",
    "EnsembleSpec",
    "SampleBatch",
    "Support",
    "SummandMoments",
    "sample_sum",
    "realize",
    "enumerate_support",
    "summand_supports",
    "summand_moments",
    "nonuniform_decompose",
    "goe_family",
    "diag_family",
    "MAX_SUPPORT",
]

TAGS = (
    "gaussian_series",
    "rademacher_series",
    "nonuniform_gaussian",
    "goe",
    "diag_gaussian",
    "coupon",
    "rank_one_psd",
    "sign_modulated",
    "finite_support",
)
GAUSSIAN_TAGS = ("gaussian_series", "nonuniform_gaussian", "goe", "diag_gaussian")
SIGN_TAGS = ("rademacher_series", "sign_modulated")
ZERO_MEAN_TAGS = GAUSSIAN_TAGS + SIGN_TAGS

MAX_SUPPORT = 1 << 20

# distinct counter streams per kind of draw
_STREAM_NORMAL = 1
_STREAM_SIGN = 2
_STREAM_INDEX = 3


class Support(NamedTuple):
    """Finite distribution: outcomes of shape (m, d, d) and probabilities (m,)."""

    matrices: np.ndarray
    probs: np.ndarray


def goe_family(d):
    """Coefficients ``E_jk + E_kj`` for ``j <= k`` (diagonal terms are ``2 E_jj``)."""
    members = []
    for j in range(d):
        for k in range(j, d):
            members.append(unit_matrix(d, j, k) + unit_matrix(d, k, j))
    return MatrixFamily.self_adjoint(members, label=f"goe{d}")


def diag_family(d):
    return MatrixFamily.self_adjoint([unit_matrix(d, k, k) for k in range(d)], label=f"diag{d}")


def nonuniform_decompose(B):
    """Write ``Gamma * B`` (entrywise) as a Gaussian series.

    Returns the rectangular family ``{b_jk E_jk}`` over the nonzero entries of
    B, and ``sigma2 = max(max_j ||row_j||^2, max_k ||col_k||^2)``.
    """
    B = np.atleast_2d(np.asarray(B, dtype=np.float64))
    d1, d2 = B.shape
    rows, cols = np.nonzero(B)
    members = np.zeros((rows.size, d1, d2))
    members[np.arange(rows.size), rows, cols] = B[rows, cols]
    fam = MatrixFamily(RECTANGULAR, members, label="nonuniform", allow_empty=True)
    sq = B * B
    sigma2 = float(max(sq.sum(axis=1).max(), sq.sum(axis=0).max()))
    return fam, sigma2


@dataclass
class EnsembleSpec:
    """Tagged description of a random sum ``Y = sum_k X_k``.

    ``dim`` is the dimension of the realization (``d1 + d2`` for the dilated
    nonuniform Gaussian matrix). ``support`` lists one finite distribution per
    summand for ``finite_support``.
    """

    tag: str
    dim: int
    n_summands: int
    coefficients: Optional[MatrixFamily] = None
    support: Optional[List[Support]] = None
    label: str = ""
    matrix: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        if self.tag not in TAGS:
            raise SpecInvalid(f"unknown tag {self.tag!r}")
        if int(self.dim) != self.dim or self.dim < 1:
            raise SpecInvalid("dim must be a positive integer")
        if int(self.n_summands) != self.n_summands or self.n_summands < 0:
            raise SpecInvalid("n_summands must be a nonnegative integer")
        needs_family = self.tag in ("gaussian_series", "nonuniform_gaussian") + SIGN_TAGS
        if needs_family and self.coefficients is None:
            raise SpecInvalid(f"{self.tag} needs a coefficient family")
        if self.coefficients is not None:
            fam = self.coefficients
            want = RECTANGULAR if self.tag == "nonuniform_gaussian" else SELF_ADJOINT
            if fam.kind != want:
                raise SpecInvalid(f"{self.tag} needs a {want} family")
            d = sum(fam.shape) if want == RECTANGULAR else fam.shape[0]
            if d != self.dim or len(fam) != self.n_summands:
                raise SpecInvalid("coefficient family disagrees with dim / n_summands")
        if self.tag == "finite_support":
            self._check_support()

    def _check_support(self):
        if self.support is None or len(self.support) != self.n_summands:
            raise SpecInvalid("finite_support needs one distribution per summand")
        checked = []
        for mats, probs in self.support:
            mats = np.asarray(mats, dtype=np.float64)
            probs = np.asarray(probs, dtype=np.float64)
            if mats.ndim != 3 or mats.shape[1:] != (self.dim, self.dim):
                raise SpecInvalid("support outcomes must be dim x dim matrices")
            if probs.shape != (mats.shape[0],) or np.any(probs < 0):
                raise SpecInvalid("support probabilities must be nonnegative, one per outcome")
            if abs(probs.sum() - 1.0) > 1e-12:
                raise SpecInvalid(f"support probabilities sum to {probs.sum()!r}, not 1")
            checked.append(Support(0.5 * (mats + np.swapaxes(mats, 1, 2)), probs))
        self.support = checked

    # -- constructors -----------------------------------------------------

    @classmethod
    def gaussian_series(cls, family, label=""):
        return cls("gaussian_series", family.shape[0], len(family), family, label=label)

    @classmethod
    def rademacher_series(cls, family, label=""):
        return cls("rademacher_series", family.shape[0], len(family), family, label=label)

    @classmethod
    def sign_modulated(cls, family, label=""):
        return cls("sign_modulated", family.shape[0], len(family), family, label=label)

    @classmethod
    def nonuniform_gaussian(cls, B, label=""):
        B = np.atleast_2d(np.asarray(B, dtype=np.float64))
        fam, _ = nonuniform_decompose(B)
        return cls("nonuniform_gaussian", sum(B.shape), len(fam), fam, label=label, matrix=B)

    @classmethod
    def goe(cls, d):
        return cls("goe", d, d * (d + 1) // 2, goe_family(d), label=f"goe{d}")

    @classmethod
    def diag_gaussian(cls, d):
        return cls("diag_gaussian", d, d, diag_family(d), label=f"diag{d}")

    @classmethod
    def coupon(cls, d, n):
        return cls("coupon", d, n, label=f"coupon{d}x{n}")

    @classmethod
    def rank_one_psd(cls, d, n):
        return cls("rank_one_psd", d, n, label=f"rank_one{d}x{n}")

    @classmethod
    def finite_support(cls, supports, label=""):
        supports = [Support(np.asarray(m, dtype=np.float64), np.asarray(p, dtype=np.float64))
                    for m, p in supports]
        if not supports:
            raise SpecInvalid("finite_support needs at least one summand")
        d = supports[0].matrices.shape[-1]
        return cls("finite_support", d, len(supports), support=supports, label=label)

    # -- derived quantities -----------------------------------------------

    @property
    def zero_mean(self):
        return self.tag in ZERO_MEAN_TAGS

    def variance(self):
        """Variance parameter of a series ensemble (rect mode for nonuniform)."""
        from .linalg import variance_parameter

        if self.tag == "nonuniform_gaussian":
            return variance_parameter(self.coefficients, "rect")
        if self.coefficients is None:
            return float(np.linalg.eigvalsh(summand_moments(self).second)[-1])
        return variance_parameter(self.coefficients, "sa")

    # -- serialization ----------------------------------------------------

    def to_dict(self):
        out = {"tag": self.tag, "dim": self.dim, "n_summands": self.n_summands,
               "label": self.label}
        if self.tag == "nonuniform_gaussian":
            out["matrix"] = self.matrix.tolist()
        elif self.coefficients is not None and self.tag not in ("goe", "diag_gaussian"):
            out["coefficients"] = family_to_dict(self.coefficients)
        if self.support is not None:
            out["support"] = [{"matrices": s.matrices.tolist(), "probs": s.probs.tolist()}
                              for s in self.support]
        return out

    @classmethod
    def from_dict(cls, data):
        try:
            tag = data["tag"]
            if tag == "goe":
                return cls.goe(int(data["dim"]))
            if tag == "diag_gaussian":
                return cls.diag_gaussian(int(data["dim"]))
            if tag == "coupon":
                return cls.coupon(int(data["dim"]), int(data["n_summands"]))
            if tag == "rank_one_psd":
                return cls.rank_one_psd(int(data["dim"]), int(data["n_summands"]))
            if tag == "nonuniform_gaussian":
                return cls.nonuniform_gaussian(data["matrix"], label=data.get("label", ""))
            if tag == "finite_support":
                return cls.finite_support(
                    [(s["matrices"], s["probs"]) for s in data["support"]],
                    label=data.get("label", ""))
            fam = family_from_dict(data["coefficients"])
            return cls(tag, fam.shape[0], len(fam), fam, label=data.get("label", ""))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, SpecInvalid):
                raise
            raise SpecInvalid(f"malformed ensemble spec: {exc}") from exc


@dataclass
class SampleBatch:
    """Realizations ``Y`` for trials ``start, ..., start + trials - 1``."""

    realizations: np.ndarray
    seed: int
    spec: EnsembleSpec
    start: int = 0

    def __len__(self):
        return self.realizations.shape[0]


def _weighted_sum(weights, members):
    # Accumulate term by term: elementwise ops give results independent of batch size.
    T = weights.shape[0]
    out = np.zeros((T,) + members.shape[1:])
    for k in range(members.shape[0]):
        out += weights[:, k, None, None] * members[k]
    return out


def _dilate_batch(Z):
    T, d1, d2 = Z.shape
    S = np.zeros((T, d1 + d2, d1 + d2))
    S[:, :d1, d1:] = Z
    S[:, d1:, :d1] = np.swapaxes(Z, 1, 2)
    return S


def realize(spec: EnsembleSpec, seed, trial_indices):
    """Realizations for explicit trial indices, shape (len(trial_indices), d, d)."""
    idx = np.asarray(trial_indices, dtype=np.int64)
    if np.any(idx < 0):
        raise SpecInvalid("trial indices must be nonnegative")
    T, d, n = idx.size, spec.dim, spec.n_summands
    tag = spec.tag
    if tag == "goe":
        g = _philox.keyed_normals(seed, _STREAM_NORMAL, idx, n, 1)[..., 0]
        W = np.zeros((T, d, d))
        ju, ku = np.triu_indices(d)
        W[:, ju, ku] = g
        W[:, ku, ju] = g
        diag = np.arange(d)
        W[:, diag, diag] = 2.0 * W[:, diag, diag]
        return W
    if tag == "diag_gaussian":
        g = _philox.keyed_normals(seed, _STREAM_NORMAL, idx, n, 1)[..., 0]
        Y = np.zeros((T, d, d))
        Y[:, np.arange(d), np.arange(d)] = g
        return Y
    if tag in ("gaussian_series", "nonuniform_gaussian"):
        g = _philox.keyed_normals(seed, _STREAM_NORMAL, idx, n, 1)[..., 0]
        Z = _weighted_sum(g, spec.coefficients.members)
        return _dilate_batch(Z) if tag == "nonuniform_gaussian" else Z
    if tag in SIGN_TAGS:
        eps = _philox.keyed_signs(seed, _STREAM_SIGN, idx, n)
        return _weighted_sum(eps, spec.coefficients.members)
    if tag == "coupon":
        u = _philox.keyed_uniforms(seed, _STREAM_INDEX, idx, n, 1)[..., 0]
        j = np.minimum((u * d).astype(np.int64), d - 1)
        counts = np.zeros((T, d))
        rows = np.arange(T)
        for k in range(n):
            counts[rows, j[:, k]] += 1.0
        Y = np.zeros((T, d, d))
        Y[:, np.arange(d), np.arange(d)] = counts
        return Y
    if tag == "rank_one_psd":
        z = _philox.keyed_normals(seed, _STREAM_NORMAL, idx, n, d)
        u = z / np.linalg.norm(z, axis=2, keepdims=True)
        Y = np.zeros((T, d, d))
        for k in range(n):
            Y += u[:, k, :, None] * u[:, k, None, :]
        return Y
    if tag == "finite_support":
        u = _philox.keyed_uniforms(seed, _STREAM_INDEX, idx, n, 1)[..., 0]
        Y = np.zeros((T, d, d))
        for k, (mats, probs) in enumerate(spec.support):
            cum = np.cumsum(probs)
            choice = np.minimum(np.searchsorted(cum, u[:, k], side="right"), len(probs) - 1)
            Y += mats[choice]
        return Y
    raise SpecInvalid(f"cannot sample tag {tag!r}")


def sample_sum(spec: EnsembleSpec, trials, seed, start=0):
    """Draw ``trials`` realizations of the sum, keyed by ``(seed, trial, summand)``."""
    if int(trials) != trials or trials < 1:
        raise SpecInvalid("trials must be a positive integer")
    idx = np.arange(start, start + trials)
    return SampleBatch(realize(spec, seed, idx), int(seed), spec, int(start))


def summand_supports(spec: EnsembleSpec):
    """Per-summand finite distributions for enumerable tags."""
    d = spec.dim
    if spec.tag in SIGN_TAGS:
        return [Support(np.stack([A, -A]), np.array([0.5, 0.5])) for A in spec.coefficients]
    if spec.tag == "coupon":
        units = np.stack([unit_matrix(d, j, j) for j in range(d)])
        return [Support(units, np.full(d, 1.0 / d)) for _ in range(spec.n_summands)]
    if spec.tag == "finite_support":
        return list(spec.support)
    raise NotEnumerable(f"tag {spec.tag!r} has continuous support")


def enumerate_support(spec: EnsembleSpec):
    """Exact joint distribution of the sum as the product of summand supports."""
    supports = summand_supports(spec)
    count = math.prod(len(s.probs) for s in supports)
    if count > MAX_SUPPORT:
        raise SupportTooLarge(f"{count} outcomes exceed the cap of {MAX_SUPPORT}")
    d = spec.dim
    mats = np.zeros((1, d, d))
    probs = np.ones(1)
    for s in supports:
        mats = (mats[:, None] + s.matrices[None]).reshape(-1, d, d)
        probs = (probs[:, None] * s.probs[None]).reshape(-1)
    return Support(mats, probs)


class SummandMoments(NamedTuple):
    """``sum_k E X_k``, ``sum_k E X_k^2`` and ``max_k sup lambda_max(X_k)``."""

    mean: np.ndarray
    second: np.ndarray
    R: float


def summand_moments(spec: EnsembleSpec):
    d = spec.dim
    if spec.tag == "rank_one_psd":
        # E uu^T = I/d and (uu^T)^2 = uu^T for a uniform unit vector u
        I = np.eye(d) * (spec.n_summands / d)
        return SummandMoments(I, I.copy(), 1.0)
    if spec.tag in GAUSSIAN_TAGS:
        fam = spec.coefficients
        if fam.kind == RECTANGULAR:
            fam = fam.dilated()
        second = np.einsum("kij,kjl->il", fam.members, fam.members)
        return SummandMoments(np.zeros((d, d)), second, math.inf)
    mean = np.zeros((d, d))
    second = np.zeros((d, d))
    R = -math.inf
    for mats, probs in summand_supports(spec):
        mean += np.einsum("m,mij->ij", probs, mats)
        second += np.einsum("m,mij,mjl->il", probs, mats, mats)
        R = max(R, float(np.linalg.eigvalsh(mats)[:, -1].max()))
    return SummandMoments(mean, second, R)
