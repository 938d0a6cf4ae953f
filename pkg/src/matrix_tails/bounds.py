"""Closed-form tail bounds for sums of random matrices, and a numeric master bound.

All tail functions return the raw bound, which may exceed one. Functions whose
argument ``t`` is documented as array-like evaluate elementwise and return a
float for scalar input.
"""

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.special import rel_entr, xlogy

from .errors import DomainError, EmptyDomain, SideDomainError, ThetaOutOfDomain
from .linalg import log_trace_exp, symmetrize

__all__ = [
    "BoundCurve",
    "MgfModel",
    "MasterBound",
    "BernsteinBounded",
    "BernsteinSubexp",
    "binary_divergence",
    "bennett_h",
    "gaussian_series_tail",
    "rectangular_series_tail",
    "chernoff_divergence",
    "chernoff_multiplicative",
    "bernstein_bounded_tail",
    "bernstein_subexp_tail",
    "bernstein_rect_tail",
    "azuma_tail",
    "mcdiarmid_tail",
    "expected_norm_bracket",
    "expected_max_bounds",
    "log_mgf_bound",
    "master_tail_numeric",
    "MGF_KINDS",
]

THETA_MIN = 1e-6
THETA_MAX = 50.0
GRID_POINTS = 64


def _scalar_or_array(x):
    x = np.asarray(x, dtype=np.float64)
    return float(x) if x.ndim == 0 else x


def _check_positive(name, value):
    if not value > 0 or not math.isfinite(value):
        raise DomainError(f"{name} must be positive and finite, got {value}")


def _check_dim(d):
    if int(d) != d or d < 1:
        raise DomainError(f"dimension must be a positive integer, got {d}")


def _check_t(t):
    t = np.asarray(t, dtype=np.float64)
    if np.any(t < 0) or not np.all(np.isfinite(t)):
        raise DomainError("t must be finite and nonnegative")
    return t


@dataclass
class BoundCurve:
    """A bound evaluated on a grid; ``clipped`` is ``min(1, value)``."""

    t_grid: np.ndarray
    values: np.ndarray
    label: str
    parameters: dict = field(default_factory=dict)
    clipped: np.ndarray = field(init=False)

    def __post_init__(self):
        self.t_grid = np.asarray(self.t_grid, dtype=np.float64)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != self.t_grid.shape:
            raise ValueError("t_grid and values must have the same length")
        if np.any(self.values < 0):
            raise ValueError("bound values must be nonnegative")
        self.clipped = np.minimum(1.0, self.values)

    def to_dict(self):
        return {
            "label": self.label,
            "parameters": {k: v for k, v in sorted(self.parameters.items())},
            "t_grid": self.t_grid.tolist(),
            "values": self.values.tolist(),
            "clipped": self.clipped.tolist(),
        }


# ---------------------------------------------------------------------------
# scalar helpers


def binary_divergence(a, u):
    """Relative entropy between Bernoulli(a) and Bernoulli(u), with 0 log 0 = 0."""
    if not (0.0 <= a <= 1.0 and 0.0 <= u <= 1.0):
        raise DomainError(f"arguments must lie in [0, 1], got a={a}, u={u}")
    if a == u:
        return 0.0
    if u in (0.0, 1.0):
        raise DomainError("u must lie strictly inside (0, 1) unless a == u")
    return float(rel_entr(a, u) + rel_entr(1.0 - a, 1.0 - u))


def bennett_h(u):
    """``h(u) = (1 + u) log(1 + u) - u`` for ``u >= 0`` (array-like)."""
    u = np.asarray(u, dtype=np.float64)
    if np.any(u < 0):
        raise DomainError("bennett_h needs u >= 0")
    small = u < 1e-4
    # alternating series u^2/2 - u^3/6 + u^4/12 - u^5/20 avoids cancellation
    series = u * u * (0.5 - u * (1 / 6 - u * (1 / 12 - u / 20)))
    direct = (1.0 + u) * np.log1p(u) - u
    return _scalar_or_array(np.where(small, series, direct))


# ---------------------------------------------------------------------------
# Gaussian and Rademacher series


def gaussian_series_tail(sigma2, d, t, two_sided=False):
    """``d exp(-t^2 / 2 sigma^2)``, with prefactor ``2d`` for the norm."""
    _check_positive("sigma2", sigma2)
    _check_dim(d)
    t = _check_t(t)
    pref = 2 * d if two_sided else d
    return _scalar_or_array(pref * np.exp(-t * t / (2.0 * sigma2)))


def rectangular_series_tail(sigma2, d1, d2, t):
    """``(d1 + d2) exp(-t^2 / 2 sigma^2)`` for a rectangular series."""
    _check_dim(d1)
    _check_dim(d2)
    return gaussian_series_tail(sigma2, d1 + d2, t)


def expected_norm_bracket(sigma2, d):
    """Bracket ``(sigma, sigma sqrt(2 log(2 e d)))``.

    The first entry lower-bounds ``sqrt(E ||Y||^2)``; the second upper-bounds
    ``E ||Y||`` for a Gaussian series with variance parameter ``sigma2``.
    """
    _check_positive("sigma2", sigma2)
    _check_dim(d)
    sigma = math.sqrt(sigma2)
    return sigma, sigma * math.sqrt(2.0 * math.log(2.0 * math.e * d))


# ---------------------------------------------------------------------------
# Chernoff


def chernoff_divergence(n, d, mu_bar, alpha, side):
    """Divergence form ``d exp(-n D(alpha || mu_bar))`` for the average.

    ``side="upper"`` bounds ``P(lambda_max(avg) >= alpha)`` for
    ``mu_bar <= alpha <= 1``; ``side="lower"`` bounds
    ``P(lambda_min(avg) <= alpha)`` for ``0 <= alpha <= mu_bar``.
    """
    _check_dim(d)
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n}")
    if not 0.0 < mu_bar < 1.0:
        raise DomainError(f"mu_bar must lie in (0, 1), got {mu_bar}")
    if side == "upper":
        if not mu_bar <= alpha <= 1.0:
            raise SideDomainError(f"upper side needs mu_bar <= alpha <= 1, got {alpha}")
    elif side == "lower":
        if not 0.0 <= alpha <= mu_bar:
            raise SideDomainError(f"lower side needs 0 <= alpha <= mu_bar, got {alpha}")
    else:
        raise DomainError(f"side must be 'lower' or 'upper', got {side!r}")
    return d * math.exp(-n * binary_divergence(alpha, mu_bar))


def chernoff_multiplicative(mu, R, d, delta, side, simplified=False):
    """Multiplicative Chernoff bound in terms of the relative deviation ``delta``.

    lower: ``d [e^-delta / (1-delta)^(1-delta)]^(mu/R)`` for delta in [0, 1];
    upper: ``d [e^delta / (1+delta)^(1+delta)]^(mu/R)`` for delta >= 0.

    With ``simplified=True`` the lower side uses ``d exp(-delta^2 mu / 2R)``
    and the upper side uses ``d (e/t)^(t mu/R)`` with ``t = 1 + delta``, but
    only when ``t >= e``; below that the full upper form is returned.
    """
    _check_dim(d)
    _check_positive("R", R)
    if not mu >= 0 or not math.isfinite(mu):
        raise DomainError(f"mu must be nonnegative, got {mu}")
    ratio = mu / R
    if side == "lower":
        if not 0.0 <= delta <= 1.0:
            raise DomainError(f"lower side needs delta in [0, 1], got {delta}")
        if simplified:
            return d * math.exp(-delta * delta * ratio / 2.0)
        # (1 - delta)^(1 - delta) -> 1 as delta -> 1, handled by xlogy(0, 0) = 0
        return d * math.exp(ratio * (-delta - float(xlogy(1.0 - delta, 1.0 - delta))))
    if side == "upper":
        if not delta >= 0.0:
            raise DomainError(f"upper side needs delta >= 0, got {delta}")
        t = 1.0 + delta
        if simplified and t >= math.e:
            return d * math.exp(t * ratio * (1.0 - math.log(t)))
        return d * math.exp(ratio * (delta - t * math.log1p(delta)))
    raise DomainError(f"side must be 'lower' or 'upper', got {side!r}")


# ---------------------------------------------------------------------------
# Bernstein


class BernsteinBounded(NamedTuple):
    bennett: object
    bernstein: object
    split: object


class BernsteinSubexp(NamedTuple):
    main: object
    split: object


def bernstein_bounded_tail(sigma2, R, d, t):
    """Bennett, Bernstein and split-Bernstein bounds (array-like ``t``).

    For every input ``bennett <= bernstein <= split``.
    """
    _check_positive("sigma2", sigma2)
    _check_positive("R", R)
    _check_dim(d)
    t = _check_t(t)
    ratio = sigma2 / (R * R)
    bennett = d * np.exp(-ratio * np.asarray(bennett_h(R * t / sigma2)))
    bernstein = d * np.exp(-(t * t / 2.0) / (sigma2 + R * t / 3.0))
    split = np.where(
        t <= sigma2 / R,
        d * np.exp(-3.0 * t * t / (8.0 * sigma2)),
        d * np.exp(-3.0 * t / (8.0 * R)),
    )
    return BernsteinBounded(*(_scalar_or_array(x) for x in (bennett, bernstein, split)))


def bernstein_subexp_tail(sigma2, R, d, t):
    """Subexponential Bernstein bound and its split form; ``main <= split``."""
    _check_positive("sigma2", sigma2)
    _check_positive("R", R)
    _check_dim(d)
    t = _check_t(t)
    main = d * np.exp(-(t * t / 2.0) / (sigma2 + R * t))
    split = np.where(
        t <= sigma2 / R,
        d * np.exp(-t * t / (4.0 * sigma2)),
        d * np.exp(-t / (4.0 * R)),
    )
    return BernsteinSubexp(_scalar_or_array(main), _scalar_or_array(split))


def bernstein_rect_tail(sigma2, R, d1, d2, t):
    """``(d1 + d2) exp(-(t^2/2) / (sigma^2 + R t / 3))`` for rectangular sums."""
    _check_dim(d1)
    _check_dim(d2)
    return bernstein_bounded_tail(sigma2, R, d1 + d2, t).bernstein


# ---------------------------------------------------------------------------
# martingales


def azuma_tail(sigma2, d, t, conditionally_symmetric=False):
    """``d exp(-t^2 / 8 sigma^2)``; the constant is 1/2 for symmetric differences."""
    _check_positive("sigma2", sigma2)
    _check_dim(d)
    t = _check_t(t)
    c = 2.0 if conditionally_symmetric else 8.0
    return _scalar_or_array(d * np.exp(-t * t / (c * sigma2)))


def mcdiarmid_tail(sigma2, d, t):
    """Bounded-differences bound; sigma2 is ``||sum A_k^2||`` of the difference bounds."""
    return azuma_tail(sigma2, d, t, conditionally_symmetric=False)


# ---------------------------------------------------------------------------
# means


def expected_max_bounds(kind, C=1.0, *, d, R, sigma=None, mu_max=None):
    """Mean bounds with a caller-supplied constant ``C`` (not certified).

    bernstein: ``C max(sigma sqrt(log d), R log d)``;
    chernoff: ``C max(mu_max, R log d)``.
    """
    _check_positive("C", C)
    _check_dim(d)
    if R < 0:
        raise DomainError("R must be nonnegative")
    logd = math.log(d)
    if kind == "bernstein":
        if sigma is None or sigma < 0:
            raise DomainError("bernstein mean bound needs sigma >= 0")
        return C * max(sigma * math.sqrt(logd), R * logd)
    if kind == "chernoff":
        if mu_max is None or mu_max < 0:
            raise DomainError("chernoff mean bound needs mu_max >= 0")
        return C * max(mu_max, R * logd)
    raise DomainError(f"unknown kind {kind!r}")


# ---------------------------------------------------------------------------
# mgf models and the master bound


def _g_gaussian(theta, R):
    return theta * theta / 2.0


def _g_chernoff(theta, R):
    return math.expm1(theta * R) / R


def _g_bernstein_bounded(theta, R):
    x = theta * R
    if abs(x) < 1e-3:
        val = x * x * (0.5 + x * (1 / 6 + x * (1 / 24 + x / 120)))
    else:
        val = math.expm1(x) - x
    return val / (R * R)


def _g_bernstein_subexp(theta, R):
    return theta * theta / (2.0 * (1.0 - R * theta))


def _g_azuma(theta, R):
    return 2.0 * theta * theta


MGF_KINDS = {
    "gaussian": _g_gaussian,
    "rademacher": _g_gaussian,
    "chernoff": _g_chernoff,
    "bernstein_bounded": _g_bernstein_bounded,
    "bernstein_subexp": _g_bernstein_subexp,
    "azuma": _g_azuma,
}


@dataclass
class MgfModel:
    """Per-summand log-mgf dominator ``theta -> g(theta) * shape_matrix``.

    ``shape_matrix`` is ``A_k^2`` (gaussian, rademacher, azuma,
    bernstein_subexp), ``E X_k`` (chernoff) or ``E X_k^2``
    (bernstein_bounded). ``scale`` is the uniform bound R; the chernoff and
    bernstein kinds use it to rescale ``g``.
    """

    kind: str
    shape_matrix: np.ndarray
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in MGF_KINDS:
            raise ValueError(f"unknown mgf kind {self.kind!r}")
        _check_positive("scale", self.scale)
        M = symmetrize(self.shape_matrix)
        lam = np.linalg.eigvalsh(M)
        if lam[0] < -1e-9 * max(1.0, abs(lam[-1])):
            raise ValueError("shape_matrix must be positive semidefinite")
        self.shape_matrix = M

    @property
    def dim(self):
        return self.shape_matrix.shape[0]

    @property
    def theta_domain(self):
        """Open interval of admissible theta."""
        if self.kind == "bernstein_subexp":
            return (0.0, 1.0 / self.scale)
        return (0.0, math.inf)

    def g(self, theta):
        lo, hi = self.theta_domain
        if not lo < theta < hi:
            raise ThetaOutOfDomain(f"theta={theta} outside ({lo}, {hi})")
        return MGF_KINDS[self.kind](theta, self.scale)


def log_mgf_bound(model: MgfModel, theta):
    """Semidefinite upper bound ``g(theta) * shape_matrix`` on ``log E exp(theta X)``."""
    return model.g(theta) * model.shape_matrix


class MasterBound(NamedTuple):
    bound: float
    theta_star: float


_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_section(f, a, b, rel_tol):
    """Minimize a unimodal f on [a, b]; returns (x, f(x)) of the best point seen."""
    c = b - _INV_PHI * (b - a)
    e = a + _INV_PHI * (b - a)
    fc, fe = f(c), f(e)
    while b - a > rel_tol * max(abs(a), abs(b)):
        if fc <= fe:
            b, e, fe = e, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, e, fe
            e = a + _INV_PHI * (b - a)
            fe = f(e)
    return (c, fc) if fc <= fe else (e, fe)


def master_tail_numeric(models, t, d=None):
    """Minimize ``exp(-theta t) tr exp(sum_k g_k(theta) M_k)`` over theta.

    A 64-point logarithmic grid on the common theta domain (capped to
    ``[1e-6, 50]``) locates the minimum; golden-section search refines it to
    1e-10 relative width.
    """
    models = list(models)
    if not models:
        raise EmptyDomain("no mgf models given")
    dims = {m.dim for m in models}
    if len(dims) != 1 or (d is not None and dims != {d}):
        raise ValueError(f"model dimensions {sorted(dims)} disagree with d={d}")
    hi = min(m.theta_domain[1] for m in models)
    hi = min(hi * (1.0 - 1e-9), THETA_MAX)
    if not hi > THETA_MIN:
        raise EmptyDomain(f"theta domain upper end {hi} is below {THETA_MIN}")
    shapes = [m.shape_matrix for m in models]
    t = float(t)

    def log_objective(theta):
        S = sum(m.g(theta) * M for m, M in zip(models, shapes))
        return -theta * t + log_trace_exp(S)

    grid = np.geomspace(THETA_MIN, hi, GRID_POINTS)
    values = np.array([log_objective(th) for th in grid])
    i = int(np.argmin(values))
    a = grid[max(i - 1, 0)]
    b = grid[min(i + 1, GRID_POINTS - 1)]
    theta, val = _golden_section(log_objective, a, b, 1e-10)
    if values[i] < val:
        theta, val = grid[i], values[i]
    return MasterBound(math.exp(val), float(theta))
