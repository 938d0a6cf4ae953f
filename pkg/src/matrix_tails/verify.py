"""Verification engine: Monte Carlo tails, dominance checks and exact lemma checks.

Semidefinite and trace checks report a violation score: the smallest
eigenvalue of ``RHS - LHS`` (or the scalar slack ``rhs - lhs``) divided by
``max(1, |LHS| + |RHS|)``. A check passes when its worst score is at least
``-tol``.
"""

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, NamedTuple

import numpy as np
from scipy import stats

from . import bounds as B
from .ensembles import (
    SIGN_TAGS,
    ZERO_MEAN_TAGS,
    EnsembleSpec,
    Support,
    enumerate_support,
    realize,
    summand_moments,
    summand_supports,
)
from .errors import GridMismatch, SpecInvalid, TooManySummands
from .linalg import (
    SELF_ADJOINT,
    MatrixFamily,
    expm,
    logm,
    psd_gap,
    symmetrize,
    trace_exp,
    variance_parameter,
    weak_variance_estimate,
)

__all__ = [
    "STATISTICS",
    "THEOREMS",
    "LEMMA_IDS",
    "TailReport",
    "DominanceResult",
    "LemmaVerdict",
    "KhintchineRow",
    "VarianceComparison",
    "MeanStudy",
    "clopper_pearson",
    "statistic_values",
    "monte_carlo_tail",
    "check_dominance",
    "theorem_curve",
    "lemma_suite",
    "subadditivity_slack",
    "laplace_slack",
    "gaussian_mgf_error",
    "khintchine_check",
    "khintchine_constant",
    "variance_comparison",
    "mean_norm_study",
    "worker_count",
]

STATISTICS = ("lambda_max", "lambda_min", "spectral_norm")
THEOREMS = (
    "gaussian",
    "rect-gaussian",
    "chernoff-i",
    "chernoff-ii",
    "bernstein-bounded",
    "bernstein-subexp",
    "bernstein-rect",
    "azuma",
    "mcdiarmid",
    "master",
)
LEMMA_IDS = (
    "GT",
    "EXP1",
    "TRMONO",
    "LOGMONO",
    "LOGCONC",
    "LIEB",
    "CORCUM",
    "SUBADD",
    "LAPLACE",
    "MGF-RAD",
    "MGF-GAUSS",
    "MGF-CHER",
    "MGF-BERN",
    "MGF-SUBEXP",
    "SYMM",
    "MGF-AZUMA",
    "JENSEN2",
    "AWREL",
)
THETAS = (0.1, 0.5, 1.0, 2.0)
DEFAULT_CHUNK = 10_000


def worker_count(workers=None):
    """Worker threads: explicit argument, else MATRIX_TAILS_THREADS (0 = auto)."""
    if workers is None:
        raw = os.environ.get("MATRIX_TAILS_THREADS", "0")
        try:
            workers = int(raw)
        except ValueError as exc:
            raise SpecInvalid(f"MATRIX_TAILS_THREADS must be an integer, got {raw!r}") from exc
    if workers < 0:
        raise SpecInvalid("worker count must be nonnegative")
    if workers == 0:
        workers = min(8, os.cpu_count() or 1)
    return workers


# ---------------------------------------------------------------------------
# Monte Carlo tails


def clopper_pearson(k, n, level=0.99):
    """Exact two-sided binomial interval for ``k`` successes in ``n`` trials."""
    k = np.asarray(k, dtype=np.float64)
    if n < 1 or np.any(k < 0) or np.any(k > n):
        raise ValueError("need 0 <= k <= n and n >= 1")
    alpha = 1.0 - level
    with np.errstate(invalid="ignore"):
        low = np.where(k > 0, stats.beta.ppf(alpha / 2, k, n - k + 1), 0.0)
        high = np.where(k < n, stats.beta.ppf(1 - alpha / 2, k + 1, n - k), 1.0)
    if low.ndim == 0:
        return float(low), float(high)
    return low, high


def statistic_values(realizations, statistic):
    """Per-trial scalar statistic of a batch of symmetric matrices."""
    if statistic not in STATISTICS:
        raise SpecInvalid(f"unknown statistic {statistic!r}")
    lam = np.linalg.eigvalsh(realizations)
    if statistic == "lambda_max":
        return lam[:, -1]
    if statistic == "lambda_min":
        return lam[:, 0]
    return np.maximum(np.abs(lam[:, 0]), np.abs(lam[:, -1]))


def _event_counts(values, t_grid, statistic):
    # upper tails count {stat >= t}; lambda_min counts the lower tail {stat <= t}
    s = np.sort(values)
    if statistic == "lambda_min":
        return np.searchsorted(s, t_grid, side="right").astype(np.int64)
    return (s.size - np.searchsorted(s, t_grid, side="left")).astype(np.int64)


@dataclass
class TailReport:
    """Empirical tail probabilities on a grid with 99% Clopper-Pearson intervals.

    For ``lambda_max`` and ``spectral_norm`` the event is ``stat >= t``; for
    ``lambda_min`` it is the lower-tail event ``stat <= t``.
    """

    t_grid: np.ndarray
    empirical: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    counts: np.ndarray
    trials: int
    seed: int
    statistic: str
    spec: EnsembleSpec

    def to_dict(self, curve=None):
        out = {
            "statistic": self.statistic,
            "trials": self.trials,
            "seed": self.seed,
            "spec": self.spec.to_dict(),
            "t_grid": self.t_grid.tolist(),
            "counts": self.counts.tolist(),
            "empirical": self.empirical.tolist(),
            "ci_low": self.ci_low.tolist(),
            "ci_high": self.ci_high.tolist(),
        }
        if curve is not None:
            out["bound"] = curve.to_dict()
        return out

    def to_json(self, curve=None):
        return json.dumps(self.to_dict(curve), sort_keys=True, indent=2)

    def to_csv(self, curve=None):
        """CSV text with columns t, empirical, ci_low, ci_high, bound_raw, bound_clipped.

        The bound columns are empty when no curve is given.
        """
        if curve is not None and not np.array_equal(curve.t_grid, self.t_grid):
            raise GridMismatch("curve grid differs from report grid")
        lines = ["t,empirical,ci_low,ci_high,bound_raw,bound_clipped"]
        for i, t in enumerate(self.t_grid):
            row = [t, self.empirical[i], self.ci_low[i], self.ci_high[i]]
            cells = [repr(float(x)) for x in row]
            if curve is None:
                cells += ["", ""]
            else:
                cells += [repr(float(curve.values[i])), repr(float(curve.clipped[i]))]
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"


def monte_carlo_tail(spec: EnsembleSpec, statistic, t_grid, trials, seed,
                     chunk=DEFAULT_CHUNK, workers=None):
    """Estimate tail probabilities of ``statistic(Y)`` on ``t_grid``.

    Trials are split into chunks of ``chunk`` consecutive indices and run on a
    thread pool. Each chunk returns integer event counts, so the result does
    not depend on the chunk size or the number of workers.
    """
    if statistic not in STATISTICS:
        raise SpecInvalid(f"unknown statistic {statistic!r}")
    if int(trials) != trials or trials < 100:
        raise SpecInvalid("monte_carlo_tail needs at least 100 trials")
    t_grid = np.asarray(t_grid, dtype=np.float64)
    if t_grid.ndim != 1 or t_grid.size < 1 or np.any(np.diff(t_grid) <= 0):
        raise SpecInvalid("t_grid must be a strictly ascending 1-d array")
    if chunk < 1:
        raise SpecInvalid("chunk must be positive")
    trials = int(trials)
    starts = range(0, trials, chunk)

    def run(start):
        idx = np.arange(start, min(start + chunk, trials))
        values = statistic_values(realize(spec, seed, idx), statistic)
        return _event_counts(values, t_grid, statistic)

    n_workers = min(worker_count(workers), len(starts))
    if n_workers <= 1:
        parts = [run(s) for s in starts]
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            parts = list(pool.map(run, starts))
    counts = np.sum(parts, axis=0)
    low, high = clopper_pearson(counts, trials)
    return TailReport(t_grid, counts / trials, np.atleast_1d(low), np.atleast_1d(high),
                      counts, trials, int(seed), statistic, spec)


class DominanceResult(NamedTuple):
    passed: bool
    point_pass: np.ndarray
    failures: List[int]


def check_dominance(report: TailReport, curve: B.BoundCurve):
    """A grid point fails only when the lower confidence limit exceeds the bound."""
    if report.t_grid.shape != curve.t_grid.shape or not np.array_equal(report.t_grid, curve.t_grid):
        raise GridMismatch("report and curve grids differ")
    ok = report.ci_low <= curve.values
    return DominanceResult(bool(ok.all()), ok, [int(i) for i in np.flatnonzero(~ok)])


# ---------------------------------------------------------------------------
# theorem curves for ensembles


def _psd_support_check(spec):
    for mats, _ in summand_supports(spec):
        if np.linalg.eigvalsh(mats)[:, 0].min() < -1e-12:
            raise SpecInvalid("Chernoff bounds need positive-semidefinite summands")


def _chernoff_params(spec):
    if spec.tag != "rank_one_psd":
        _psd_support_check(spec)
    m = summand_moments(spec)
    lam = np.linalg.eigvalsh(m.mean)
    return float(lam[0]), float(lam[-1]), m.R


def _norm_R(spec):
    return max(float(np.abs(np.linalg.eigvalsh(mats)).max()) for mats, _ in summand_supports(spec))


def _chernoff_curve(spec, theorem, statistic, t_grid):
    if spec.tag in ZERO_MEAN_TAGS:
        raise SpecInvalid("Chernoff bounds need positive-semidefinite summands")
    mu_min, mu_max, R = _chernoff_params(spec)
    n, d = spec.n_summands, spec.dim
    values = np.empty_like(t_grid)
    # psd summands: the spectral norm is the top eigenvalue
    lower = statistic == "lambda_min"
    mu = mu_min if lower else mu_max
    for i, t in enumerate(t_grid):
        if lower and t < 0:
            values[i] = 0.0
            continue
        if not lower and t > n * R:
            values[i] = 0.0
            continue
        if theorem == "chernoff-i":
            mu_bar = mu / (n * R)
            alpha = t / (n * R)
            on_side = alpha <= mu_bar if lower else alpha >= mu_bar
            if not 0.0 < mu_bar < 1.0 or not on_side:
                values[i] = d
            else:
                values[i] = B.chernoff_divergence(n, d, mu_bar, alpha, "lower" if lower else "upper")
        else:
            if mu <= 0:
                values[i] = d
                continue
            delta = 1.0 - t / mu if lower else t / mu - 1.0
            if delta < 0:
                values[i] = d
            else:
                values[i] = B.chernoff_multiplicative(mu, R, d, delta, "lower" if lower else "upper")
    params = {"n": n, "d": d, "R": R, "mu": mu}
    return values, params


def _gaussian_like_sigma2(spec):
    if spec.tag not in ZERO_MEAN_TAGS:
        raise SpecInvalid(f"theorem needs a series ensemble, got {spec.tag}")
    return spec.variance()


def theorem_curve(spec: EnsembleSpec, theorem, statistic, t_grid):
    """Evaluate a registered theorem's bound for ``spec`` on ``t_grid``.

    Parameters (sigma^2, R, mu) are derived from the ensemble. For
    ``spectral_norm`` the one-sided bounds are doubled, which covers ``-Y``.
    ``lambda_min`` is supported by the Chernoff theorems only.
    """
    t_grid = np.asarray(t_grid, dtype=np.float64)
    if theorem not in THEOREMS:
        raise SpecInvalid(f"unknown theorem {theorem!r}")
    if statistic not in STATISTICS:
        raise SpecInvalid(f"unknown statistic {statistic!r}")
    if np.any(t_grid < 0):
        raise SpecInvalid("theorem curves need t >= 0")
    if theorem in ("chernoff-i", "chernoff-ii"):
        values, params = _chernoff_curve(spec, theorem, statistic, t_grid)
        return B.BoundCurve(t_grid, values, theorem, params)
    if statistic == "lambda_min":
        raise SpecInvalid(f"{theorem} bounds the upper tail only")
    two = statistic == "spectral_norm"
    d = spec.dim
    if theorem in ("gaussian", "rect-gaussian"):
        if theorem == "rect-gaussian" and spec.tag != "nonuniform_gaussian":
            raise SpecInvalid("rect-gaussian needs a nonuniform_gaussian ensemble")
        sigma2 = _gaussian_like_sigma2(spec)
        if theorem == "rect-gaussian":
            d1, d2 = spec.coefficients.shape
            values = B.rectangular_series_tail(sigma2, d1, d2, t_grid)
            # the norm of a dilation is its top eigenvalue, so no doubling
            two = False
        else:
            values = B.gaussian_series_tail(sigma2, d, t_grid)
        values = np.atleast_1d(values) * (2 if two else 1)
        return B.BoundCurve(t_grid, values, theorem, {"sigma2": sigma2, "d": d})
    if theorem in ("bernstein-bounded", "bernstein-subexp"):
        if spec.tag not in SIGN_TAGS and spec.tag != "finite_support":
            raise SpecInvalid("Bernstein curves need a bounded finite-support ensemble")
        m = summand_moments(spec)
        if np.abs(m.mean).max() > 1e-12:
            raise SpecInvalid("Bernstein bounds need zero-mean summands")
        R = _norm_R(spec) if two else m.R
        sigma2 = float(np.linalg.eigvalsh(m.second)[-1])
        if theorem == "bernstein-bounded":
            values = B.bernstein_bounded_tail(sigma2, R, d, t_grid).bennett
        else:
            values = B.bernstein_subexp_tail(sigma2, R, d, t_grid).main
        values = np.atleast_1d(values) * (2 if two else 1)
        return B.BoundCurve(t_grid, values, theorem, {"sigma2": sigma2, "R": R, "d": d})
    if theorem in ("azuma", "mcdiarmid"):
        if spec.tag not in SIGN_TAGS:
            raise SpecInvalid("martingale curves need a sign-modulated ensemble")
        sigma2 = variance_parameter(spec.coefficients, "sa")
        values = np.atleast_1d(B.azuma_tail(sigma2, d, t_grid)) * (2 if two else 1)
        return B.BoundCurve(t_grid, values, theorem, {"sigma2": sigma2, "d": d})
    if theorem == "master":
        if two:
            raise SpecInvalid("master curve bounds lambda_max only")
        model = spec_mgf_model(spec)
        values = np.array([B.master_tail_numeric([model], t).bound for t in t_grid])
        return B.BoundCurve(t_grid, values, theorem, {"kind": model.kind, "d": d})
    raise SpecInvalid(f"{theorem} has no ensemble-derived curve; evaluate it directly")


def spec_mgf_model(spec: EnsembleSpec):
    """A single aggregated mgf model for the whole sum.

    Summands sharing one ``g`` combine into ``g(theta) * sum_k M_k``.
    """
    if spec.tag in ("gaussian_series", "goe", "diag_gaussian", "nonuniform_gaussian"):
        return B.MgfModel("gaussian", summand_moments(spec).second)
    if spec.tag in SIGN_TAGS:
        return B.MgfModel("rademacher", summand_moments(spec).second)
    _, _, R = _chernoff_params(spec)
    return B.MgfModel("chernoff", summand_moments(spec).mean, scale=R)


# ---------------------------------------------------------------------------
# lemma checks


@dataclass
class LemmaVerdict:
    lemma_id: str
    instances: int
    worst_violation: float
    passed: bool
    tol: float
    details: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "lemma_id": self.lemma_id,
            "instances": self.instances,
            "worst_violation": self.worst_violation,
            "pass": self.passed,
            "tol": self.tol,
            "details": self.details,
        }


def _matrix_score(L, R):
    """Normalized ``lambda_min(R - L)``."""
    scale = max(1.0, float(np.linalg.norm(L, 2) + np.linalg.norm(R, 2)))
    return psd_gap(L, R) / scale


def _scalar_score(lhs, rhs):
    return (rhs - lhs) / max(1.0, abs(lhs) + abs(rhs))


def _rand_sym(rng, d, lo=0.2, hi=1.5):
    G = rng.standard_normal((d, d))
    S = 0.5 * (G + G.T)
    return S * (rng.uniform(lo, hi) / np.linalg.norm(S, 2))


def _rand_orth(rng, d):
    Q, R = np.linalg.qr(rng.standard_normal((d, d)))
    return Q * np.sign(np.diag(R))


def _rand_pd(rng, d, lo=0.1, hi=3.0):
    Q = _rand_orth(rng, d)
    return symmetrize((Q * rng.uniform(lo, hi, d)) @ Q.T)


def _rand_psd(rng, d, scale=1.0):
    G = rng.standard_normal((d, rng.integers(1, d + 1)))
    P = G @ G.T
    return P * (scale * rng.uniform(0.05, 1.0) / max(np.linalg.norm(P, 2), 1e-300))


def _dyadic_probs(rng, m, total=16):
    # integer weights over a power of two give probabilities that sum to 1 exactly
    w = 1 + rng.multinomial(total - m, np.full(m, 1.0 / m))
    return w / float(total)


def _rand_support(rng, d, m=None):
    m = int(rng.integers(2, 5)) if m is None else m
    mats = np.stack([_rand_sym(rng, d) for _ in range(m)])
    return Support(mats, _dyadic_probs(rng, m))


def _zero_mean_support(rng, d, bound="lambda_max"):
    """Zero-mean finite support scaled so ``lambda_max <= 1`` (or ``||X|| <= 1``)."""
    s = _rand_support(rng, d)
    X = s.matrices - np.einsum("m,mij->ij", s.probs, s.matrices)[None]
    lam = np.linalg.eigvalsh(X)
    top = lam[:, -1].max() if bound == "lambda_max" else np.abs(lam).max()
    X = X * (rng.uniform(0.3, 1.0) / max(top, 1e-12))
    return Support(X, s.probs)


def _expect(support, f):
    return sum(p * f(M) for M, p in zip(support.matrices, support.probs))


def _mgf(support, theta):
    return symmetrize(_expect(support, lambda M: expm(theta * M)))


def _theta(rng):
    return float(THETAS[rng.integers(len(THETAS))])


def _gt(rng, d):
    th = _theta(rng)
    A, H = th * _rand_sym(rng, d), th * _rand_sym(rng, d)
    lhs = trace_exp(A + H)
    rhs = float(np.trace(expm(A) @ expm(H)))
    return _scalar_score(lhs, rhs)


def _exp1(rng, d):
    A = _theta(rng) * _rand_sym(rng, d)
    first = _matrix_score(np.eye(d) + A, expm(A))
    second = _matrix_score(symmetrize(0.5 * (expm(A) + expm(-A))), expm(0.5 * A @ A))
    return min(first, second)


def _trmono(rng, d):
    th = _theta(rng)
    A = th * _rand_sym(rng, d)
    Bm = A + th * _rand_psd(rng, d)
    return _scalar_score(trace_exp(A), trace_exp(Bm))


def _logmono(rng, d):
    A = _rand_pd(rng, d)
    Bm = A + _rand_psd(rng, d, scale=_theta(rng))
    return _matrix_score(logm(A), logm(Bm))


def _logconc(rng, d):
    A, Bm = _rand_pd(rng, d), _rand_pd(rng, d)
    tau = float(rng.choice([0.25, 0.5, 0.75]))
    lhs = tau * logm(A) + (1 - tau) * logm(Bm)
    return _matrix_score(lhs, logm(tau * A + (1 - tau) * Bm))


def _lieb(rng, d):
    H = _theta(rng) * _rand_sym(rng, d)
    A, Bm = _rand_pd(rng, d), _rand_pd(rng, d)
    tau = float(rng.choice([0.25, 0.5, 0.75]))

    def f(M):
        return trace_exp(H + logm(M))

    return _scalar_score(tau * f(A) + (1 - tau) * f(Bm), f(tau * A + (1 - tau) * Bm))


def _corcum(rng, d):
    th = _theta(rng)
    H = _rand_sym(rng, d)
    s = _rand_support(rng, d)
    lhs = float(_expect(s, lambda M: trace_exp(H + th * M)))
    rhs = trace_exp(H + logm(_mgf(s, th)))
    return _scalar_score(lhs, rhs)


def subadditivity_slack(supports, theta):
    """Normalized slack of ``E tr exp(theta Y) <= tr exp(sum_k log E exp(theta X_k))``.

    ``supports`` lists independent finite-support summands; the left side is
    computed exactly over the product support.
    """
    joint = enumerate_support(EnsembleSpec.finite_support(supports))
    lhs = float(_expect(joint, lambda M: trace_exp(theta * M)))
    rhs = trace_exp(sum(logm(_mgf(s, theta)) for s in supports))
    return _scalar_score(lhs, rhs)


def laplace_slack(supports, t_values, thetas=THETAS):
    """Worst normalized slack of ``P(lambda_max(Y) >= t) <= min_theta e^{-theta t} E tr e^{theta Y}``."""
    joint = enumerate_support(EnsembleSpec.finite_support(supports))
    top = np.linalg.eigvalsh(joint.matrices)[:, -1]
    worst = math.inf
    mgf_traces = [float(_expect(joint, lambda M: trace_exp(th * M))) for th in thetas]
    for t in t_values:
        prob = float(joint.probs[top >= t].sum())
        bound = min(math.exp(-th * t) * m for th, m in zip(thetas, mgf_traces))
        worst = min(worst, _scalar_score(prob, bound))
    return worst


def _summands(rng, d):
    n = int(rng.integers(2, 5))
    return [_rand_support(rng, d, m=int(rng.integers(2, 4))) for _ in range(n)]


def _subadd(rng, d):
    return subadditivity_slack(_summands(rng, d), _theta(rng))


def _laplace(rng, d):
    supports = _summands(rng, d)
    joint = enumerate_support(EnsembleSpec.finite_support(supports))
    top = np.linalg.eigvalsh(joint.matrices)[:, -1]
    t_values = np.linspace(top.min(), top.max(), 20)
    return laplace_slack(supports, t_values)


def _mgf_rad(rng, d):
    A = _theta(rng) * _rand_sym(rng, d)
    lhs = symmetrize(0.5 * (expm(A) + expm(-A)))
    return _matrix_score(lhs, expm(0.5 * A @ A))


_GH_NODES, _GH_WEIGHTS = np.polynomial.hermite.hermgauss(64)


def gaussian_mgf_error(A):
    """``||E exp(gamma A) - exp(A^2 / 2)||`` with the expectation by 64-node Gauss-Hermite."""
    A = symmetrize(A)
    mgf = sum(w * expm(math.sqrt(2.0) * x * A) for x, w in zip(_GH_NODES, _GH_WEIGHTS))
    mgf = mgf / math.sqrt(math.pi)
    return float(np.linalg.norm(mgf - expm(0.5 * A @ A), 2))


def _mgf_gauss(rng, d):
    A = _theta(rng) * _rand_sym(rng, d)
    nrm = np.linalg.norm(A, 2)
    if nrm > 2.0:
        A = A * (2.0 / nrm)
    return -gaussian_mgf_error(A)


def _mgf_cher(rng, d):
    th = _theta(rng)
    m = int(rng.integers(2, 5))
    mats = []
    for _ in range(m):
        Q = _rand_orth(rng, d)
        mats.append(symmetrize((Q * rng.uniform(0.0, 1.0, d)) @ Q.T))
    s = Support(np.stack(mats), _dyadic_probs(rng, m))
    model = B.MgfModel("chernoff", _expect(s, lambda M: M), scale=1.0)
    return _matrix_score(logm(_mgf(s, th)), B.log_mgf_bound(model, th))


def _mgf_bern(rng, d):
    th = _theta(rng)
    s = _zero_mean_support(rng, d, "lambda_max")
    model = B.MgfModel("bernstein_bounded", _expect(s, lambda M: M @ M), scale=1.0)
    return _matrix_score(logm(_mgf(s, th)), B.log_mgf_bound(model, th))


def _mgf_subexp(rng, d):
    th = _theta(rng)
    th = th / (1.0 + th)
    s = _zero_mean_support(rng, d, "norm")
    # ||X|| <= 1 gives E X^p <= (p!/2) E X^2, so A^2 = E X^2 is admissible
    model = B.MgfModel("bernstein_subexp", _expect(s, lambda M: M @ M), scale=1.0)
    return _matrix_score(logm(_mgf(s, th)), B.log_mgf_bound(model, th))


def _symm(rng, d):
    H = _rand_sym(rng, d)
    s = _zero_mean_support(rng, d, "norm")
    X = Support(_theta(rng) * s.matrices, s.probs)
    lhs = float(_expect(X, lambda M: trace_exp(H + M)))
    rhs = float(_expect(X, lambda M: 0.5 * (trace_exp(H + 2 * M) + trace_exp(H - 2 * M))))
    return _scalar_score(lhs, rhs)


def _mgf_azuma(rng, d):
    th = _theta(rng)
    X = _rand_sym(rng, d, 0.2, 1.0)
    A2 = X @ X
    if rng.random() < 0.5:
        A2 = A2 + _rand_psd(rng, d, 0.5)
    lhs = logm(symmetrize(0.5 * (expm(2 * th * X) + expm(-2 * th * X))))
    return _matrix_score(lhs, 2 * th * th * A2)


def _jensen2(rng, d):
    s = _rand_support(rng, d)
    mean = _expect(s, lambda M: M)
    return _matrix_score(mean @ mean, _expect(s, lambda M: M @ M))


def _awrel(rng, d, details):
    th = _theta(rng)
    supports = _summands(rng, d)
    joint = enumerate_support(EnsembleSpec.finite_support(supports))
    lhs = float(_expect(joint, lambda M: trace_exp(th * M)))
    cgfs = [logm(_mgf(s, th)) for s in supports]
    sub = trace_exp(sum(cgfs))
    aw = d * math.exp(sum(float(np.linalg.eigvalsh(L)[-1]) for L in cgfs))
    key = "subadditive_smaller" if sub <= aw else "aw_smaller"
    details[key] = details.get(key, 0) + 1
    return min(_scalar_score(lhs, sub), _scalar_score(lhs, aw))


_CHECKS = {
    "GT": _gt,
    "EXP1": _exp1,
    "TRMONO": _trmono,
    "LOGMONO": _logmono,
    "LOGCONC": _logconc,
    "LIEB": _lieb,
    "CORCUM": _corcum,
    "SUBADD": _subadd,
    "LAPLACE": _laplace,
    "MGF-RAD": _mgf_rad,
    "MGF-GAUSS": _mgf_gauss,
    "MGF-CHER": _mgf_cher,
    "MGF-BERN": _mgf_bern,
    "MGF-SUBEXP": _mgf_subexp,
    "SYMM": _symm,
    "MGF-AZUMA": _mgf_azuma,
    "JENSEN2": _jensen2,
}


def lemma_suite(d, instances, seed, tol=1e-8, lemmas=None):
    """Run every lemma check on ``instances`` random instances in dimension ``d``.

    Each lemma draws from its own generator seeded by ``(seed, lemma index,
    d)``, so verdicts are reproducible and independent of which lemmas run.
    Failures are reported as verdicts, never raised.
    """
    if int(d) != d or not 1 <= d <= 10:
        raise SpecInvalid("lemma_suite needs 1 <= d <= 10")
    if instances < 1:
        raise SpecInvalid("instances must be positive")
    ids = LEMMA_IDS if lemmas is None else tuple(lemmas)
    verdicts = []
    for lemma_id in ids:
        if lemma_id not in LEMMA_IDS:
            raise SpecInvalid(f"unknown lemma {lemma_id!r}")
        rng = np.random.default_rng([int(seed), LEMMA_IDS.index(lemma_id), int(d)])
        details = {}
        worst = math.inf
        for _ in range(instances):
            if lemma_id == "AWREL":
                score = _awrel(rng, d, details)
            else:
                score = _CHECKS[lemma_id](rng, d)
            worst = min(worst, float(score))
        verdicts.append(LemmaVerdict(lemma_id, instances, worst, worst >= -tol, tol, details))
    return verdicts


# ---------------------------------------------------------------------------
# Khintchine, variance parameters, expected norms


class KhintchineRow(NamedTuple):
    p: int
    lhs: float
    rhs: float
    ratio: float


def khintchine_constant(p):
    """``C_{2p} = (2p)! / (p! 2^p)``, the Gaussian moment ``E gamma^{2p}``."""
    return math.factorial(2 * p) // (math.factorial(p) * 2**p)


def khintchine_check(family: MatrixFamily, p_max):
    """Exact ``E tr (sum eps_k A_k)^{2p}`` against ``C_{2p} tr (sum A_k^2)^p``."""
    if family.kind != SELF_ADJOINT:
        raise SpecInvalid("khintchine_check needs a self-adjoint family")
    n = len(family)
    if n > 16:
        raise TooManySummands(f"{n} summands exceed the enumeration limit of 16")
    if int(p_max) != p_max or not 1 <= p_max <= 6:
        raise SpecInvalid("p_max must be an integer in [1, 6]")
    # rows of the sign table enumerate {+1, -1}^n
    bits = (np.arange(2**n)[:, None] >> np.arange(n)[None, :]) & 1
    signs = 1.0 - 2.0 * bits
    Y = np.einsum("sk,kij->sij", signs, family.members)
    lam = np.linalg.eigvalsh(Y)
    lam_sq = np.linalg.eigvalsh(np.einsum("kij,kjl->il", family.members, family.members))
    rows = []
    for p in range(1, int(p_max) + 1):
        lhs = float(np.mean(np.sum(lam ** (2 * p), axis=1)))
        rhs = khintchine_constant(p) * float(np.sum(np.clip(lam_sq, 0.0, None) ** p))
        rows.append(KhintchineRow(p, lhs, rhs, lhs / rhs if rhs > 0 else math.nan))
    return rows


@dataclass
class VarianceComparison:
    sigma2: float
    sigma2_aw: float
    weak_est: float
    ratios: dict
    checks: dict

    @property
    def passed(self):
        return all(self.checks.values())

    def to_dict(self):
        return {"sigma2": self.sigma2, "sigma2_aw": self.sigma2_aw, "weak_est": self.weak_est,
                "ratios": self.ratios, "checks": self.checks, "pass": self.passed}


def variance_comparison(family: MatrixFamily, restarts=8, seed=0, tol=1e-9):
    """Compare sigma^2, the Ahlswede-Winter parameter and the weak variance.

    Checks ``sigma2 <= sigma2_aw <= d sigma2`` and ``weak_est <= sigma2``,
    each up to ``tol`` relative to ``max(1, sigma2_aw)``.
    """
    sigma2 = variance_parameter(family, "sa")
    aw = variance_parameter(family, "aw")
    weak = weak_variance_estimate(family, restarts=restarts, seed=seed)
    d = family.shape[0]
    slack = tol * max(1.0, aw)
    checks = {
        "sigma2_le_aw": sigma2 <= aw + slack,
        "aw_le_d_sigma2": aw <= d * sigma2 + slack,
        "weak_le_sigma2": weak <= sigma2 + slack,
    }
    ratios = {
        "aw_over_sigma2": aw / sigma2 if sigma2 > 0 else math.nan,
        "weak_over_sigma2": weak / sigma2 if sigma2 > 0 else math.nan,
    }
    return VarianceComparison(sigma2, aw, weak, ratios, checks)


@dataclass
class MeanStudy:
    mean_norm: float
    stderr_norm: float
    mean_sq: float
    stderr_sq: float
    sigma2: float
    bracket: tuple
    checks: dict

    @property
    def passed(self):
        return all(self.checks.values())

    def to_dict(self):
        return {
            "mean_norm": self.mean_norm,
            "stderr_norm": self.stderr_norm,
            "mean_sq": self.mean_sq,
            "stderr_sq": self.stderr_sq,
            "sigma2": self.sigma2,
            "bracket": list(self.bracket),
            "checks": self.checks,
            "pass": self.passed,
        }


def mean_norm_study(spec: EnsembleSpec, trials, seed, chunk=DEFAULT_CHUNK, workers=None):
    """Sample means of ``||Y||`` and ``||Y||^2`` against the expectation bracket.

    Checks (each with three standard errors of slack): ``sigma^2 <= E||Y||^2``,
    ``E||Y|| <= sigma sqrt(2 log 2ed)``, and for ``goe`` also
    ``E||W|| <= 2 sqrt(d)``.
    """
    if spec.tag not in ZERO_MEAN_TAGS:
        raise SpecInvalid("mean_norm_study needs a zero-mean series ensemble")
    if int(trials) != trials or trials < 2:
        raise SpecInvalid("mean_norm_study needs at least 2 trials")
    trials = int(trials)
    starts = range(0, trials, chunk)

    def run(start):
        idx = np.arange(start, min(start + chunk, trials))
        return statistic_values(realize(spec, seed, idx), "spectral_norm")

    n_workers = min(worker_count(workers), len(starts))
    if n_workers <= 1:
        parts = [run(s) for s in starts]
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            parts = list(pool.map(run, starts))
    norms = np.concatenate(parts)
    sq = norms * norms
    mean, se = float(norms.mean()), float(norms.std(ddof=1) / math.sqrt(trials))
    mean_sq, se_sq = float(sq.mean()), float(sq.std(ddof=1) / math.sqrt(trials))
    sigma2 = spec.variance()
    bracket = B.expected_norm_bracket(sigma2, spec.dim)
    checks = {
        "second_moment_ge_sigma2": mean_sq + 3 * se_sq >= sigma2,
        "mean_le_upper_bracket": mean - 3 * se <= bracket[1],
    }
    if spec.tag == "goe":
        checks["goe_mean_le_2sqrt_d"] = mean <= 2 * math.sqrt(spec.dim) + 3 * se
    return MeanStudy(mean, se, mean_sq, se_sq, sigma2, bracket, checks)
