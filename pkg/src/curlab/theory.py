"""Executable checks of the utility analysis behind percentile pacing.

The pacing rule induces a prior over the unlabeled pool (uniform mass on
the top-scoring slice). The prior-weighted utility objective decomposes
exactly into the unweighted objective's pieces plus an empirical covariance
between per-sample utility and the prior; these functions evaluate both
sides so the identity, and the sign of that covariance, can be tested
numerically rather than taken on faith.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import pacing
from .rng import derive_rng


def utility(loss: float) -> float:
    """exp(-loss): strictly decreasing utility of one sample's loss."""
    if not math.isfinite(loss) or loss < 0:
        raise ValueError(f"loss must be finite and >= 0, got {loss}")
    return math.exp(-loss)


def unlabeled_loss(params_now, params_prev, x: np.ndarray) -> float:
    """Cross entropy of current predictions against the previous round's
    predictive distribution used as a soft target."""
    from . import nn
    p_now = nn.forward_probs(params_now, x)
    p_prev = nn.forward_probs(params_prev, x)
    return nn.cross_entropy(p_now, p_prev)


def regularized_empirical_loss(labeled_losses, unlabeled_losses) -> float:
    """mean(labeled losses) + mean(unlabeled losses)."""
    lab = np.asarray(labeled_losses, dtype=np.float64)
    unl = np.asarray(unlabeled_losses, dtype=np.float64)
    if lab.size == 0 or unl.size == 0:
        raise ValueError("both loss lists must be non-empty")
    return float(lab.mean() + unl.mean())


def pacing_prior(scores, top_percent: float) -> np.ndarray:
    """Prior with mass 1/M on samples scoring in the top `top_percent`, 0 elsewhere.

    Ranking uses the same nearest-rank percentile as selection, so for
    0 < top_percent < 100 the support equals the ids selected at pacing
    percentile 100 - top_percent. top_percent=100 is the uniform prior and
    0 the zero vector.
    """
    values = np.asarray(scores, dtype=np.float64)
    if not 0.0 <= top_percent <= 100.0:
        raise ValueError("top_percent must be in [0, 100]")
    m = values.size
    if m == 0:
        raise ValueError("scores must be non-empty")
    p = np.zeros(m)
    if top_percent == 0.0:
        return p
    if top_percent == 100.0:
        p[:] = 1.0 / m
        return p
    threshold = pacing.percentile(values, 100.0 - top_percent)
    p[values > threshold] = 1.0 / m
    return p


def empirical_covariance(u: np.ndarray, p: np.ndarray) -> float:
    """sum_j (u_j - mean(u)) * (p_j - mean(p)) — the decomposition's covariance term."""
    u = np.asarray(u, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    return float(((u - u.mean()) * (p - p.mean())).sum())


def covariance_identity_check(u: np.ndarray, p: np.ndarray) -> tuple[float, float]:
    """Both sides of the exact decomposition

        sum_j u_j p_j = sum_j (u_j - mean(u))(p_j - mean(p)) + M * mean(u) * mean(p)

    which holds for arbitrary real vectors of equal length M >= 1.
    """
    u = np.asarray(u, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    if u.shape != p.shape or u.ndim != 1 or u.size == 0:
        raise ValueError("u and p must be aligned non-empty 1-D vectors")
    m = u.size
    lhs = float((u * p).sum())
    rhs = empirical_covariance(u, p) + m * float(u.mean()) * float(p.mean())
    return lhs, rhs


def prior_weighted_utility(labeled_utilities, unlabeled_utilities, prior) -> float:
    """mean(labeled utilities) + sum_j unlabeled_utility_j * prior_j."""
    lab = np.asarray(labeled_utilities, dtype=np.float64)
    unl = np.asarray(unlabeled_utilities, dtype=np.float64)
    p = np.asarray(prior, dtype=np.float64)
    return float(lab.mean() + (unl * p).sum())


def mean_utility(labeled_utilities, unlabeled_utilities) -> float:
    """mean(labeled utilities) + mean(unlabeled utilities)."""
    lab = np.asarray(labeled_utilities, dtype=np.float64)
    unl = np.asarray(unlabeled_utilities, dtype=np.float64)
    return float(lab.mean() + unl.mean())


def utility_gain_report(unlabeled_utilities, scores,
                        top_percents=(5.0, 25.0, 50.0, 75.0, 95.0, 100.0)) -> list[tuple[float, float]]:
    """Covariance between utility and the pacing prior, per top-percent value.

    When the scores rank the samples the same way the utilities do, every
    interior prior yields a non-negative covariance, i.e. pacing toward
    confident samples cannot lower the prior-weighted utility.
    """
    u = np.asarray(unlabeled_utilities, dtype=np.float64)
    s = np.asarray(scores, dtype=np.float64)
    if u.shape != s.shape:
        raise ValueError("utilities and scores must be aligned")
    return [(top, empirical_covariance(u, pacing_prior(s, top))) for top in top_percents]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def run_theory_checks(draws: int = 1000, seed: int = 20260401,
                      inject_fault: bool = False) -> list[CheckResult]:
    """Numerical verification suite used by tests and the theory-check command."""
    rng = derive_rng(seed, "theory-checks")
    results: list[CheckResult] = []

    # Exact decomposition on arbitrary vectors (negative and zero entries included).
    max_resid = 0.0
    for _ in range(draws):
        m = int(rng.integers(1, 10_001))
        u = rng.normal(0.0, 2.0, size=m)
        p = rng.normal(0.0, 1.0, size=m)
        zero_out = rng.random(m) < 0.1
        p[zero_out] = 0.0
        lhs, rhs = covariance_identity_check(u, p)
        if inject_fault:
            lhs += 1e-3
        max_resid = max(max_resid, abs(lhs - rhs) / max(1.0, abs(lhs)))
    results.append(CheckResult(
        "covariance-identity", max_resid <= 1e-9,
        f"max relative residual {max_resid:.3e} over {draws} draws (tolerance 1e-9)"))

    # Constant prior: covariance is exactly zero and lhs = M * mean(u) * c.
    u = rng.normal(0.0, 1.0, size=512)
    c = 0.37
    p = np.full(512, c)
    cov = empirical_covariance(u, p)
    lhs, _ = covariance_identity_check(u, p)
    expect = 512 * u.mean() * c
    const_ok = cov == 0.0 and abs(lhs - expect) <= 1e-9 * max(1.0, abs(expect))
    results.append(CheckResult(
        "constant-prior-covariance", const_ok,
        f"cov {cov:.1e} (must be exactly 0), lhs residual {abs(lhs - expect):.3e}"))

    # Compact form: prior-weighted utility == mean utility + covariance, valid
    # exactly when the prior is uniform over the pool (top 100 percent).
    lab_u = np.exp(-rng.exponential(1.0, size=64))
    unl_u = np.exp(-rng.exponential(1.0, size=4096))
    p_uniform = pacing_prior(rng.random(4096), 100.0)
    lhs_c = prior_weighted_utility(lab_u, unl_u, p_uniform)
    rhs_c = mean_utility(lab_u, unl_u) + empirical_covariance(unl_u, p_uniform)
    compact_ok = abs(lhs_c - rhs_c) <= 1e-12 * max(1.0, abs(lhs_c))
    results.append(CheckResult(
        "compact-form-uniform-prior", compact_ok,
        f"|lhs - rhs| = {abs(lhs_c - rhs_c):.3e} at top_percent=100"))

    # Prior support equals pacing selection at interior percentiles.
    support_ok = True
    for _ in range(max(1, draws // 20)):
        m = int(rng.integers(10, 2000))
        vals = rng.uniform(1e-6, 1.0, size=m)
        ids = np.arange(m, dtype=np.int64)
        scores = pacing.ConfidenceScores(ids, vals)
        for top in (5.0, 20.0, 40.0, 60.0, 80.0, 95.0):
            prior = pacing_prior(vals, top)
            selected, _ = pacing.select(scores, 100.0 - top)
            if not np.array_equal(np.flatnonzero(prior > 0), np.sort(selected)):
                support_ok = False
    results.append(CheckResult(
        "prior-support-matches-selection", support_ok,
        "pacing_prior support == select() ids at interior percentiles"))

    # Sign of the covariance: priors on top-scoring samples (scores rank-aligned
    # with utility) never decrease the objective; bottom priors never increase it.
    sign_ok = True
    for _ in range(max(1, draws // 20)):
        m = int(rng.integers(10, 2000))
        unl_u = np.exp(-rng.exponential(1.0, size=m))
        for top in (5.0, 25.0, 50.0, 75.0, 95.0):
            cov_top = empirical_covariance(unl_u, pacing_prior(unl_u, top))
            cov_bottom = empirical_covariance(unl_u, pacing_prior(-unl_u, top))
            if cov_top < 0 or cov_bottom > 0:
                sign_ok = False
        if empirical_covariance(unl_u, pacing_prior(unl_u, 100.0)) != 0.0:
            sign_ok = False
    results.append(CheckResult(
        "utility-gain-sign", sign_ok,
        "top-aligned priors give cov >= 0, bottom-aligned <= 0, uniform exactly 0"))

    return results
