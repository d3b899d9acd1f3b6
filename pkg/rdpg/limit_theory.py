"""
Closed-form population quantities and asymptotic predictions.

Every expectation over F is an exact finite sum over its atoms. The scalar
mixture helpers at the bottom drive the in-sample versus out-of-sample
classification trade-off: given n in-sample vertices, how much does embedding
m extra vertices jointly buy over extending each one separately?
"""
import math
from typing import Iterable

import numpy as np
import pandas as pd
from scipy import optimize, stats

from .errors import EtaViolation, FullRankViolation, NoRootInBracket, NonpositiveMeanInnerProduct
from .model import _check_probabilities, validate_distribution
from .schemas import InnerProductDistribution, PopulationSummary, ScalarMixture, ScalarMixtureVariances

RANK_TOL = 1e-12
ROOT_XTOL = 1e-12
BRACKET_PAD = 1.0

TRADEOFF_COLUMNS = ["n", "m", "lambda", "p", "q", "eta_in", "eta_oos", "ratio"]


def _first_two_moments(dist: InnerProductDistribution):
    atoms, weights = dist.atom_array, dist.weight_array
    mu = weights @ atoms
    Delta = (atoms * weights[:, None]).T @ atoms
    return atoms, weights, mu, (Delta + Delta.T) / 2.0


def _require_invertible(M: np.ndarray, which: str) -> None:
    values = np.linalg.eigvalsh(M)
    if values.min() <= RANK_TOL * max(1.0, float(np.abs(values).max())):
        raise FullRankViolation(which, float(values.min()))


def _symmetrize(M: np.ndarray) -> np.ndarray:
    return (M + M.T) / 2.0


def moments(dist: InnerProductDistribution) -> PopulationSummary:
    """mu = E X, Delta = E X X^T and DeltaTilde = E X X^T / (mu^T X), summed over atoms."""
    atoms, weights, mu, Delta = _first_two_moments(dist)
    scale = atoms @ mu
    for i, s in enumerate(scale):
        if s <= 0:
            raise NonpositiveMeanInnerProduct(float(s), index=i)
    DeltaTilde = (atoms * (weights / scale)[:, None]).T @ atoms
    return PopulationSummary(mu=mu, Delta=Delta, DeltaTilde=_symmetrize(DeltaTilde))


def sigma_ase(dist: InnerProductDistribution, w) -> np.ndarray:
    """
    Limiting covariance of sqrt(n) (Q w_hat - w) for the least-squares ASE extension:
    Delta^{-1} E[X^T w (1 - X^T w) X X^T] Delta^{-1}.
    """
    atoms, weights, _, Delta = _first_two_moments(dist)
    w = np.asarray(w, dtype=float)
    probs = _check_probabilities(atoms @ w, lambda k: k)
    _require_invertible(Delta, "Delta")
    middle = (atoms * (weights * probs * (1.0 - probs))[:, None]).T @ atoms
    Delta_inv = np.linalg.inv(Delta)
    return _symmetrize(Delta_inv @ middle @ Delta_inv)


def sigma_lse(dist: InnerProductDistribution, w_bar) -> np.ndarray:
    """
    Limiting covariance of n (Q w_check - w_tilde) for the least-squares LSE extension.

    Needs every atom inner product strictly inside (0, 1).
    """
    report = validate_distribution(dist)
    if report.eta_margin <= 0:
        raise EtaViolation(report.eta_margin)
    summary = moments(dist)
    _require_invertible(summary.DeltaTilde, "DeltaTilde")

    atoms, weights = dist.atom_array, dist.weight_array
    w_bar = np.asarray(w_bar, dtype=float)
    mu = summary.mu
    mu_w = float(mu @ w_bar)
    if mu_w <= 0:
        raise NonpositiveMeanInnerProduct(mu_w)
    probs = _check_probabilities(atoms @ w_bar, lambda k: k)
    DT_inv = np.linalg.inv(summary.DeltaTilde)

    # row j: DeltaTilde^{-1} x_j / (x_j^T mu) - w_bar / (2 mu^T w_bar)
    centered = (atoms @ DT_inv.T) / (atoms @ mu)[:, None] - w_bar / (2.0 * mu_w)
    coef = weights * probs * (1.0 - probs) / mu_w
    return _symmetrize((centered * coef[:, None]).T @ centered)


def lse_target(dist: InnerProductDistribution, w_bar, n: int) -> np.ndarray:
    """w_tilde = w_bar / sqrt(n mu^T w_bar), the population Laplacian embedding of w_bar."""
    _, _, mu, _ = _first_two_moments(dist)
    w_bar = np.asarray(w_bar, dtype=float)
    mu_w = float(mu @ w_bar)
    if mu_w <= 0:
        raise NonpositiveMeanInnerProduct(mu_w)
    return w_bar / math.sqrt(n * mu_w)


# ---------------------------------------------------------------------------
# Two-point scalar mixtures
# ---------------------------------------------------------------------------

def scalar_mixture_variances(mix: ScalarMixture) -> ScalarMixtureVariances:
    lam, p, q = mix.lam, mix.p, mix.q
    Delta = lam * p ** 2 + (1 - lam) * q ** 2
    sigma2_p = (lam * p ** 2 * (1 - p ** 2) * p ** 2 + (1 - lam) * p * q * (1 - p * q) * q ** 2) / Delta ** 2
    sigma2_q = (lam * p * q * (1 - p * q) * p ** 2 + (1 - lam) * q ** 2 * (1 - q ** 2) * q ** 2) / Delta ** 2
    return ScalarMixtureVariances(sigma2_p=sigma2_p, sigma2_q=sigma2_q, Delta=Delta)


def _oriented(lam, p, q, sigma2_p, sigma2_q):
    # put the smaller mean first
    if p > q:
        return 1.0 - lam, q, p, sigma2_q, sigma2_p
    return lam, p, q, sigma2_p, sigma2_q


def likelihood_ratio_threshold(n: int, lam: float, p: float, q: float, sigma2_p: float, sigma2_q: float) -> float:
    """
    The x where lam N(x; p, sigma2_p / n) and (1 - lam) N(x; q, sigma2_q / n) cross.

    Searches between the means first, then one unit beyond either side; bisection
    to 1e-12.
    """
    if p == q:
        raise ValueError("the two means must differ")
    lam, p, q, s2p, s2q = _oriented(lam, p, q, sigma2_p, sigma2_q)
    log_odds = math.log(lam) - 0.5 * math.log(s2p) - math.log(1 - lam) + 0.5 * math.log(s2q)

    def g(x: float) -> float:
        return log_odds - n * (x - p) ** 2 / (2 * s2p) + n * (x - q) ** 2 / (2 * s2q)

    for lo, hi in ((p, q), (p - BRACKET_PAD, p), (q, q + BRACKET_PAD)):
        g_lo, g_hi = g(lo), g(hi)
        if g_lo == 0.0:
            return lo
        if g_hi == 0.0:
            return hi
        if g_lo * g_hi < 0:
            return optimize.bisect(g, lo, hi, xtol=ROOT_XTOL)
    raise NoRootInBracket(p - BRACKET_PAD, q + BRACKET_PAD)


def mixture_error(n: int, lam: float, p: float, q: float, sigma2_p: float, sigma2_q: float) -> float:
    """Bayes error of classifying a draw from the two-normal mixture at the likelihood-ratio threshold."""
    x = likelihood_ratio_threshold(n, lam, p, q, sigma2_p, sigma2_q)
    lam, p, q, s2p, s2q = _oriented(lam, p, q, sigma2_p, sigma2_q)
    root_n = math.sqrt(n)
    miss_p = stats.norm.sf(root_n * (x - p) / math.sqrt(s2p))
    miss_q = stats.norm.cdf(root_n * (x - q) / math.sqrt(s2q))
    return float(lam * miss_p + (1 - lam) * miss_q)


def lr_threshold(n: int, mix: ScalarMixture) -> float:
    v = scalar_mixture_variances(mix)
    return likelihood_ratio_threshold(n, mix.lam, mix.p, mix.q, v.sigma2_p, v.sigma2_q)


def classification_error(n: int, mix: ScalarMixture) -> float:
    """Approximate error eta_{n,p,q} of the threshold classifier on ASE positions from n vertices."""
    v = scalar_mixture_variances(mix)
    return mixture_error(n, mix.lam, mix.p, mix.q, v.sigma2_p, v.sigma2_q)


def tradeoff_ratio(n: int, m: int, mix: ScalarMixture) -> float:
    """eta_{n+m} / eta_{n+1}: in-sample error of a joint embedding over the OOS error."""
    if n < 1 or m < 1:
        raise ValueError(f"n and m must be >= 1, got n={n}, m={m}")
    if m == 1:
        return 1.0
    return classification_error(n + m, mix) / classification_error(n + 1, mix)


def tradeoff_table(lam: float, p: float, q: float, n_values: Iterable[int], m_values: Iterable[int]) -> pd.DataFrame:
    """The trade-off sweep, one row per (n, m)."""
    mix = ScalarMixture(lam=lam, p=p, q=q)
    m_values = list(m_values)
    rows = []
    for n in n_values:
        eta_oos = classification_error(n + 1, mix)
        for m in m_values:
            eta_in = eta_oos if m == 1 else classification_error(n + m, mix)
            rows.append({
                "n": int(n),
                "m": int(m),
                "lambda": lam,
                "p": p,
                "q": q,
                "eta_in": eta_in,
                "eta_oos": eta_oos,
                "ratio": eta_in / eta_oos,
            })
    return pd.DataFrame(rows, columns=TRADEOFF_COLUMNS)
