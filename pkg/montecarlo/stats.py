from typing import Sequence

import numpy as np
from scipy import linalg, stats

from rdpg.errors import InsufficientRecords, SingularCovariance
from .schemas import CoverageReport, TrialRecord


def _scaled_deviations(records: Sequence[TrialRecord], scale: float, center=None) -> np.ndarray:
    """
    Stack scale * (estimate - center) for the successful records.

    ``center`` defaults to each record's own target.
    """
    rows = []
    for r in records:
        if r.failed or r.estimate is None:
            continue
        ref = r.target if center is None else center
        rows.append(scale * (np.asarray(r.estimate, dtype=float) - np.asarray(ref, dtype=float)))
    if not rows:
        return np.empty((0, 0))
    return np.vstack(rows)


def _check_group(records: Sequence[TrialRecord]) -> None:
    keys = {(r.n, r.method, r.atom) for r in records}
    if len(keys) > 1:
        raise ValueError(f"records must share (n, method, atom), got {sorted(keys)}")


def empirical_covariance(records: Sequence[TrialRecord], scale: float) -> np.ndarray:
    """
    Sample covariance (denominator count - 1) of scale * (estimate - target).

    Failed records are skipped; at least two successful ones are needed.
    """
    _check_group(records)
    dev = _scaled_deviations(records, scale)
    if dev.shape[0] < 2:
        raise InsufficientRecords(dev.shape[0])
    cov = np.atleast_2d(np.cov(dev, rowvar=False, ddof=1))
    return (cov + cov.T) / 2.0


def relative_frobenius_gap(empirical, predicted) -> float:
    """||empirical - predicted||_F / ||predicted||_F."""
    predicted = np.asarray(predicted, dtype=float)
    return float(np.linalg.norm(np.asarray(empirical, dtype=float) - predicted) / np.linalg.norm(predicted))


def coverage_check(records: Sequence[TrialRecord], predicted_cov, predicted_center, scale: float) -> CoverageReport:
    """
    Share of records whose scale * (estimate - center) has Mahalanobis norm,
    under ``predicted_cov``, of at most 1 and 2; plus the shares inside the
    68% and 95% mass ellipses.
    """
    cov = np.atleast_2d(np.asarray(predicted_cov, dtype=float))
    d = cov.shape[0]
    try:
        factor = linalg.cho_factor(cov)
    except linalg.LinAlgError as e:
        raise SingularCovariance(f"predicted covariance is not positive definite: {e}") from e

    dev = _scaled_deviations(records, scale, center=np.asarray(predicted_center, dtype=float))
    if dev.shape[0] == 0:
        raise InsufficientRecords(0)
    radii2 = np.einsum("ij,ij->i", dev, linalg.cho_solve(factor, dev.T).T)

    def share(r2: float) -> float:
        return float(np.mean(radii2 <= r2))

    return CoverageReport(
        coverage_1sigma=share(1.0),
        coverage_2sigma=share(4.0),
        coverage_68=share(float(stats.chi2.ppf(0.68, d))),
        coverage_95=share(float(stats.chi2.ppf(0.95, d))),
        mass_1sigma=float(stats.chi2.cdf(1.0, d)),
        mass_2sigma=float(stats.chi2.cdf(4.0, d)),
        count=int(dev.shape[0]),
    )
