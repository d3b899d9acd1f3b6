import numpy as np
import pytest

from montecarlo.schemas import TrialRecord
from montecarlo.stats import coverage_check, empirical_covariance, relative_frobenius_gap
from rdpg.errors import InsufficientRecords, SingularCovariance

SIGMA0 = np.array([[2.0, 0.6], [0.6, 1.0]])


def _records(estimates, target=(0.0, 0.0), n=100, method="lls-ase", atom=0):
    return [
        TrialRecord(trial=i, n=n, method=method, atom=atom, estimate=list(map(float, e)), target=list(target))
        for i, e in enumerate(estimates)
    ]


def _gaussian_records(count, seed=0):
    rng = np.random.default_rng(seed)
    return _records(rng.multivariate_normal(np.zeros(2), SIGMA0, size=count))


def test_identical_records_have_zero_covariance():
    cov = empirical_covariance(_records([[0.3, 0.4]] * 5, target=(0.1, 0.1)), scale=10.0)
    np.testing.assert_array_equal(cov, np.zeros((2, 2)))


def test_hand_computed_covariance():
    cov = empirical_covariance(_records([[1, 0], [0, 1], [-1, -1]]), scale=1.0)
    np.testing.assert_allclose(cov, [[1.0, 0.5], [0.5, 1.0]], atol=1e-15)

    scaled = empirical_covariance(_records([[1, 0], [0, 1], [-1, -1]]), scale=3.0)
    np.testing.assert_allclose(scaled, 9 * cov)


def test_covariance_recovers_gaussian_draws():
    cov = empirical_covariance(_gaussian_records(20_000), scale=1.0)
    assert relative_frobenius_gap(cov, SIGMA0) <= 0.05


def test_covariance_skips_failed_and_needs_two():
    records = _records([[1, 0], [0, 1], [-1, -1]])
    records.append(TrialRecord(trial=9, n=100, method="lls-ase", atom=0, target=[0.0, 0.0], failed=True))
    np.testing.assert_allclose(empirical_covariance(records, scale=1.0), [[1.0, 0.5], [0.5, 1.0]], atol=1e-15)

    with pytest.raises(InsufficientRecords):
        empirical_covariance(_records([[1, 0]]), scale=1.0)


def test_covariance_rejects_mixed_groups():
    records = _records([[1, 0], [0, 1]]) + _records([[1, 1]], method="ml-ase")
    with pytest.raises(ValueError):
        empirical_covariance(records, scale=1.0)


def test_relative_frobenius_gap():
    assert relative_frobenius_gap(SIGMA0, SIGMA0) == 0.0
    assert relative_frobenius_gap(1.1 * SIGMA0, SIGMA0) == pytest.approx(0.1)


def test_coverage_at_center():
    report = coverage_check(_records([[0.5, 0.5]] * 4), SIGMA0, [0.5, 0.5], scale=7.0)
    assert report.coverage_1sigma == report.coverage_2sigma == 1.0
    assert report.coverage_68 == report.coverage_95 == 1.0
    assert report.count == 4


def test_coverage_masses_in_two_dimensions():
    report = coverage_check(_records([[0, 0]]), np.eye(2), [0.0, 0.0], scale=1.0)
    assert report.mass_1sigma == pytest.approx(1 - np.exp(-0.5), abs=1e-12)
    assert report.mass_2sigma == pytest.approx(1 - np.exp(-2.0), abs=1e-12)
    assert report.mass_1sigma == pytest.approx(0.3935, abs=1e-4)
    assert report.mass_2sigma == pytest.approx(0.8647, abs=1e-4)


def test_coverage_matches_masses_for_gaussian_draws():
    report = coverage_check(_gaussian_records(20_000, seed=1), SIGMA0, [0.0, 0.0], scale=1.0)
    assert abs(report.coverage_1sigma - report.mass_1sigma) <= 0.015
    assert abs(report.coverage_2sigma - report.mass_2sigma) <= 0.015
    assert abs(report.coverage_68 - 0.68) <= 0.015
    assert abs(report.coverage_95 - 0.95) <= 0.015


def test_coverage_errors():
    with pytest.raises(SingularCovariance):
        coverage_check(_records([[0, 0]]), np.zeros((2, 2)), [0.0, 0.0], scale=1.0)
    with pytest.raises(InsufficientRecords):
        coverage_check([], SIGMA0, [0.0, 0.0], scale=1.0)
