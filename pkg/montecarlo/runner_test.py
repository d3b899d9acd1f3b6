import numpy as np
import pytest

from montecarlo.runner import (
    RATE_COLUMNS,
    method_scale,
    rate_ratios,
    run_classification_experiment,
    run_clt_experiment,
    run_rate_experiment,
    run_trial,
)
from montecarlo.schemas import ExperimentConfig
from rdpg.errors import InsufficientGrid
from rdpg.limit_theory import lr_threshold, lse_target
from rdpg.schemas import InnerProductDistribution, MLSolverOptions, ScalarMixture

TWO_ATOMS = InnerProductDistribution(dim=2, atoms=[[0.2, 0.7], [0.65, 0.3]], weights=[0.4, 0.6])


def _config(**overrides):
    fields = dict(distribution=TWO_ATOMS, n_values=[60, 120], trials=4, master_seed=11)
    fields.update(overrides)
    return ExperimentConfig(**fields)


def _dump(records):
    return [r.model_dump() for r in records]


def test_method_scale():
    assert method_scale("lls-ase", 400) == 20.0
    assert method_scale("ml-ase", 400) == 20.0
    assert method_scale("lls-lse", 400) == 400.0


def test_config_validation():
    with pytest.raises(ValueError):
        _config(n_values=[120, 60])
    with pytest.raises(ValueError):
        _config(n_values=[1, 60])
    with pytest.raises(ValueError):
        _config(methods=["lls-ase", "lls-ase"])
    assert _config(methods=["lls-lse", "lls-ase"]).ordered_methods == ["lls-ase", "lls-lse"]


def test_run_trial_records():
    cfg = _config()
    records = run_trial(cfg, 120, 2)
    assert [r.method for r in records] == ["lls-ase", "ml-ase", "lls-lse"]
    assert len({r.atom for r in records}) == 1

    atom = records[0].atom
    w_bar = TWO_ATOMS.atom_array[atom]
    np.testing.assert_allclose(records[0].target, w_bar)
    np.testing.assert_allclose(records[2].target, lse_target(TWO_ATOMS, w_bar, 120))

    for r in records:
        if r.failed:
            assert r.message
            continue
        assert r.error == pytest.approx(np.linalg.norm(np.subtract(r.estimate, r.target)))
        assert r.embedding_error is not None and r.embedding_error >= 0


def test_trial_is_a_function_of_its_key():
    cfg = _config()
    assert _dump(run_trial(cfg, 60, 3)) == _dump(run_trial(cfg, 60, 3))
    assert _dump(run_trial(cfg, 60, 3)) != _dump(run_trial(cfg, 60, 2))

    # the same trial inside a different grid is unchanged
    wider = _config(n_values=[30, 60, 120], trials=6)
    assert _dump(run_trial(wider, 60, 3)) == _dump(run_trial(cfg, 60, 3))


def test_clt_experiment_independent_of_workers():
    cfg = _config()
    one = run_clt_experiment(cfg, workers=1)
    many = run_clt_experiment(cfg, workers=4)
    assert _dump(one.records) == _dump(many.records)
    assert one.summary.model_dump() == many.summary.model_dump()

    assert len(one.records) == 2 * 4 * 3
    keys = [(r.n, r.trial) for r in one.records]
    assert keys == sorted(keys)


def test_summary_entries():
    cfg = _config(methods=["lls-ase"], trials=8)
    summary = run_clt_experiment(cfg, workers=2).summary
    assert summary.total_records == 16
    for n in cfg.n_values:
        entries = [e for e in summary.entries if e.n == n]
        assert sum(e.trials for e in entries) == 8
        assert sum(e.atom_frequency for e in entries) == pytest.approx(1.0)
        for e in entries:
            assert e.scale == pytest.approx(np.sqrt(n))
            np.testing.assert_allclose(e.center, TWO_ATOMS.atom_array[e.atom])
            if e.covariance is not None:
                cov = np.array(e.covariance)
                np.testing.assert_allclose(cov, cov.T)
            if e.coverage is not None:
                assert 0.0 <= e.coverage.coverage_1sigma <= e.coverage.coverage_2sigma <= 1.0


def test_oos_atoms_follow_mixture_weights():
    trials = 400
    cfg = _config(methods=["lls-ase"], n_values=[40], trials=trials, master_seed=3)
    entries = run_clt_experiment(cfg, workers=4).summary.entries
    assert sorted(e.atom for e in entries) == [0, 1]
    for e in entries:
        w = TWO_ATOMS.weights[e.atom]
        assert abs(e.atom_frequency - w) <= 4 * np.sqrt(w * (1 - w) / trials)


def test_solver_failures_become_records():
    stuck = MLSolverOptions(max_iterations=1, gradient_tolerance=1e-300)
    cfg = _config(methods=["lls-ase", "ml-ase"], ml_options=stuck, n_values=[80], trials=3)
    result = run_clt_experiment(cfg, workers=1)
    ml = [r for r in result.records if r.method == "ml-ase"]
    assert ml and all(r.failed for r in ml)
    assert all("MaxIterationsExceeded" in r.message for r in ml)
    assert all(r.estimate is None and r.error is None for r in ml)
    assert not any(r.failed for r in result.records if r.method == "lls-ase")
    assert result.summary.total_failures == len(ml)


def test_rate_experiment_needs_two_sizes():
    with pytest.raises(InsufficientGrid):
        run_rate_experiment(_config(n_values=[100]), workers=1)


def test_rate_experiment_table():
    cfg = _config(n_values=[50, 400], trials=10, methods=["lls-ase"])
    table = run_rate_experiment(cfg, workers=2)
    assert list(table.columns) == RATE_COLUMNS
    assert list(table["n"]) == [50, 400]
    assert table["median_error"].iloc[1] < table["median_error"].iloc[0]
    assert table["median_embedding_error"].iloc[1] < table["median_embedding_error"].iloc[0]
    assert rate_ratios(table)["lls-ase"] < 1.0


def test_classification_experiment():
    mix = ScalarMixture(lam=0.4, p=0.3, q=0.7)
    summary = run_classification_experiment(mix, n=100, m=5, trials=6, master_seed=3, workers=2)
    assert summary.failures == 0
    assert summary.threshold_oos == lr_threshold(101, mix)
    assert summary.threshold_in == lr_threshold(105, mix)
    assert 0.0 <= summary.oos_error_rate <= 1.0
    assert 0.0 <= summary.in_sample_error_rate <= 1.0
    assert len(summary.per_trial["oos"]) == 6

    again = run_classification_experiment(mix, n=100, m=5, trials=6, master_seed=3, workers=1)
    assert again.model_dump() == summary.model_dump()

    with pytest.raises(ValueError):
        run_classification_experiment(mix, n=100, m=0, trials=1)


# ---------------------------------------------------------------------------
# Long-running checks against the limit theory
# ---------------------------------------------------------------------------

@pytest.mark.slow
def test_ase_covariance_matches_limit():
    cfg = _config(n_values=[1000, 2000], trials=500, methods=["lls-ase"], master_seed=2024)
    summary = run_clt_experiment(cfg).summary
    for atom in (0, 1):
        entry = summary.entry(2000, "lls-ase", atom)
        assert entry.relative_frobenius_gap <= 0.15
    assert abs(summary.entry(2000, "lls-ase", 1).coverage.coverage_2sigma - 0.8647) <= 0.04


@pytest.mark.slow
def test_lse_covariance_matches_limit():
    cfg = _config(n_values=[1000, 2000], trials=500, methods=["lls-lse"], master_seed=2025)
    summary = run_clt_experiment(cfg).summary
    for atom in (0, 1):
        assert summary.entry(2000, "lls-lse", atom).relative_frobenius_gap <= 0.20


@pytest.mark.slow
def test_error_rates_between_sizes():
    cfg = _config(n_values=[200, 800], trials=50, master_seed=7)
    ratios = rate_ratios(run_rate_experiment(cfg))
    assert 0.35 <= ratios["lls-ase"] <= 0.85
    assert 0.35 <= ratios["ml-ase"] <= 0.85
    assert 0.15 <= ratios["lls-lse"] <= 0.50


@pytest.mark.slow
def test_predicted_ellipses_cover_estimates():
    cfg = _config(n_values=[250, 500], trials=100, methods=["lls-ase", "ml-ase"], master_seed=8)
    result = run_clt_experiment(cfg)
    for method in ("lls-ase", "ml-ase"):
        inside = total = 0
        for atom in (0, 1):
            entry = result.summary.entry(500, method, atom)
            inside += entry.coverage.coverage_95 * entry.coverage.count
            total += entry.coverage.count
        assert inside / total >= 0.90
