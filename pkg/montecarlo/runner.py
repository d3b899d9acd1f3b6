"""
Seeded, parallel Monte Carlo experiments over the OOS extensions.

Every trial is a pure function of (master_seed, n, trial index): its latent
positions, graph and OOS edges come from child seeds of that triple, so a
trial's records do not depend on which other trials ran, on the worker count,
or on scheduling. Trials run through ``RunnableLambda.batch``, which returns
results in input order.
"""
from collections import defaultdict
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from langchain_core.runnables import RunnableLambda

from rdpg.align import procrustes, two_to_infty_error
from rdpg.errors import InsufficientGrid, RDPGError
from rdpg.limit_theory import classification_error, lr_threshold, lse_target, sigma_ase, sigma_lse
from rdpg.model import child_seed, sample_adjacency, sample_latent, sample_oos
from rdpg.oos import oos_ase_lls, oos_extend
from rdpg.schemas import Embedding, InnerProductDistribution, ScalarMixture
from rdpg.spectral import ase, laplacian_positions, lse
from tools.config import get_workers
from .schemas import (
    ASE_METHODS,
    METHOD_ORDER,
    ClassificationSummary,
    CLTResult,
    ExperimentConfig,
    ExperimentSummary,
    SummaryEntry,
    TrialRecord,
)
from .stats import coverage_check, empirical_covariance, relative_frobenius_gap

RATE_COLUMNS = ["n", "method", "median_error", "q90_error", "median_embedding_error", "trials", "failures"]


def method_scale(method: str, n: int) -> float:
    """sqrt(n) for the ASE extensions, n for the LSE extension."""
    return float(np.sqrt(n)) if method in ASE_METHODS else float(n)


# ---------------------------------------------------------------------------
# One trial
# ---------------------------------------------------------------------------

def _failed(trial: int, n: int, method: str, atom: int, target, error: Exception) -> TrialRecord:
    return TrialRecord(
        trial=trial, n=n, method=method, atom=atom, target=list(map(float, target)),
        failed=True, message=f"{type(error).__name__}: {error}",
    )


def run_trial(cfg: ExperimentConfig, n: int, trial: int) -> List[TrialRecord]:
    """
    Sample n+1 latent positions, build the graph on the first n, and OOS-extend
    the last vertex with every configured method.

    The in-sample embedding is Procrustes-aligned to the true positions (to
    T^{-1/2} X for the LSE) and the same rotation is applied to the OOS
    estimate. Method failures become failed records.
    """
    dist = cfg.distribution
    seed = child_seed(cfg.master_seed, n, trial)
    latent = sample_latent(dist, n + 1, child_seed(seed, 0))
    inside = latent.head(n)
    w_bar = latent.X[n]
    atom = int(latent.labels[n])
    A = sample_adjacency(inside, child_seed(seed, 1))
    oos = sample_oos(inside, w_bar, child_seed(seed, 2), atom=atom)

    records: List[TrialRecord] = []
    embeddings: Dict[str, Tuple[Embedding, np.ndarray] | Exception] = {}

    def embedding_for(kind: str):
        if kind not in embeddings:
            try:
                if kind == "ase":
                    embeddings[kind] = (ase(A, dist.dim), inside.X)
                else:
                    embeddings[kind] = (lse(A, dist.dim), laplacian_positions(inside))
            except RDPGError as e:
                embeddings[kind] = e
        return embeddings[kind]

    for method in cfg.ordered_methods:
        kind = "ase" if method in ASE_METHODS else "lse"
        try:
            target = w_bar if kind == "ase" else lse_target(dist, w_bar, n)
        except RDPGError as e:
            records.append(_failed(trial, n, method, atom, w_bar, e))
            continue

        prepared = embedding_for(kind)
        if isinstance(prepared, Exception):
            records.append(_failed(trial, n, method, atom, target, prepared))
            continue
        emb, truth = prepared

        try:
            estimate = oos_extend(emb, oos, method, cfg.ml_options)
        except RDPGError as e:
            # includes MaxIterationsExceeded
            records.append(_failed(trial, n, method, atom, target, e))
            continue

        Q = procrustes(emb.positions, truth).Q
        aligned = estimate.w @ Q
        records.append(TrialRecord(
            trial=trial,
            n=n,
            method=method,
            atom=atom,
            estimate=aligned.tolist(),
            target=np.asarray(target, dtype=float).tolist(),
            error=float(np.linalg.norm(aligned - target)),
            embedding_error=two_to_infty_error(emb.positions, truth),
            diagnostics=estimate.diagnostics,
        ))
    return records


def _run_records(cfg: ExperimentConfig, workers: Optional[int], verbose: bool) -> List[TrialRecord]:
    workers = get_workers(workers)
    jobs = [(n, t) for n in cfg.n_values for t in range(cfg.trials)]
    if verbose:
        print("-" * 60)
        print(f"🎲 [Monte Carlo] {len(jobs)} trials over n={cfg.n_values} on {workers} workers...")
    runner = RunnableLambda(lambda job: run_trial(cfg, *job))
    batches = runner.batch(jobs, config={"max_concurrency": workers})
    records = [r for batch in batches for r in batch]
    records.sort(key=lambda r: (r.n, r.trial, METHOD_ORDER.index(r.method)))
    if verbose:
        failures = sum(r.failed for r in records)
        print(f"✅ [Monte Carlo] {len(records)} records, {failures} failed.")
    return records


# ---------------------------------------------------------------------------
# Summaries
# ---------------------------------------------------------------------------

def _predicted_covariance(dist: InnerProductDistribution, method: str, atom: int) -> Optional[np.ndarray]:
    x = dist.atom_array[atom]
    try:
        return sigma_ase(dist, x) if method in ASE_METHODS else sigma_lse(dist, x)
    except RDPGError:
        return None


def summarize(cfg: ExperimentConfig, records: List[TrialRecord]) -> ExperimentSummary:
    """Aggregate records per (n, method, atom) against the closed-form limiting covariances."""
    groups: Dict[Tuple[int, str, int], List[TrialRecord]] = defaultdict(list)
    for r in records:
        groups[(r.n, r.method, r.atom)].append(r)

    trials_at: Dict[Tuple[int, str], int] = defaultdict(int)
    for (n, method, _), group in groups.items():
        trials_at[(n, method)] += len(group)

    entries = []
    for key in sorted(groups, key=lambda k: (k[0], METHOD_ORDER.index(k[1]), k[2])):
        n, method, atom = key
        group = groups[key]
        ok = [r for r in group if not r.failed]
        scale = method_scale(method, n)
        predicted = _predicted_covariance(cfg.distribution, method, atom)
        entry = dict(
            n=n,
            method=method,
            atom=atom,
            trials=len(group),
            failures=len(group) - len(ok),
            atom_frequency=len(group) / trials_at[(n, method)],
            scale=scale,
            center=group[0].target,
            predicted_covariance=None if predicted is None else predicted.tolist(),
        )
        if ok:
            errors = np.array([r.error for r in ok])
            entry.update(
                mean=np.mean([r.estimate for r in ok], axis=0).tolist(),
                median_error=float(np.median(errors)),
                q90_error=float(np.quantile(errors, 0.9)),
            )
        if len(ok) >= 2:
            cov = empirical_covariance(ok, scale)
            entry["covariance"] = cov.tolist()
            if predicted is not None and np.linalg.norm(predicted) > 0:
                entry["relative_frobenius_gap"] = relative_frobenius_gap(cov, predicted)
        if ok and predicted is not None:
            try:
                entry["coverage"] = coverage_check(ok, predicted, group[0].target, scale)
            except RDPGError:
                pass
        entries.append(SummaryEntry(**entry))

    return ExperimentSummary(
        entries=entries,
        total_records=len(records),
        total_failures=sum(r.failed for r in records),
    )


def run_clt_experiment(cfg: ExperimentConfig, workers: Optional[int] = None, verbose: bool = False) -> CLTResult:
    """Records for every (n, trial, method) and their per-atom summary."""
    records = _run_records(cfg, workers, verbose)
    return CLTResult(records=records, summary=summarize(cfg, records))


def run_rate_experiment(cfg: ExperimentConfig, workers: Optional[int] = None, verbose: bool = False) -> pd.DataFrame:
    """
    Median and 90th-percentile aligned OOS error per (n, method), plus the
    median in-sample 2->inf error of the embedding used.
    """
    if len(cfg.n_values) < 2:
        raise InsufficientGrid(len(cfg.n_values))
    records = _run_records(cfg, workers, verbose)
    rows = []
    for n in cfg.n_values:
        for method in cfg.ordered_methods:
            group = [r for r in records if r.n == n and r.method == method]
            ok = [r for r in group if not r.failed]
            errors = np.array([r.error for r in ok], dtype=float)
            emb_errors = np.array([r.embedding_error for r in ok], dtype=float)
            rows.append({
                "n": n,
                "method": method,
                "median_error": float(np.median(errors)) if ok else np.nan,
                "q90_error": float(np.quantile(errors, 0.9)) if ok else np.nan,
                "median_embedding_error": float(np.median(emb_errors)) if ok else np.nan,
                "trials": len(group),
                "failures": len(group) - len(ok),
            })
    return pd.DataFrame(rows, columns=RATE_COLUMNS)


def rate_ratios(table: pd.DataFrame) -> Dict[str, float]:
    """Median error at the largest n over median error at the smallest n, per method."""
    out = {}
    for method, group in table.groupby("method", sort=False):
        group = group.sort_values("n")
        out[method] = float(group["median_error"].iloc[-1] / group["median_error"].iloc[0])
    return out


# ---------------------------------------------------------------------------
# Classification trade-off
# ---------------------------------------------------------------------------

def _signed_1d(emb: Embedding, truth: np.ndarray) -> float:
    # 1-d Procrustes is a sign flip
    return 1.0 if float(emb.positions[:, 0] @ truth[:, 0]) >= 0 else -1.0


def classification_trial(mix: ScalarMixture, n: int, m: int, master_seed: int, trial: int,
                         x_oos: float, x_in: float) -> Optional[Tuple[float, float]]:
    """
    Error rates on the m trailing vertices of one RDPG(F_{lam,p,q}, n+m) draw:
    (OOS extensions against ASE(A_n), joint ASE of A_{n+m}). None when an
    embedding fails.
    """
    dist = InnerProductDistribution(dim=1, atoms=[[mix.p], [mix.q]], weights=[mix.lam, 1.0 - mix.lam])
    seed = child_seed(master_seed, n, m, trial)
    latent = sample_latent(dist, n + m, child_seed(seed, 0))
    # the pair-keyed sampler makes A_n the leading block of A_{n+m}
    A_full = sample_adjacency(latent, child_seed(seed, 1)).A
    truth_label = latent.labels[n:]
    try:
        emb_n = ase(A_full[:n, :n], 1)
        sign_n = _signed_1d(emb_n, latent.X[:n])
        oos_values = np.array([sign_n * oos_ase_lls(emb_n, A_full[n + k, :n]).w[0] for k in range(m)])
        emb_full = ase(A_full, 1)
        sign_full = _signed_1d(emb_full, latent.X)
        joint_values = sign_full * emb_full.positions[n:, 0]
    except RDPGError:
        return None
    oos_rate = float(np.mean((oos_values > x_oos).astype(int) != truth_label))
    in_rate = float(np.mean((joint_values > x_in).astype(int) != truth_label))
    return oos_rate, in_rate


def run_classification_experiment(
    mix: ScalarMixture,
    n: int,
    m: int,
    trials: int,
    master_seed: int = 0,
    workers: Optional[int] = None,
    verbose: bool = False,
) -> ClassificationSummary:
    """
    Empirical counterpart of the in-sample versus OOS trade-off on the scalar
    mixture, thresholding at x_{n+1} (OOS) and x_{n+m} (joint embedding).
    """
    if n < 2 or m < 1 or trials < 1:
        raise ValueError(f"need n >= 2, m >= 1, trials >= 1; got n={n}, m={m}, trials={trials}")
    workers = get_workers(workers)
    x_oos, x_in = lr_threshold(n + 1, mix), lr_threshold(n + m, mix)
    if verbose:
        print("-" * 60)
        print(f"🧪 [Classify] n={n}, m={m}: {trials} trials on {workers} workers...")

    runner = RunnableLambda(lambda t: classification_trial(mix, n, m, master_seed, t, x_oos, x_in))
    results = runner.batch(list(range(trials)), config={"max_concurrency": workers})
    ok = [r for r in results if r is not None]
    oos_rates = [r[0] for r in ok]
    in_rates = [r[1] for r in ok]

    summary = ClassificationSummary(
        n=n,
        m=m,
        trials=trials,
        failures=trials - len(ok),
        lam=mix.lam,
        p=mix.p,
        q=mix.q,
        threshold_oos=x_oos,
        threshold_in=x_in,
        oos_error_rate=float(np.mean(oos_rates)) if ok else float("nan"),
        in_sample_error_rate=float(np.mean(in_rates)) if ok else float("nan"),
        eta_oos=classification_error(n + 1, mix),
        eta_in=classification_error(n + m, mix),
        per_trial={"oos": oos_rates, "in_sample": in_rates},
    )
    if verbose:
        print(f"✅ [Classify] OOS error {summary.oos_error_rate:.4f} (eta {summary.eta_oos:.4f}), "
              f"joint error {summary.in_sample_error_rate:.4f} (eta {summary.eta_in:.4f}).")
    return summary
