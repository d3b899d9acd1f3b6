"""
Subcommand implementations. Each ``cmd_*`` validates its arguments before
touching any file, does its work through ``rdpg`` / ``montecarlo``, writes its
outputs through ``tools.io`` and returns what it wrote.

Domain failures propagate as ``RDPGError`` (exit 1 in ``main``); bad flag
combinations raise ``UsageError`` (exit 2).
"""
from pathlib import Path
from typing import Optional, Sequence

from montecarlo.runner import rate_ratios, run_clt_experiment, run_classification_experiment, run_rate_experiment
from montecarlo.schemas import ClassificationSummary, CLTResult
from rdpg.limit_theory import tradeoff_table
from rdpg.model import child_seed, sample_latent, sample_oos, sample_rdpg
from rdpg.oos import oos_extend
from rdpg.schemas import Embedding, MLSolverOptions, OOSEstimate, ScalarMixture
from rdpg.spectral import ase, lse
from tools import io
from tools.config import get_epsilon, get_seed, get_workers
from tools.format import format_box, format_table


class UsageError(Exception):
    """Invalid combination of command-line arguments (exit code 2)."""


def _positive(name: str, value: int) -> None:
    if value < 1:
        raise UsageError(f"--{name} must be >= 1, got {value}")


def check_global_flags(seed: Optional[int], workers: Optional[int]) -> None:
    """Resolve --seed and --workers (or their environment defaults) before any work starts."""
    try:
        get_seed(seed)
        get_workers(workers)
    except ValueError as e:
        raise UsageError(str(e)) from e


def _mixture(lam: float, p: float, q: float) -> ScalarMixture:
    if not (0 < lam < 1 and 0 < p < q < 1):
        raise UsageError(f"need 0 < lambda < 1 and 0 < p < q < 1, got lambda={lam}, p={p}, q={q}")
    return ScalarMixture(lam=lam, p=p, q=q)


# ---------------------------------------------------------------------------
# generate / embed / oos
# ---------------------------------------------------------------------------

def cmd_generate(
    dist_file,
    n: int,
    out_graph,
    out_latent,
    out_oos=None,
    atom: Optional[int] = None,
    seed: Optional[int] = None,
) -> dict:
    """
    Sample an RDPG(F, n) graph and write its edge list and latent positions.

    With ``out_oos``, also draws one out-of-sample vertex (from the mixture, or
    at atom index ``atom``) and writes its connectivity JSON.
    """
    _positive("n", n)
    if atom is not None and out_oos is None:
        raise UsageError("--atom needs --out-oos")
    seed = get_seed(seed)
    dist = io.read_distribution(dist_file)
    if atom is not None and not 0 <= atom < dist.k:
        raise UsageError(f"--atom must lie in [0, {dist.k - 1}], got {atom}")

    X, A = sample_rdpg(dist, n, seed)
    io.write_edge_list(A, out_graph)
    io.write_latent(X, out_latent)
    written = {"graph": str(out_graph), "latent": str(out_latent), "edges": A.edge_count}

    if out_oos is not None:
        if atom is None:
            atom = int(sample_latent(dist, 1, child_seed(seed, 2)).labels[0])
        oos = sample_oos(X, dist.atom_array[atom], child_seed(seed, 3), atom=atom)
        io.write_oos(oos, out_oos)
        written["oos"] = str(out_oos)
    print(f"✅ [Generate] n={n}, {A.edge_count} edges -> {out_graph}")
    return written


def cmd_embed(graph_file, method: str, d: int, out_embedding) -> Embedding:
    """ASE or LSE of an edge-list graph into d dimensions."""
    if method not in ("ase", "lse"):
        raise UsageError(f"--method must be 'ase' or 'lse', got '{method}'")
    _positive("d", d)
    A = io.read_edge_list(graph_file)
    if d > A.n:
        raise UsageError(f"--d={d} exceeds the number of vertices n={A.n}")
    emb = ase(A, d) if method == "ase" else lse(A, d)
    io.write_embedding(emb, out_embedding)
    print(f"✅ [Embed] {method.upper()} with d={d} on n={A.n} vertices -> {out_embedding}")
    return emb


def cmd_oos(
    embedding_file,
    oos_file,
    method: str,
    out,
    epsilon: Optional[float] = None,
    max_iterations: Optional[int] = None,
) -> OOSEstimate:
    """OOS-extend one vertex against a stored embedding."""
    if method not in ("lls-ase", "ml-ase", "lls-lse"):
        raise UsageError(f"--method must be one of lls-ase, ml-ase, lls-lse, got '{method}'")
    epsilon = get_epsilon(epsilon)
    if not 0 < epsilon < 0.5:
        raise UsageError(f"--epsilon must lie in (0, 0.5), got {epsilon}")
    options = {"epsilon": epsilon}
    if max_iterations is not None:
        _positive("max-iterations", max_iterations)
        options["max_iterations"] = max_iterations

    emb = io.read_embedding(embedding_file)
    oos = io.read_oos(oos_file)
    estimate = oos_extend(emb, oos, method, MLSolverOptions(**options))
    io.write_oos_result(estimate, out)
    print(f"✅ [OOS] {method}: w = {estimate.w.tolist()} -> {out}")
    return estimate


# ---------------------------------------------------------------------------
# Experiments
# ---------------------------------------------------------------------------

def _load_config(config_file, seed: Optional[int]):
    cfg = io.read_config(config_file)
    if seed is not None:
        cfg = cfg.model_copy(update={"master_seed": get_seed(seed)})
    return cfg


def cmd_clt(config_file, out_records, out_summary, seed: Optional[int] = None,
            workers: Optional[int] = None) -> CLTResult:
    """Run the CLT experiment; write the records CSV and the summary JSON."""
    cfg = _load_config(config_file, seed)
    print("\n" + format_box([f"📐 CLT experiment: n={cfg.n_values}, {cfg.trials} trials"], width=80) + "\n")
    result = run_clt_experiment(cfg, workers=workers, verbose=True)
    io.write_records(result.records, cfg.distribution.dim, out_records)
    io.write_summary(result.summary, out_summary)

    table = [
        [e.n, e.method, e.atom, e.trials, e.failures,
         e.relative_frobenius_gap, e.coverage.coverage_2sigma if e.coverage else None]
        for e in result.summary.entries
    ]
    print(format_table(table, ["n", "method", "atom", "trials", "failed", "cov gap", "cov. r=2"]))
    return result


def cmd_rates(config_file, out_csv, seed: Optional[int] = None, workers: Optional[int] = None):
    """Run the rate experiment; write its table as CSV."""
    cfg = _load_config(config_file, seed)
    print("\n" + format_box([f"📉 Rate experiment: n={cfg.n_values}, {cfg.trials} trials"], width=80) + "\n")
    table = run_rate_experiment(cfg, workers=workers, verbose=True)
    io.write_csv(table, out_csv)
    print(format_table(table.itertuples(index=False), list(table.columns), floatfmt=".5g"))
    for method, ratio in rate_ratios(table).items():
        print(f"📊 [Rates] {method}: median error ratio n={cfg.n_values[-1]} / n={cfg.n_values[0]} = {ratio:.4f}")
    return table


def cmd_tradeoff(lam: float, p: float, q: float, n_list: Sequence[int], m_list: Sequence[int], out_csv):
    """Write the eta_{n+m} / eta_{n+1} sweep for the scalar mixture."""
    _mixture(lam, p, q)
    for n in n_list:
        _positive("n", n)
    for m in m_list:
        _positive("m", m)
    table = tradeoff_table(lam, p, q, n_list, m_list)
    io.write_csv(table, out_csv)
    print(f"✅ [Trade-off] {len(table)} rows -> {out_csv}")
    return table


def cmd_classify(lam: float, p: float, q: float, n: int, m: int, trials: int, out_json,
                 seed: Optional[int] = None, workers: Optional[int] = None) -> ClassificationSummary:
    """Empirical OOS versus joint-embedding classification error on the scalar mixture."""
    mix = _mixture(lam, p, q)
    _positive("m", m)
    _positive("trials", trials)
    if n < 2:
        raise UsageError(f"--n must be >= 2, got {n}")
    summary = run_classification_experiment(mix, n, m, trials, master_seed=get_seed(seed),
                                            workers=workers, verbose=True)
    io.write_model(summary, out_json)
    return summary


# ---------------------------------------------------------------------------
# Pipeline
# ---------------------------------------------------------------------------

def cmd_pipeline(
    dist_file,
    n: int,
    d: int,
    out_dir,
    embedding: str = "ase",
    method: Optional[str] = None,
    atom: Optional[int] = None,
    epsilon: Optional[float] = None,
    seed: Optional[int] = None,
) -> dict:
    """generate -> embed -> oos as one langgraph run; every artifact lands in ``out_dir``."""
    from graph.pipeline_graph import build_graph

    _positive("n", n)
    _positive("d", d)
    if d > n:
        raise UsageError(f"--d={d} exceeds --n={n}")
    method = method or ("lls-ase" if embedding == "ase" else "lls-lse")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    graph = build_graph()
    return graph.invoke({
        "dist_file": str(dist_file),
        "n": n,
        "d": d,
        "embedding": embedding,
        "method": method,
        "atom": atom,
        "epsilon": epsilon,
        "seed": get_seed(seed),
        "out_dir": str(out),
    })


