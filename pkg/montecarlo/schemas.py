from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from rdpg.schemas import InnerProductDistribution, MLSolverOptions, OOSMethod, SolverDiagnostics


ASE_METHODS = ("lls-ase", "ml-ase")
METHOD_ORDER = ("lls-ase", "ml-ase", "lls-lse")


# -----------------------------------------------------------------------------
# CONFIG: what to simulate
# -----------------------------------------------------------------------------

class ExperimentConfig(BaseModel):
    """
    One Monte Carlo experiment: a latent-position distribution, a grid of graph
    sizes, and the OOS methods to compare on every trial.

    Example (JSON):
      {
        "distribution": {"dim": 2, "atoms": [[0.2, 0.7], [0.65, 0.3]], "weights": [0.4, 0.6]},
        "n_values": [200, 800],
        "trials": 50,
        "methods": ["lls-ase", "lls-lse"],
        "master_seed": 7
      }
    """
    model_config = ConfigDict(frozen=True)

    distribution: InnerProductDistribution = Field(..., description="Inner-product distribution F the graphs are drawn from.")
    n_values: List[int] = Field(..., min_length=1, description="In-sample graph sizes, strictly ascending.")
    trials: int = Field(..., ge=1, description="Independent trials per n.")
    methods: List[OOSMethod] = Field(
        default_factory=lambda: list(METHOD_ORDER),
        min_length=1,
        description="OOS extensions to run on each trial.",
    )
    master_seed: int = Field(0, ge=0, description="Root of every per-trial random stream.")
    ml_options: MLSolverOptions = Field(default_factory=MLSolverOptions, description="Settings for 'ml-ase'.")
    alignment: Literal["procrustes-to-truth"] = Field(
        "procrustes-to-truth",
        description="Per-trial Procrustes of the in-sample embedding onto the true (or Laplacian-scaled) positions.",
    )

    @model_validator(mode="after")
    def _check_grid(self):
        if any(n < 2 for n in self.n_values):
            raise ValueError("every n must be >= 2")
        if any(b <= a for a, b in zip(self.n_values, self.n_values[1:])):
            raise ValueError(f"n_values must be strictly ascending, got {self.n_values}")
        if min(self.n_values) < self.distribution.dim:
            raise ValueError(f"n must be at least the latent dimension d={self.distribution.dim}")
        if len(set(self.methods)) != len(self.methods):
            raise ValueError("methods must not repeat")
        return self

    @property
    def ordered_methods(self) -> List[OOSMethod]:
        return [m for m in METHOD_ORDER if m in self.methods]


# -----------------------------------------------------------------------------
# RECORDS: one row per (trial, n, method)
# -----------------------------------------------------------------------------

class TrialRecord(BaseModel):
    """
    Outcome of one OOS method on one trial.

    ``estimate`` is the OOS estimate after applying the trial's in-sample
    Procrustes rotation; ``target`` is w_bar for ASE methods and w_tilde for
    the LSE method. ``error`` is their Euclidean distance.
    """
    trial: int
    n: int
    method: OOSMethod
    atom: int = Field(..., description="Atom index of the true OOS position w_bar.")
    estimate: Optional[List[float]] = None
    target: List[float]
    error: Optional[float] = None
    failed: bool = False
    message: Optional[str] = Field(None, description="Error text when the method failed on this trial.")
    embedding_error: Optional[float] = Field(None, description="Aligned in-sample 2->inf error of the embedding used.")
    diagnostics: SolverDiagnostics = Field(default_factory=SolverDiagnostics)


# -----------------------------------------------------------------------------
# SUMMARIES
# -----------------------------------------------------------------------------

class CoverageReport(BaseModel):
    """
    Fractions of scaled, centered estimates inside predicted normal ellipses.

    Radii 1 and 2 are Mahalanobis radii (their exact masses ``mass_1sigma`` /
    ``mass_2sigma`` depend on d); ``coverage_68`` / ``coverage_95`` use the
    radii that hold 68% / 95% of the predicted mass.
    """
    coverage_1sigma: float = Field(..., ge=0.0, le=1.0)
    coverage_2sigma: float = Field(..., ge=0.0, le=1.0)
    coverage_68: float = Field(..., ge=0.0, le=1.0)
    coverage_95: float = Field(..., ge=0.0, le=1.0)
    mass_1sigma: float
    mass_2sigma: float
    count: int


class SummaryEntry(BaseModel):
    n: int
    method: OOSMethod
    atom: int
    trials: int = Field(..., description="Trials whose OOS vertex came from this atom.")
    failures: int
    atom_frequency: float = Field(..., description="Share of all trials at this n drawing this atom.")
    scale: float = Field(..., description="sqrt(n) for ASE methods, n for the LSE method.")
    center: List[float] = Field(..., description="The common target of this group.")
    mean: Optional[List[float]] = None
    covariance: Optional[List[List[float]]] = None
    predicted_covariance: Optional[List[List[float]]] = None
    relative_frobenius_gap: Optional[float] = None
    coverage: Optional[CoverageReport] = None
    median_error: Optional[float] = None
    q90_error: Optional[float] = None


class ExperimentSummary(BaseModel):
    entries: List[SummaryEntry]
    total_records: int
    total_failures: int

    def entry(self, n: int, method: str, atom: int) -> Optional[SummaryEntry]:
        for e in self.entries:
            if (e.n, e.method, e.atom) == (n, method, atom):
                return e
        return None


class CLTResult(BaseModel):
    records: List[TrialRecord]
    summary: ExperimentSummary


class ClassificationSummary(BaseModel):
    """
    Empirical error of classifying m trailing vertices of an RDPG(F_{lam,p,q}, n+m)
    draw, (a) from OOS extensions against n vertices and (b) from a joint
    embedding of all n+m, beside the predicted rates eta_{n+1} and eta_{n+m}.
    """
    model_config = ConfigDict(populate_by_name=True)

    n: int
    m: int
    trials: int
    failures: int
    lam: float = Field(..., alias="lambda")
    p: float
    q: float
    threshold_oos: float
    threshold_in: float
    oos_error_rate: float
    in_sample_error_rate: float
    eta_oos: float
    eta_in: float
    per_trial: Dict[str, List[float]] = Field(
        default_factory=dict,
        description="Per-trial error rates keyed by 'oos' and 'in_sample'.",
    )
