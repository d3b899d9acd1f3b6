from typing import List, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


EmbeddingKind = Literal["ase", "lse"]
"""
Which spectral embedding produced the positions.

- "ase": adjacency spectral embedding, rows of U S^{1/2} from the top-d algebraic eigenpairs of A.
- "lse": Laplacian spectral embedding, rows of U S^{1/2} from the top-d magnitude eigenpairs of D^{-1/2} A D^{-1/2}.
"""

OOSMethod = Literal["lls-ase", "ml-ase", "lls-lse"]
"""
Out-of-sample extension method.

- "lls-ase": linear least squares against an ASE.
- "ml-ase": constrained plug-in maximum likelihood against an ASE.
- "lls-lse": linear least squares on degree-normalized edges against an LSE.
"""

Ordering = Literal["algebraic", "magnitude"]

WEIGHT_TOL = 1e-12


def _readonly(values, ndim: int, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    if arr.ndim != ndim:
        raise ValueError(f"expected a {ndim}-d array, got shape {arr.shape}")
    if dtype is float and not np.all(np.isfinite(arr)):
        raise ValueError("array contains NaN or infinite entries")
    arr.flags.writeable = False
    return arr


class _ArrayModel(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)


# -----------------------------------------------------------------------------
# MODEL: latent-position distributions and sampled graphs
# -----------------------------------------------------------------------------

class InnerProductDistribution(BaseModel):
    """
    A finite mixture of point masses in R^d whose pairwise atom inner products
    are valid edge probabilities.

    Shape and weight invariants are checked on construction; the inner-product
    condition is checked by ``rdpg.model.validate_distribution`` so that a
    violation surfaces as ``InvalidDistribution`` naming the bad pair.

    Example:
      InnerProductDistribution(
        dim=2,
        atoms=[[0.2, 0.7], [0.65, 0.3]],
        weights=[0.4, 0.6]
      )
    """
    model_config = ConfigDict(frozen=True)

    dim: int = Field(..., gt=0, description="Latent dimension d.")
    atoms: List[List[float]] = Field(..., min_length=1, description="k atoms, each a length-d vector.")
    weights: List[float] = Field(..., min_length=1, description="k mixture weights, positive, summing to 1.")

    @model_validator(mode="after")
    def _check_shapes(self):
        if len(self.atoms) != len(self.weights):
            raise ValueError(f"{len(self.atoms)} atoms but {len(self.weights)} weights")
        for i, atom in enumerate(self.atoms):
            if len(atom) != self.dim:
                raise ValueError(f"atom {i} has length {len(atom)}, expected dim={self.dim}")
        if any(w <= 0 for w in self.weights):
            raise ValueError("every weight must be > 0")
        if abs(sum(self.weights) - 1.0) > WEIGHT_TOL:
            raise ValueError(f"weights sum to {sum(self.weights)!r}, expected 1")
        return self

    @property
    def k(self) -> int:
        return len(self.atoms)

    @property
    def atom_array(self) -> np.ndarray:
        return np.asarray(self.atoms, dtype=float).reshape(self.k, self.dim)

    @property
    def weight_array(self) -> np.ndarray:
        return np.asarray(self.weights, dtype=float)


class ValidationReport(BaseModel):
    eta_margin: float = Field(..., ge=0.0, description="min over atom pairs of min(x^T y, 1 - x^T y).")
    inner_products: List[List[float]] = Field(..., description="k x k atom Gram matrix.")


class LatentPositions(_ArrayModel):
    """n x d latent positions, one row per vertex, plus the atom each row was drawn from."""
    X: np.ndarray = Field(..., description="n x d matrix of latent positions.")
    labels: Optional[np.ndarray] = Field(None, description="Atom index per row when sampled from a mixture.")

    @field_validator("X", mode="before")
    @classmethod
    def _coerce_x(cls, v):
        return _readonly(v, 2)

    @field_validator("labels", mode="before")
    @classmethod
    def _coerce_labels(cls, v):
        return None if v is None else _readonly(v, 1, dtype=int)

    @model_validator(mode="after")
    def _check_labels(self):
        if self.labels is not None and len(self.labels) != self.X.shape[0]:
            raise ValueError("labels length must match the number of rows of X")
        return self

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def head(self, n: int) -> "LatentPositions":
        """The first n rows (the in-sample vertices of a trial)."""
        labels = None if self.labels is None else self.labels[:n]
        return LatentPositions(X=self.X[:n], labels=labels)


class AdjacencyMatrix(_ArrayModel):
    """Symmetric, hollow, binary adjacency matrix of a simple undirected graph."""
    A: np.ndarray = Field(..., description="n x n symmetric 0/1 matrix with zero diagonal.")

    @field_validator("A", mode="before")
    @classmethod
    def _coerce(cls, v):
        arr = _readonly(v, 2)
        if arr.shape[0] != arr.shape[1]:
            raise ValueError(f"adjacency matrix must be square, got {arr.shape}")
        if not np.array_equal(arr, arr.T):
            raise ValueError("adjacency matrix must be symmetric")
        if np.any(np.diag(arr) != 0):
            raise ValueError("adjacency matrix must be hollow (zero diagonal)")
        if not np.all((arr == 0) | (arr == 1)):
            raise ValueError("adjacency matrix entries must be 0 or 1")
        return arr

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def degrees(self) -> np.ndarray:
        return self.A.sum(axis=1)

    @property
    def edge_count(self) -> int:
        return int(self.A.sum() // 2)


class OOSConnectivity(_ArrayModel):
    """Edges between one out-of-sample vertex and the n in-sample vertices."""
    a: np.ndarray = Field(..., description="Binary vector in {0,1}^n.")
    w_bar: Optional[np.ndarray] = Field(None, description="True latent position (simulation only).")
    atom: Optional[int] = Field(None, description="Atom index of w_bar when drawn from a mixture.")

    @field_validator("a", mode="before")
    @classmethod
    def _coerce_a(cls, v):
        arr = _readonly(v, 1)
        if not np.all((arr == 0) | (arr == 1)):
            raise ValueError("connectivity entries must be 0 or 1")
        return arr

    @field_validator("w_bar", mode="before")
    @classmethod
    def _coerce_w(cls, v):
        return None if v is None else _readonly(v, 1)

    @property
    def n(self) -> int:
        return self.a.shape[0]

    @property
    def degree(self) -> float:
        return float(self.a.sum())


# -----------------------------------------------------------------------------
# SPECTRAL: decompositions and embeddings
# -----------------------------------------------------------------------------

class SpectralDecomposition(_ArrayModel):
    values: np.ndarray = Field(..., description="d selected eigenvalues, in selection order.")
    vectors: np.ndarray = Field(..., description="n x d orthonormal eigenvectors; largest-|entry| of each column positive.")
    ordering: Ordering = Field(..., description="How the d eigenpairs were selected.")

    @field_validator("values", mode="before")
    @classmethod
    def _coerce_values(cls, v):
        return _readonly(v, 1)

    @field_validator("vectors", mode="before")
    @classmethod
    def _coerce_vectors(cls, v):
        return _readonly(v, 2)


class Embedding(_ArrayModel):
    """
    Estimated latent positions of the in-sample vertices.

    ``positions.T @ positions`` equals ``diag(eigenvalues)``; the least-squares
    OOS closed forms rely on it, so it is checked on construction.
    """
    positions: np.ndarray = Field(..., description="n x d matrix of embedded vertices.")
    eigenvalues: np.ndarray = Field(..., description="d retained eigenvalues.")
    kind: EmbeddingKind = Field(..., description="ASE or LSE.")
    degrees: Optional[np.ndarray] = Field(None, description="In-sample degree vector (LSE only).")

    @field_validator("positions", mode="before")
    @classmethod
    def _coerce_positions(cls, v):
        return _readonly(v, 2)

    @field_validator("eigenvalues", mode="before")
    @classmethod
    def _coerce_eigenvalues(cls, v):
        return _readonly(v, 1)

    @field_validator("degrees", mode="before")
    @classmethod
    def _coerce_degrees(cls, v):
        return None if v is None else _readonly(v, 1)

    @model_validator(mode="after")
    def _check_consistency(self):
        n, d = self.positions.shape
        if self.eigenvalues.shape != (d,):
            raise ValueError(f"{d} embedding columns but {self.eigenvalues.shape[0]} eigenvalues")
        gram = self.positions.T @ self.positions
        scale = max(1.0, float(np.max(np.abs(self.eigenvalues))))
        if not np.allclose(gram, np.diag(self.eigenvalues), rtol=0.0, atol=1e-8 * scale):
            raise ValueError("positions^T positions must equal diag(eigenvalues)")
        if self.kind == "lse" and self.degrees is None:
            raise ValueError("an LSE embedding must carry the in-sample degree vector")
        if self.degrees is not None and self.degrees.shape != (n,):
            raise ValueError(f"degree vector has length {self.degrees.shape[0]}, expected {n}")
        return self

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    @property
    def d(self) -> int:
        return self.positions.shape[1]

    @property
    def vectors(self) -> np.ndarray:
        """The orthonormal eigenvector block U = positions diag(eigenvalues)^{-1/2}."""
        return self.positions / np.sqrt(self.eigenvalues)


class PopulationDecomposition(_ArrayModel):
    """Noise-free counterparts of the sample quantities, computed from true latent positions."""
    P: np.ndarray = Field(..., description="n x n edge-probability matrix X X^T.")
    U: np.ndarray = Field(..., description="n x d top eigenvectors of P.")
    S: np.ndarray = Field(..., description="d top eigenvalues of P.")
    t: np.ndarray = Field(..., description="Expected degrees t_i = sum_j X_j^T X_i.")
    X_tilde: Optional[np.ndarray] = Field(None, description="T^{-1/2} X, the population Laplacian embedding; None when some t_i <= 0.")
    t_v: Optional[float] = Field(None, description="Expected OOS degree sum_j X_j^T w_bar.")


# -----------------------------------------------------------------------------
# OOS: solver options and estimates
# -----------------------------------------------------------------------------

class MLSolverOptions(BaseModel):
    """Settings for the projected-gradient ML OOS solver."""
    model_config = ConfigDict(frozen=True)

    epsilon: float = Field(0.05, gt=0.0, lt=0.5, description="Constraint margin: eps <= X_i^T w <= 1 - eps.")
    max_iterations: int = Field(5000, gt=0, description="Iteration cap for projected gradient ascent.")
    gradient_tolerance: float = Field(1e-8, gt=0.0, description="Stop when the projected gradient norm falls below this.")
    shrink: float = Field(0.5, gt=0.0, lt=1.0, description="Backtracking step shrink factor.")
    sufficient_decrease: float = Field(1e-4, gt=0.0, lt=1.0, description="Armijo constant.")


class SolverDiagnostics(BaseModel):
    iterations: int = 0
    final_projected_gradient_norm: float = 0.0
    active_constraints: int = 0
    initial_objective: Optional[float] = None
    final_objective: Optional[float] = None


class OOSEstimate(_ArrayModel):
    w: np.ndarray = Field(..., description="Estimated d-dimensional position of the OOS vertex.")
    method: OOSMethod
    diagnostics: SolverDiagnostics = Field(default_factory=SolverDiagnostics)

    @field_validator("w", mode="before")
    @classmethod
    def _coerce_w(cls, v):
        return _readonly(v, 1)


class LogLikelihood(_ArrayModel):
    value: float
    gradient: np.ndarray
    hessian: np.ndarray


# -----------------------------------------------------------------------------
# ALIGN
# -----------------------------------------------------------------------------

class OrthogonalAlignment(_ArrayModel):
    Q: np.ndarray = Field(..., description="d x d orthogonal matrix.")
    residual: float = Field(..., ge=0.0, description="Frobenius objective at Q.")


# -----------------------------------------------------------------------------
# LIMIT THEORY
# -----------------------------------------------------------------------------

class PopulationSummary(_ArrayModel):
    mu: np.ndarray = Field(..., description="E X_1.")
    Delta: np.ndarray = Field(..., description="E X_1 X_1^T.")
    DeltaTilde: Optional[np.ndarray] = Field(None, description="E X_1 X_1^T / (mu^T X_1).")


class ScalarMixture(BaseModel):
    """F = lam * delta_p + (1 - lam) * delta_q on the unit interval, 0 < p < q < 1."""
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    lam: float = Field(..., gt=0.0, lt=1.0, alias="lambda", description="Weight on the atom p.")
    p: float = Field(..., gt=0.0, lt=1.0)
    q: float = Field(..., gt=0.0, lt=1.0)

    @model_validator(mode="after")
    def _check_order(self):
        if not self.p < self.q:
            raise ValueError(f"need p < q, got p={self.p}, q={self.q}")
        return self


class ScalarMixtureVariances(BaseModel):
    sigma2_p: float
    sigma2_q: float
    Delta: float
