"""
Spectral decompositions and embeddings: ASE, normalized Laplacian, LSE, and
the population (noise-free) quantities used to verify them.

Dense ``scipy.linalg.eigh`` is the only solver; every column is sign-fixed so
that its largest-magnitude entry is positive, which makes embeddings of
identical inputs reproducible bit for bit.
"""
import warnings
from typing import Optional

import numpy as np
from scipy import linalg

from .errors import ConvergenceFailure, DegenerateSpectrum, NonPositiveEigenvalue, ZeroExpectedDegree
from .schemas import (
    AdjacencyMatrix,
    Embedding,
    LatentPositions,
    Ordering,
    PopulationDecomposition,
    SpectralDecomposition,
)

SYMMETRY_TOL = 1e-12
RESIDUAL_TOL = 1e-8
GAP_TOL = 1e-10


def _as_matrix(M) -> np.ndarray:
    if isinstance(M, AdjacencyMatrix):
        return np.asarray(M.A, dtype=float)
    return np.asarray(M, dtype=float)


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    rows = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[rows, np.arange(vectors.shape[1])])
    return vectors * np.where(signs == 0, 1.0, signs)


def _candidate_eigenpairs(M: np.ndarray, d: int, ordering: Ordering):
    # the d+1 extreme eigenpairs suffice for selection and the gap check
    n = M.shape[0]
    k = min(n, d + 1)
    if 2 * k >= n:
        return linalg.eigh(M)
    top_values, top_vectors = linalg.eigh(M, subset_by_index=[n - k, n - 1])
    if ordering == "algebraic":
        return top_values, top_vectors
    low_values, low_vectors = linalg.eigh(M, subset_by_index=[0, k - 1])
    return np.concatenate([low_values, top_values]), np.hstack([low_vectors, top_vectors])


def top_d_eigen(M, d: int, ordering: Ordering = "algebraic") -> SpectralDecomposition:
    """
    The d leading eigenpairs of a symmetric matrix.

    ``algebraic`` takes the d largest eigenvalues; ``magnitude`` the d largest in
    absolute value, ties going to the larger algebraic value. Warns with
    ``DegenerateSpectrum`` when the selected block is not separated from the
    next eigenvalue.
    """
    M = _as_matrix(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    n = M.shape[0]
    if not 1 <= d <= n:
        raise ValueError(f"d must satisfy 1 <= d <= n={n}, got {d}")
    scale = max(1.0, float(np.max(np.abs(M)))) if M.size else 1.0
    if not np.allclose(M, M.T, rtol=0.0, atol=SYMMETRY_TOL * scale):
        raise ValueError("matrix is not symmetric")

    try:
        values, vectors = _candidate_eigenpairs(M, d, ordering)
    except linalg.LinAlgError as e:
        raise ConvergenceFailure(f"eigh failed: {e}") from e

    if ordering == "algebraic":
        order = np.argsort(-values, kind="stable")
    elif ordering == "magnitude":
        order = np.lexsort((-values, -np.abs(values)))
    else:
        raise ValueError(f"unknown ordering '{ordering}'")

    if d < n and abs(values[order[d - 1]] - values[order[d]]) < GAP_TOL:
        warnings.warn(
            f"eigenvalues #{d} and #{d + 1} differ by less than {GAP_TOL:g}; "
            "the selected eigenvector basis is not unique",
            DegenerateSpectrum,
            stacklevel=2,
        )

    sel_values = values[order[:d]]
    sel_vectors = _fix_signs(vectors[:, order[:d]])

    norm = float(np.linalg.norm(M))
    residuals = np.linalg.norm(M @ sel_vectors - sel_vectors * sel_values, axis=0)
    if np.any(residuals > RESIDUAL_TOL * max(norm, 1e-300)):
        raise ConvergenceFailure(f"eigenpair residual {residuals.max():.3g} exceeds tolerance")

    return SpectralDecomposition(values=sel_values, vectors=sel_vectors, ordering=ordering)


def _embed(decomp: SpectralDecomposition) -> np.ndarray:
    for i, value in enumerate(decomp.values):
        if value <= 0:
            raise NonPositiveEigenvalue(i, float(value))
    return decomp.vectors * np.sqrt(decomp.values)


def ase(A, d: int) -> Embedding:
    """Adjacency spectral embedding: U S^{1/2} from the top-d algebraic eigenpairs."""
    M = _as_matrix(A)
    decomp = top_d_eigen(M, d, "algebraic")
    return Embedding(positions=_embed(decomp), eigenvalues=decomp.values, kind="ase")


def normalized_laplacian(A) -> np.ndarray:
    """L = D^{-1/2} A D^{-1/2}, with 0^{-1/2} = 0 for isolated vertices."""
    M = _as_matrix(A)
    deg = M.sum(axis=1)
    inv_sqrt = np.zeros_like(deg)
    np.divide(1.0, np.sqrt(deg), out=inv_sqrt, where=deg > 0)
    return inv_sqrt[:, None] * M * inv_sqrt[None, :]


def lse(A, d: int) -> Embedding:
    """Laplacian spectral embedding from the top-d magnitude eigenpairs of L; keeps the degree vector."""
    M = _as_matrix(A)
    decomp = top_d_eigen(normalized_laplacian(M), d, "magnitude")
    return Embedding(
        positions=_embed(decomp),
        eigenvalues=decomp.values,
        kind="lse",
        degrees=M.sum(axis=1),
    )


def expected_degrees(X: LatentPositions) -> np.ndarray:
    """t_i = sum_j X_j^T X_i, without forming P; raises ZeroExpectedDegree for t_i <= 0."""
    t = X.X @ X.X.sum(axis=0)
    zero = np.flatnonzero(t <= 0)
    if zero.size:
        raise ZeroExpectedDegree(int(zero[0]))
    return t


def laplacian_positions(X: LatentPositions) -> np.ndarray:
    """X_tilde = T^{-1/2} X, the noise-free counterpart of an LSE."""
    return X.X / np.sqrt(expected_degrees(X))[:, None]


def population_quantities(
    X: LatentPositions,
    w_bar: Optional[np.ndarray] = None,
    require_laplacian: bool = False,
) -> PopulationDecomposition:
    """
    P = X X^T, its top-d eigenpairs, expected degrees T, X_tilde = T^{-1/2} X, and t_v for w_bar.

    X_tilde is left as None when some t_i <= 0; with ``require_laplacian`` that
    case raises ZeroExpectedDegree instead.
    """
    pos = X.X
    P = pos @ pos.T
    with warnings.catch_warnings():
        # a rank-deficient P (e.g. a single atom in d > 1) has a degenerate tail
        warnings.simplefilter("ignore", DegenerateSpectrum)
        decomp = top_d_eigen(P, X.d, "algebraic")
    t = P.sum(axis=1)
    zero = np.flatnonzero(t <= 0)
    if zero.size and require_laplacian:
        raise ZeroExpectedDegree(int(zero[0]))
    t_v = None
    if w_bar is not None:
        t_v = float(np.sum(pos @ np.asarray(w_bar, dtype=float)))
    return PopulationDecomposition(
        P=P,
        U=decomp.vectors,
        S=decomp.values,
        t=t,
        X_tilde=None if zero.size else pos / np.sqrt(t)[:, None],
        t_v=t_v,
    )
