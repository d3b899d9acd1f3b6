"""
Orthogonal alignment utilities.

RDPG latent positions are identifiable only up to an orthogonal transform, so
estimates are compared after Procrustes alignment. Reflections are allowed.
"""
import numpy as np
from scipy import linalg

from .errors import ShapeMismatch
from .schemas import OrthogonalAlignment


def _pair(source, target):
    S = np.atleast_2d(np.asarray(source, dtype=float))
    T = np.atleast_2d(np.asarray(target, dtype=float))
    if S.shape != T.shape:
        raise ShapeMismatch(S.shape, T.shape)
    return S, T


def procrustes(source, target) -> OrthogonalAlignment:
    """
    Orthogonal Q minimizing ||source Q - target||_F.

    With U Sigma V^T the SVD of source^T target, Q = U V^T.
    """
    S, T = _pair(source, target)
    if not np.any(S):
        raise ValueError("source matrix is all zeros; the alignment is undefined")
    Q, _ = linalg.orthogonal_procrustes(S, T)
    return OrthogonalAlignment(Q=Q, residual=float(np.linalg.norm(S @ Q - T)))


def subspace_alignment(U_pop, U_hat) -> OrthogonalAlignment:
    """
    Q = V1 V2^T from the SVD V1 Lambda V2^T of U_pop^T U_hat.

    ``residual`` is ||U_pop^T U_hat - Q||_F, which shrinks like n^{-1} log n
    for RDPG draws.
    """
    U, V = _pair(U_pop, U_hat)
    M = U.T @ V
    V1, _, V2t = linalg.svd(M)
    Q = V1 @ V2t
    return OrthogonalAlignment(Q=Q, residual=float(np.linalg.norm(M - Q)))


def two_to_infty(M) -> float:
    """Maximum Euclidean row norm."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.size == 0:
        return 0.0
    return float(np.max(np.linalg.norm(M, axis=1)))


def two_to_infty_error(estimate, truth) -> float:
    """||estimate - truth Q||_{2,inf} with Q the Procrustes map of truth onto estimate."""
    E, X = _pair(estimate, truth)
    Q = procrustes(X, E).Q
    return two_to_infty(E - X @ Q)
