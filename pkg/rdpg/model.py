"""
Random dot product graph model: inner-product distributions and samplers.

All samplers are pure functions of their inputs and an integer seed. Edge draws
use a counter-based generator (Philox) keyed per row, so the Bernoulli draw for
pair (i, j) depends only on (seed, i, j): the result does not depend on n, on
iteration order, or on how the work is split.
"""
from typing import Sequence, Tuple

import numpy as np
from scipy import linalg

from .errors import InvalidDistribution, NotPSD, ProbabilityOutOfRange
from .schemas import (
    AdjacencyMatrix,
    InnerProductDistribution,
    LatentPositions,
    OOSConnectivity,
    ValidationReport,
)

PROB_TOL = 1e-12
EIGEN_FLOOR = 1e-10


def child_seed(master_seed: int, *keys: int) -> int:
    """Derive an independent 64-bit seed for the stream identified by ``keys``."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _generator(seed: int, *keys: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.Philox(ss))


def _check_probabilities(probs: np.ndarray, index_of) -> np.ndarray:
    bad = np.flatnonzero((probs < -PROB_TOL) | (probs > 1.0 + PROB_TOL))
    if bad.size:
        k = int(bad[0])
        raise ProbabilityOutOfRange(index_of(k), float(probs[k]))
    return np.clip(probs, 0.0, 1.0)


def validate_distribution(dist: InnerProductDistribution) -> ValidationReport:
    """
    Check Definition-1 validity: every pairwise atom inner product lies in [0, 1].

    Returns the atom Gram matrix and ``eta_margin``, the smallest distance of any
    inner product to the boundary of [0, 1].
    """
    atoms = dist.atom_array
    gram = atoms @ atoms.T
    for i in range(dist.k):
        for j in range(i, dist.k):
            value = float(gram[i, j])
            if value < -PROB_TOL or value > 1.0 + PROB_TOL:
                raise InvalidDistribution((i, j), value)
    eta = float(min(gram.min(), (1.0 - gram).min()))
    return ValidationReport(eta_margin=max(0.0, eta), inner_products=gram.tolist())


def distribution_from_sbm(block_matrix, block_priors: Sequence[float]) -> InnerProductDistribution:
    """
    Factor a positive semidefinite block probability matrix B = V L V^T into
    atoms (rows of V L^{1/2}) so that atom inner products reproduce B.

    Eigenvalues at or below 1e-10 are dropped, so a rank-d' block matrix yields
    d'-dimensional atoms.
    """
    B = np.asarray(block_matrix, dtype=float)
    if B.ndim != 2 or B.shape[0] != B.shape[1]:
        raise ValueError(f"block matrix must be square, got shape {B.shape}")
    if not np.allclose(B, B.T, rtol=0.0, atol=1e-12):
        raise ValueError("block matrix must be symmetric")
    if np.any(B < 0) or np.any(B > 1):
        raise ValueError("block matrix entries must lie in [0, 1]")
    if len(block_priors) != B.shape[0]:
        raise ValueError(f"{B.shape[0]} blocks but {len(block_priors)} priors")

    values, vectors = linalg.eigh((B + B.T) / 2.0)
    if values.min() < -EIGEN_FLOOR:
        raise NotPSD(float(values.min()))

    order = np.argsort(values)[::-1]
    keep = [i for i in order if values[i] > EIGEN_FLOOR]
    if not keep:
        raise ValueError("block matrix has no positive eigenvalues")
    V = vectors[:, keep]
    # deterministic orientation: largest-magnitude entry of each column positive
    signs = np.sign(V[np.argmax(np.abs(V), axis=0), np.arange(V.shape[1])])
    V = V * np.where(signs == 0, 1.0, signs)
    atoms = V * np.sqrt(values[keep])

    dist = InnerProductDistribution(
        dim=atoms.shape[1],
        atoms=atoms.tolist(),
        weights=[float(w) for w in block_priors],
    )
    validate_distribution(dist)
    return dist


def sample_latent(dist: InnerProductDistribution, n: int, seed: int) -> LatentPositions:
    """Draw n latent positions i.i.d. from the atom mixture."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    rng = _generator(seed)
    labels = rng.choice(dist.k, size=n, p=dist.weight_array)
    return LatentPositions(X=dist.atom_array[labels], labels=labels)


def sample_adjacency(X: LatentPositions, seed: int) -> AdjacencyMatrix:
    """
    Draw A_ij ~ Bernoulli(X_i^T X_j) independently for i < j; A is symmetric and hollow.

    Row i consumes its own Philox stream keyed by (seed, i), drawing one uniform
    per column j = i+1, ..., n-1 in order.
    """
    pos = X.X
    n = pos.shape[0]
    A = np.zeros((n, n), dtype=float)
    for i in range(n - 1):
        probs = _check_probabilities(pos[i + 1:] @ pos[i], lambda k, i=i: (i, i + 1 + k))
        u = _generator(seed, i).random(n - i - 1)
        A[i, i + 1:] = u < probs
    A = A + A.T
    return AdjacencyMatrix(A=A)


def sample_oos(X: LatentPositions, w_bar, seed: int, atom: int | None = None) -> OOSConnectivity:
    """Draw the edge vector a_i ~ Bernoulli(X_i^T w_bar) of one out-of-sample vertex."""
    w = np.asarray(w_bar, dtype=float)
    if w.shape != (X.d,):
        raise ValueError(f"w_bar must have length {X.d}, got shape {w.shape}")
    probs = _check_probabilities(X.X @ w, lambda k: k)
    u = _generator(seed).random(X.n)
    return OOSConnectivity(a=(u < probs).astype(float), w_bar=w, atom=atom)


def sample_rdpg(dist: InnerProductDistribution, n: int, seed: int) -> Tuple[LatentPositions, AdjacencyMatrix]:
    """Latent positions and adjacency matrix of an RDPG(F, n) draw."""
    X = sample_latent(dist, n, child_seed(seed, 0))
    A = sample_adjacency(X, child_seed(seed, 1))
    return X, A
