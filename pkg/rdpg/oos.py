"""
Out-of-sample (OOS) extensions: embed a new vertex from its edge vector and an
existing in-sample embedding, without a new eigendecomposition.

- ``oos_ase_lls``: least squares against an ASE, w = S^{-1/2} U^T a.
- ``oos_ase_ml``: maximizer of the plug-in Bernoulli log-likelihood over
  T_eps = {w : eps <= X_i^T w <= 1 - eps for all i}.
- ``oos_lse_lls``: least squares against an LSE on degree-normalized edges.
"""
from typing import List, Optional, Sequence

import numpy as np
from langchain_core.runnables import RunnableLambda
from scipy import optimize

from tools.config import get_workers
from .errors import (
    DomainViolation,
    InfeasibleConstraintSet,
    IsolatedOOSVertex,
    MaxIterationsExceeded,
    MethodMismatch,
    RankDeficient,
    RDPGError,
    ShapeMismatch,
    ZeroDegreeNeighbor,
)
from .schemas import (
    Embedding,
    LogLikelihood,
    MLSolverOptions,
    OOSConnectivity,
    OOSEstimate,
    OOSMethod,
    SolverDiagnostics,
)

ACTIVE_TOL = 1e-10
START_SHRINK = 0.99
MIN_STEP = 1e-30


def _edges(emb: Embedding, a) -> np.ndarray:
    vec = a.a if isinstance(a, OOSConnectivity) else np.asarray(a, dtype=float)
    if vec.shape != (emb.n,):
        raise ShapeMismatch(vec.shape, (emb.n,))
    return np.asarray(vec, dtype=float)


def _require_kind(emb: Embedding, method: str, kind: str) -> None:
    if emb.kind != kind:
        raise MethodMismatch(method, emb.kind)


def _require_full_rank(emb: Embedding) -> None:
    if np.any(emb.eigenvalues <= 0) or np.linalg.matrix_rank(emb.positions) < emb.d:
        raise RankDeficient(f"embedding of dimension {emb.d} does not have full column rank")


# ---------------------------------------------------------------------------
# Least squares
# ---------------------------------------------------------------------------

def oos_ase_lls(emb: Embedding, a) -> OOSEstimate:
    """argmin_w sum_i (a_i - X_i^T w)^2, via the closed form S^{-1/2} U^T a (O(d n))."""
    _require_kind(emb, "lls-ase", "ase")
    avec = _edges(emb, a)
    _require_full_rank(emb)
    w = (emb.vectors.T @ avec) / np.sqrt(emb.eigenvalues)
    return OOSEstimate(w=w, method="lls-ase")


def oos_lse_lls(emb: Embedding, a) -> OOSEstimate:
    """
    argmin_w sum_i (a_i / sqrt(d_v d_i) - X_i^T w)^2 against an LSE.

    Estimates w_bar / sqrt(n mu^T w_bar), the Laplacian embedding of the OOS vertex.
    """
    _require_kind(emb, "lls-lse", "lse")
    avec = _edges(emb, a)
    _require_full_rank(emb)
    d_v = float(avec.sum())
    if d_v <= 0:
        raise IsolatedOOSVertex()
    deg = emb.degrees
    bad = np.flatnonzero((avec > 0) & (deg <= 0))
    if bad.size:
        raise ZeroDegreeNeighbor(int(bad[0]))
    b = np.zeros_like(avec)
    hit = avec > 0
    b[hit] = avec[hit] / np.sqrt(d_v * deg[hit])
    w = (emb.vectors.T @ b) / np.sqrt(emb.eigenvalues)
    return OOSEstimate(w=w, method="lls-lse")


# ---------------------------------------------------------------------------
# Plug-in maximum likelihood
# ---------------------------------------------------------------------------

def loglik(emb: Embedding, a, w) -> LogLikelihood:
    """Value, gradient and Hessian of l(w) = sum a_i log X_i^T w + (1 - a_i) log(1 - X_i^T w)."""
    avec = _edges(emb, a)
    X = emb.positions
    w = np.asarray(w, dtype=float)
    p = X @ w
    bad = np.flatnonzero((p <= 0) | (p >= 1))
    if bad.size:
        k = int(bad[0])
        raise DomainViolation(k, float(p[k]))
    value = float(np.sum(avec * np.log(p) + (1 - avec) * np.log1p(-p)))
    gradient = X.T @ ((avec - p) / (p * (1 - p)))
    weights = avec / p ** 2 + (1 - avec) / (1 - p) ** 2
    hessian = -(X * weights[:, None]).T @ X
    return LogLikelihood(value=value, gradient=gradient, hessian=hessian)


def _objective_gain(avec: np.ndarray, p: np.ndarray, dp: np.ndarray) -> float:
    # l(w + dw) - l(w) without cancellation, dp = X dw
    return float(np.sum(avec * np.log1p(dp / p) + (1 - avec) * np.log1p(-dp / (1 - p))))


def _max_step(p: np.ndarray, q: np.ndarray, lo: float, hi: float, skip: np.ndarray) -> float:
    """Largest alpha keeping lo <= p + alpha q <= hi, ignoring constraints flagged in ``skip``."""
    alpha = np.inf
    up = (q > 0) & ~skip
    if np.any(up):
        alpha = min(alpha, float(np.min((hi - p[up]) / q[up])))
    down = (q < 0) & ~skip
    if np.any(down):
        alpha = min(alpha, float(np.min((p[down] - lo) / -q[down])))
    return max(alpha, 0.0)


def _interior_point(X: np.ndarray, eps: float) -> np.ndarray:
    """A strictly feasible point of T_eps: first along the mean row, else a Chebyshev-style LP."""
    lo, hi = eps, 1.0 - eps
    m = X.mean(axis=0)
    c = X @ m
    if np.all(c != 0):
        t_lo = np.where(c > 0, lo / c, hi / c)
        t_hi = np.where(c > 0, hi / c, lo / c)
        left, right = float(t_lo.max()), float(t_hi.min())
        if left < right:
            return 0.5 * (left + right) * m

    n, d = X.shape
    # maximize slack s subject to lo + s <= X w <= hi - s
    cost = np.zeros(d + 1)
    cost[-1] = -1.0
    ones = np.ones((n, 1))
    A_ub = np.vstack([np.hstack([-X, ones]), np.hstack([X, ones])])
    b_ub = np.concatenate([np.full(n, -lo), np.full(n, hi)])
    bounds = [(None, None)] * d + [(None, 0.5)]
    res = optimize.linprog(cost, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs")
    if res.status != 0 or res.x[-1] <= 1e-12:
        raise InfeasibleConstraintSet(eps)
    return res.x[:d]


def _feasible_start(X: np.ndarray, w_ls: np.ndarray, eps: float) -> np.ndarray:
    lo, hi = eps, 1.0 - eps
    p = X @ w_ls
    if np.all((p > lo) & (p < hi)):
        return w_ls
    w0 = _interior_point(X, eps)
    step = _max_step(X @ w0, X @ (w_ls - w0), lo, hi, np.zeros(X.shape[0], dtype=bool))
    return w0 + START_SHRINK * min(1.0, step) * (w_ls - w0)


def _tangent_direction(g: np.ndarray, X: np.ndarray, at_lo: np.ndarray, at_hi: np.ndarray) -> np.ndarray:
    """Projection of g onto the tangent cone of T_eps (Moreau: g minus its polar-cone part)."""
    if not (np.any(at_lo) or np.any(at_hi)):
        return g
    normals = np.vstack([-X[at_lo], X[at_hi]]).T
    lam, _ = optimize.nnls(normals, g)
    return g - normals @ lam


def oos_ase_ml(emb: Embedding, a, opts: Optional[MLSolverOptions] = None) -> OOSEstimate:
    """
    Constrained plug-in ML OOS extension by projected gradient ascent.

    Starts from the LLS solution (pulled strictly inside T_eps when needed),
    steps along the gradient projected onto the tangent cone of the active
    constraints, caps each step at the feasibility boundary, and backtracks until
    Armijo sufficient increase holds. Trial steps follow Barzilai-Borwein. The
    returned point is a KKT point of a concave program, hence the constrained
    maximum.
    """
    opts = opts or MLSolverOptions()
    _require_kind(emb, "ml-ase", "ase")
    avec = _edges(emb, a)
    _require_full_rank(emb)
    X = emb.positions
    lo, hi = opts.epsilon, 1.0 - opts.epsilon

    w = _feasible_start(X, oos_ase_lls(emb, avec).w, opts.epsilon)
    current = loglik(emb, avec, w)
    initial_value = current.value
    # 1 / largest curvature as the first trial step
    alpha_guess = 1.0 / max(float(np.linalg.eigvalsh(-current.hessian).max()), 1e-12)

    def _estimate(w, iterations, pg_norm, active):
        return OOSEstimate(
            w=w,
            method="ml-ase",
            diagnostics=SolverDiagnostics(
                iterations=iterations,
                final_projected_gradient_norm=pg_norm,
                active_constraints=active,
                initial_objective=initial_value,
                final_objective=loglik(emb, avec, w).value,
            ),
        )

    pg_norm = np.inf
    active = 0
    for iteration in range(opts.max_iterations + 1):
        p = X @ w
        at_lo = p - lo <= ACTIVE_TOL
        at_hi = hi - p <= ACTIVE_TOL
        active = int(np.count_nonzero(at_lo | at_hi))
        direction = _tangent_direction(current.gradient, X, at_lo, at_hi)
        pg_norm = float(np.linalg.norm(direction))
        if pg_norm <= opts.gradient_tolerance:
            return _estimate(w, iteration, pg_norm, active)
        if iteration == opts.max_iterations:
            break

        q = X @ direction
        alpha = min(alpha_guess, _max_step(p, q, lo, hi, at_lo | at_hi))
        slope = float(current.gradient @ direction)
        while alpha > MIN_STEP:
            if _objective_gain(avec, p, alpha * q) >= opts.sufficient_decrease * alpha * slope:
                break
            alpha *= opts.shrink
        else:
            # no ascent possible at machine precision
            break

        w_next = w + alpha * direction
        nxt = loglik(emb, avec, w_next)
        s = w_next - w
        y = nxt.gradient - current.gradient
        curvature = -float(s @ y)
        alpha_guess = float(s @ s) / curvature if curvature > 0 else alpha / opts.shrink
        w, current = w_next, nxt

    raise MaxIterationsExceeded(_estimate(w, iteration, pg_norm, active), iteration)


# ---------------------------------------------------------------------------
# Dispatch and batches
# ---------------------------------------------------------------------------

def oos_extend(emb: Embedding, a, method: OOSMethod, opts: Optional[MLSolverOptions] = None) -> OOSEstimate:
    """Run the named OOS extension against ``emb``."""
    if method == "lls-ase":
        return oos_ase_lls(emb, a)
    if method == "ml-ase":
        return oos_ase_ml(emb, a, opts)
    if method == "lls-lse":
        return oos_lse_lls(emb, a)
    raise ValueError(f"unknown OOS method '{method}'")


def oos_batch(
    emb: Embedding,
    connectivities: Sequence,
    method: OOSMethod,
    opts: Optional[MLSolverOptions] = None,
    workers: Optional[int] = None,
) -> List[OOSEstimate | RDPGError]:
    """
    Embed several OOS vertices, each in isolation, against one shared embedding.

    Results keep input order; a vertex whose extension fails gets its
    ``RDPGError`` in place of an estimate.
    """
    runner = RunnableLambda(lambda a: oos_extend(emb, a, method, opts))
    results = runner.batch(
        list(connectivities),
        config={"max_concurrency": workers or get_workers()},
        return_exceptions=True,
    )
    for r in results:
        if isinstance(r, Exception) and not isinstance(r, RDPGError):
            raise r
    return results
