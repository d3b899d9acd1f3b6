"""
Exception hierarchy for the RDPG embedding / out-of-sample toolkit.

Every domain failure is an ``RDPGError`` so callers (the CLI, the Monte Carlo
runner) can catch one type and report it. Each subclass keeps the offending
index/value as attributes for programmatic inspection.
"""
from typing import Any, Optional


class RDPGError(Exception):
    """Base class for all domain errors (CLI exit code 1)."""


class DegenerateSpectrum(UserWarning):
    """Eigengap at the selection boundary is below 1e-10; the eigenvector basis is ill-defined."""


# ---------------------------------------------------------------------------
# model
# ---------------------------------------------------------------------------

class InvalidDistribution(RDPGError):
    def __init__(self, pair: tuple[int, int], value: float):
        self.pair = pair
        self.value = value
        super().__init__(
            f"Atoms {pair[0]} and {pair[1]} have inner product {value:.6g}, outside [0, 1]"
        )


class NotPSD(RDPGError):
    def __init__(self, eigenvalue: float):
        self.eigenvalue = eigenvalue
        super().__init__(f"Block matrix is not positive semidefinite (eigenvalue {eigenvalue:.6g})")


class ProbabilityOutOfRange(RDPGError):
    def __init__(self, index: Any, value: float):
        self.index = index
        self.value = value
        super().__init__(f"Edge probability at {index} is {value:.6g}, outside [0, 1]")


# ---------------------------------------------------------------------------
# spectral
# ---------------------------------------------------------------------------

class ConvergenceFailure(RDPGError):
    pass


class NonPositiveEigenvalue(RDPGError):
    def __init__(self, index: int, value: float):
        self.index = index
        self.value = value
        super().__init__(
            f"Selected eigenvalue #{index} is {value:.6g}; the embedding needs strictly positive eigenvalues"
        )


class ZeroExpectedDegree(RDPGError):
    def __init__(self, index: int):
        self.index = index
        super().__init__(f"Vertex {index} has zero expected degree")


# ---------------------------------------------------------------------------
# oos
# ---------------------------------------------------------------------------

class RankDeficient(RDPGError):
    pass


class DomainViolation(RDPGError):
    def __init__(self, index: int, value: float):
        self.index = index
        self.value = value
        super().__init__(
            f"Estimated edge probability for vertex {index} is {value:.6g}; log-likelihood needs (0, 1)"
        )


class InfeasibleConstraintSet(RDPGError):
    def __init__(self, epsilon: float):
        self.epsilon = epsilon
        super().__init__(f"No w satisfies eps <= X_i^T w <= 1 - eps for all i (eps={epsilon})")


class MaxIterationsExceeded(RDPGError):
    def __init__(self, best: Any, iterations: int):
        self.best = best
        self.iterations = iterations
        super().__init__(f"ML solver did not converge in {iterations} iterations")


class IsolatedOOSVertex(RDPGError):
    def __init__(self):
        super().__init__("Out-of-sample vertex has no edges to the in-sample graph (d_v = 0)")


class ZeroDegreeNeighbor(RDPGError):
    def __init__(self, index: int):
        self.index = index
        super().__init__(f"Out-of-sample vertex is adjacent to in-sample vertex {index}, whose degree is 0")


class MethodMismatch(RDPGError):
    def __init__(self, method: str, kind: str):
        self.method = method
        self.kind = kind
        super().__init__(f"Method '{method}' cannot be applied to an {kind.upper()} embedding")


# ---------------------------------------------------------------------------
# align
# ---------------------------------------------------------------------------

class ShapeMismatch(RDPGError):
    def __init__(self, left: tuple, right: tuple):
        self.left = left
        self.right = right
        super().__init__(f"Shape mismatch: {left} vs {right}")


# ---------------------------------------------------------------------------
# limit_theory
# ---------------------------------------------------------------------------

class NonpositiveMeanInnerProduct(RDPGError):
    def __init__(self, value: float, index: Optional[int] = None):
        self.value = value
        self.index = index
        where = f" for atom {index}" if index is not None else ""
        super().__init__(f"mu^T x is {value:.6g}{where}; it must be positive")


class FullRankViolation(RDPGError):
    def __init__(self, which: str, smallest: float):
        self.which = which
        self.smallest = smallest
        super().__init__(f"{which} is singular (smallest eigenvalue {smallest:.3g})")


class EtaViolation(RDPGError):
    def __init__(self, eta_margin: float):
        self.eta_margin = eta_margin
        super().__init__(
            f"Distribution has eta_margin {eta_margin:.3g}; inner products must lie strictly inside (0, 1)"
        )


class NoRootInBracket(RDPGError):
    def __init__(self, lo: float, hi: float):
        self.lo = lo
        self.hi = hi
        super().__init__(f"Threshold equation has no sign change on [{lo:.6g}, {hi:.6g}]")


# ---------------------------------------------------------------------------
# montecarlo
# ---------------------------------------------------------------------------

class InsufficientGrid(RDPGError):
    def __init__(self, count: int):
        self.count = count
        super().__init__(f"Rate experiment needs at least two n values, got {count}")


class InsufficientRecords(RDPGError):
    def __init__(self, count: int):
        self.count = count
        super().__init__(f"Need at least 2 successful records for a covariance, got {count}")


class SingularCovariance(RDPGError):
    pass


# ---------------------------------------------------------------------------
# cli / io
# ---------------------------------------------------------------------------

class ParseError(RDPGError):
    def __init__(self, path: str, line: Optional[int], expectation: str):
        self.path = path
        self.line = line
        self.expectation = expectation
        loc = f"{path}:{line}" if line is not None else str(path)
        super().__init__(f"{loc}: expected {expectation}")
