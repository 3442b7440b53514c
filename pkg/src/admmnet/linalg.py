"""Dense matrix primitives for the least-squares sub-steps.

Every weight and activation update in the trainer reduces to two
operations: forming Gram products ``A @ A.T`` / ``Z @ A.T`` and solving
against a ridge-regularized symmetric positive definite matrix.  The
SPD solves go through a cached Cholesky factorization so a factor can be
reused for many right-hand sides.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve
from scipy.linalg.lapack import dpotrf


class DimensionMismatchError(ValueError):
    """Operand shapes are incompatible."""


class SingularMatrixError(np.linalg.LinAlgError):
    """Matrix is not numerically positive definite.

    Attributes:
        pivot: zero-based index of the first failing Cholesky pivot.
    """

    def __init__(self, pivot: int):
        self.pivot = pivot
        super().__init__(f"matrix not positive definite (failing pivot {pivot})")


def as_matrix(x, name: str = "matrix") -> np.ndarray:
    """Validate and return a dense 2-D float64 array with finite entries."""
    a = np.ascontiguousarray(x, dtype=np.float64)
    if a.ndim != 2:
        raise DimensionMismatchError(f"{name} must be 2-D, got shape {a.shape}")
    if a.shape[0] == 0 or a.shape[1] == 0:
        raise DimensionMismatchError(f"{name} has a zero dimension: {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite entries")
    return a


def gram(A) -> np.ndarray:
    """Return ``A @ A.T``, symmetrized exactly.

    The result is positive semidefinite up to roundoff; symmetry is
    enforced by averaging so downstream factorizations see a bitwise
    symmetric matrix.
    """
    A = as_matrix(A, "A")
    G = A @ A.T
    return (G + G.T) * 0.5


def cross_gram(Z, A) -> np.ndarray:
    """Return ``Z @ A.T`` for sample-column matrices sharing a column count."""
    Z = as_matrix(Z, "Z")
    A = as_matrix(A, "A")
    if Z.shape[1] != A.shape[1]:
        raise DimensionMismatchError(
            f"column mismatch: Z has {Z.shape[1]} columns, A has {A.shape[1]}"
        )
    return Z @ A.T


def default_ridge(G: np.ndarray) -> float:
    """Trace-scaled ridge used when the caller does not pin one."""
    n = G.shape[0]
    return 1e-8 * float(np.trace(G)) / n


@dataclass(frozen=True)
class SpdFactor:
    """Cholesky factor of ``G + ridge*I``, reusable for repeated solves."""

    dimension: int
    ridge: float
    chol_lower: np.ndarray  # lower-triangular L with L @ L.T == G + ridge*I

    @property
    def matrix(self) -> np.ndarray:
        """Reconstruct the factored matrix (for diagnostics and tests)."""
        L = self.chol_lower
        return L @ L.T


def spd_factor(G, ridge: float = 0.0) -> SpdFactor:
    """Factor ``G + ridge*I`` for a symmetric ``G``.

    Raises:
        SingularMatrixError: if the shifted matrix is not numerically
            positive definite; carries the failing pivot index.
    """
    G = as_matrix(G, "G")
    if G.shape[0] != G.shape[1]:
        raise DimensionMismatchError(f"G must be square, got {G.shape}")
    if not np.allclose(G, G.T, rtol=0.0, atol=1e-10 * (1.0 + np.abs(G).max())):
        raise ValueError("G must be symmetric")
    if ridge < 0:
        raise ValueError("ridge must be nonnegative")
    M = G + ridge * np.eye(G.shape[0])
    c, info = dpotrf(M, lower=1, clean=1, overwrite_a=0)
    if info > 0:
        raise SingularMatrixError(pivot=info - 1)
    if info < 0:
        raise ValueError(f"illegal argument {-info} to dpotrf")
    return SpdFactor(dimension=G.shape[0], ridge=float(ridge), chol_lower=c)


def spd_factor_with_retry(G, ridge: float) -> SpdFactor:
    """Factor ``G + ridge*I``, retrying once with a trace-scaled ridge.

    Rank-deficient Gram matrices are expected whenever a data shard has
    fewer samples than features; the retry shifts by
    ``max(ridge, 1e-6 * trace(G)/n)``.
    """
    try:
        return spd_factor(G, ridge)
    except SingularMatrixError:
        G = as_matrix(G, "G")
        fallback = max(ridge, 1e-6 * float(np.trace(G)) / G.shape[0])
        return spd_factor(G, fallback)


def solve_right(C, F: SpdFactor) -> np.ndarray:
    """Solve ``X @ M = C`` where ``M`` is the factored matrix."""
    C = as_matrix(C, "C")
    if C.shape[1] != F.dimension:
        raise DimensionMismatchError(
            f"C has {C.shape[1]} columns, factor has dimension {F.dimension}"
        )
    # M is symmetric, so X = (M^-1 C.T).T
    return cho_solve((F.chol_lower, True), C.T).T


def solve_left(F: SpdFactor, B) -> np.ndarray:
    """Solve ``M @ X = B`` where ``M`` is the factored matrix."""
    B = as_matrix(B, "B")
    if B.shape[0] != F.dimension:
        raise DimensionMismatchError(
            f"B has {B.shape[0]} rows, factor has dimension {F.dimension}"
        )
    return cho_solve((F.chol_lower, True), B)
