"""Dense matrix primitives: norms, reduced SVD, and exact/iterative polar factors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_RANK_TOL = 1e-12
NEWTON_SCHULZ_COEFFS = (1.5, -0.5)


class NumericalFailure(RuntimeError):
    """An iterative linear-algebra kernel failed to converge.

    Carries the matrix shape and, when the backend reports one, the
    iteration count at failure, so callers can attach run context.
    """

    def __init__(self, message, shape=None, iterations=None):
        super().__init__(message)
        self.shape = shape
        self.iterations = iterations


def as_matrix(a) -> np.ndarray:
    """Validate `a` as a dense m x n float64 matrix (finite entries, m, n >= 1)."""
    out = np.asarray(a, dtype=float)
    if out.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got ndim={out.ndim}")
    if min(out.shape) < 1:
        raise ValueError(f"matrix dimensions must be positive, got {out.shape}")
    if not np.all(np.isfinite(out)):
        raise ValueError("matrix entries must be finite")
    return out


def _singular_values(a: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.svd(a, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(
            f"SVD did not converge on a {a.shape} matrix: {exc}", shape=a.shape
        ) from exc


def frobenius_norm(a) -> float:
    """Square root of the sum of squared entries."""
    return float(np.linalg.norm(as_matrix(a)))


def spectral_norm(a) -> float:
    """Largest singular value; 0 for the zero matrix."""
    a = as_matrix(a)
    if not a.any():
        return 0.0
    return float(_singular_values(a)[0])


def nuclear_norm(a) -> float:
    """Sum of singular values."""
    a = as_matrix(a)
    if not a.any():
        return 0.0
    return float(_singular_values(a).sum())


@dataclass(frozen=True)
class SvdFactors:
    """Reduced SVD a = u @ diag(s) @ v.T with rank-truncated factors.

    `u` is m x r and `v` is n x r, both column-orthogonal; `singular_values`
    is strictly positive and nonincreasing. r = 0 for the zero matrix.
    """

    u: np.ndarray
    singular_values: np.ndarray
    v: np.ndarray
    rank_tolerance: float

    @property
    def rank(self) -> int:
        return int(self.singular_values.size)

    def reconstruct(self) -> np.ndarray:
        return (self.u * self.singular_values) @ self.v.T


def reduced_svd(a, rank_tol: float = DEFAULT_RANK_TOL) -> SvdFactors:
    """Reduced SVD with relative rank truncation.

    Singular values <= rank_tol * (largest singular value) are dropped,
    so a zero matrix yields empty factors (rank 0).
    """
    a = as_matrix(a)
    if rank_tol < 0:
        raise ValueError(f"rank_tol must be nonnegative, got {rank_tol}")
    m, n = a.shape
    if not a.any():
        return SvdFactors(np.zeros((m, 0)), np.zeros(0), np.zeros((n, 0)), rank_tol)
    try:
        u, s, vt = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(
            f"SVD did not converge on a {a.shape} matrix: {exc}", shape=a.shape
        ) from exc
    keep = s > rank_tol * s[0]
    return SvdFactors(u[:, keep], s[keep], vt[keep].T, rank_tol)


def msgn_exact(a, rank_tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Orthogonal (polar) factor u @ v.T from the reduced SVD.

    All nonzero singular values of the result equal 1. The zero matrix maps
    to the zero matrix, which turns a zero tracker into a zero step.
    """
    a = as_matrix(a)
    if not a.any():
        return np.zeros_like(a)
    f = reduced_svd(a, rank_tol)
    return f.u @ f.v.T


def msgn_newton_schulz(a, iters: int, coeffs=NEWTON_SCHULZ_COEFFS) -> np.ndarray:
    """Approximate polar factor via the cubic Newton-Schulz iteration.

    Pre-scales by 1/||a||_F, then iterates y <- c1*y + c2 * y y^T y. After
    scaling every singular value lies in (0, 1], where the default cubic
    (1.5, -0.5) converges monotonically to 1, so iterates keep spectral
    norm <= 1 at every step.
    """
    a = as_matrix(a)
    if iters < 1:
        raise ValueError(f"iters must be >= 1, got {iters}")
    fro = float(np.linalg.norm(a))
    if fro == 0.0:
        raise ValueError("Newton-Schulz polar factor is undefined for the zero matrix")
    c1, c2 = coeffs
    y = a / fro
    tall = y.shape[0] >= y.shape[1]
    for _ in range(iters):
        if tall:
            y = c1 * y + c2 * (y @ (y.T @ y))
        else:
            y = c1 * y + c2 * ((y @ y.T) @ y)
    return y
