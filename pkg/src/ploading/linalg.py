"""Dense linear-algebra and sampling-statistics primitives.

Everything operates on plain float64 numpy arrays.  Symmetric matrices
are expected to be *exactly* symmetric; constructors in this module
always return exactly symmetric output, and :func:`symmetrize` is the
tool for coercing nearly-symmetric input at the boundary.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .exceptions import (
    DegenerateDataError,
    NotCenteredError,
    NumericalError,
    SingularMatrixError,
)

# Condition-number guard for SPD solves.
CONDITION_LIMIT = 1e12

# Column sums of centred data must vanish up to this factor times
# n_rows times the largest absolute entry.
CENTER_TOL = 1e-12


def as_matrix(a, name: str = "a") -> np.ndarray:
    """Coerce to a finite 2-d float64 array."""
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def as_vector(a, name: str = "a") -> np.ndarray:
    """Coerce to a finite 1-d float64 array."""
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def symmetrize(a) -> np.ndarray:
    """Return ``(a + a.T) / 2``; exact for already-symmetric input."""
    arr = as_matrix(a)
    if arr.shape[0] != arr.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {arr.shape}")
    return 0.5 * (arr + arr.T)


def require_symmetric(a, name: str = "a") -> np.ndarray:
    """Validate exact symmetry (see :func:`symmetrize` for coercion)."""
    arr = as_matrix(a, name)
    if arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name} must be square, got shape {arr.shape}")
    if not np.array_equal(arr, arr.T):
        raise ValueError(f"{name} is not exactly symmetric; apply symmetrize() first")
    return arr


def center_tolerance(data: np.ndarray) -> float:
    """Largest column sum still considered centred."""
    if data.size == 0:
        return 0.0
    return CENTER_TOL * data.shape[0] * float(np.max(np.abs(data)))


def mean_center(data) -> np.ndarray:
    """Subtract the column means.

    Raises
    ------
    DegenerateDataError
        If there are fewer than two rows.
    """
    arr = as_matrix(data, "data")
    if arr.shape[0] < 2:
        raise DegenerateDataError("centring needs at least 2 rows")
    return arr - arr.mean(axis=0)


def sample_covariance(centered) -> np.ndarray:
    """Sample covariance ``X'X / (n - 1)`` of mean-centred data.

    Raises
    ------
    NotCenteredError
        If any column sum exceeds the centring tolerance.
    """
    arr = as_matrix(centered, "centered")
    n = arr.shape[0]
    if n < 2:
        raise DegenerateDataError("sample covariance needs at least 2 rows")
    sums = np.abs(arr.sum(axis=0))
    tol = center_tolerance(arr)
    if np.any(sums > tol):
        worst = int(np.argmax(sums))
        raise NotCenteredError(
            f"column {worst} has sum {sums[worst]:.3e}, beyond centring tolerance {tol:.3e}"
        )
    return symmetrize(arr.T @ arr / (n - 1))


def correlation_from_covariance(cov) -> np.ndarray:
    """Rescale a covariance matrix to unit diagonal.

    Raises
    ------
    DegenerateDataError
        If any diagonal entry is not strictly positive, naming the index.
    """
    arr = require_symmetric(cov, "cov")
    diag = np.diag(arr)
    bad = np.nonzero(diag <= 0.0)[0]
    if bad.size:
        raise DegenerateDataError(f"variable {bad[0]} has non-positive variance {diag[bad[0]]!r}")
    scale = np.sqrt(diag)
    out = arr / np.outer(scale, scale)
    np.fill_diagonal(out, 1.0)
    return out


@dataclass(frozen=True, eq=False)
class EigenSystem:
    """Eigenvalues in descending order with column-aligned eigenvectors."""

    values: np.ndarray
    vectors: np.ndarray

    @property
    def m(self) -> int:
        return self.values.shape[0]


def _lock(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


def eigh(a) -> EigenSystem:
    """Symmetric eigendecomposition with a deterministic orientation.

    Eigenvalues come back in descending order.  Each eigenvector is
    flipped so its largest-magnitude coordinate (lowest index on ties)
    is positive, and exact eigenvalue ties are ordered by that anchor
    index.  This makes output reproducible across runs and BLAS builds
    up to LAPACK's own determinism.

    Raises
    ------
    NumericalError
        If the underlying solver fails to converge.
    """
    arr = require_symmetric(a)
    try:
        values, vectors = np.linalg.eigh(arr)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigendecomposition failed to converge: {exc}") from exc
    values = values[::-1].copy()
    vectors = vectors[:, ::-1].copy()
    m = values.shape[0]
    anchors = np.empty(m, dtype=int)
    for j in range(m):
        k = int(np.argmax(np.abs(vectors[:, j])))
        if vectors[k, j] < 0.0:
            vectors[:, j] = -vectors[:, j]
        anchors[j] = k
    order = sorted(range(m), key=lambda j: (-values[j], anchors[j]))
    values = values[order]
    vectors = vectors[:, order]
    return EigenSystem(values=_lock(values), vectors=_lock(vectors))


def solve_spd(a, b) -> np.ndarray:
    """Solve ``a @ x = b`` for symmetric positive definite ``a``.

    Raises
    ------
    SingularMatrixError
        If ``a`` is not positive definite or its condition number
        exceeds ``CONDITION_LIMIT``.
    """
    arr = require_symmetric(a)
    rhs = np.asarray(b, dtype=np.float64)
    if rhs.shape[0] != arr.shape[0]:
        raise ValueError(f"rhs length {rhs.shape[0]} does not match matrix size {arr.shape[0]}")
    w = np.linalg.eigvalsh(arr)
    if w[0] <= 0.0 or w[-1] > CONDITION_LIMIT * w[0]:
        raise SingularMatrixError(
            f"matrix is singular or ill-conditioned (eigenvalue range [{w[0]:.3e}, {w[-1]:.3e}])"
        )
    try:
        factor = scipy.linalg.cho_factor(arr, lower=True, check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        raise SingularMatrixError(f"Cholesky factorisation failed: {exc}") from exc
    return scipy.linalg.cho_solve(factor, rhs, check_finite=False)


def cosine_angle(u, v) -> float:
    """Cosine of the angle between two vectors, clipped to [-1, 1].

    Raises
    ------
    DegenerateDataError
        If either vector has zero norm.
    """
    uu = as_vector(u, "u")
    vv = as_vector(v, "v")
    nu = float(np.linalg.norm(uu))
    nv = float(np.linalg.norm(vv))
    if nu == 0.0 or nv == 0.0:
        raise DegenerateDataError("cosine undefined for a zero-norm vector")
    c = float(uu @ vv) / (nu * nv)
    return min(1.0, max(-1.0, c))


def frobenius_norm(a) -> float:
    return float(np.linalg.norm(as_matrix(a), "fro"))


def row_norm(a, r: int) -> float:
    """Euclidean norm of row ``r``; raises IndexError when out of range."""
    arr = as_matrix(a)
    if not 0 <= r < arr.shape[0]:
        raise IndexError(f"row {r} out of range for {arr.shape[0]} rows")
    return float(np.linalg.norm(arr[r]))
