"""
Dense complex linear algebra kernels.

Every operator is a 2-D numpy array of dtype complex128. The array shape is
the explicit (rows, cols) pair; vectors are 1-D arrays or single columns.
"""

import logging
from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Optional, Sequence, Union

import numpy as np
from scipy import linalg as sla

from .exceptions import DimensionCapError, NumericsError

logger = logging.getLogger(__name__)

CHECK_TOL = 1e-9
ALGEBRA_TOL = 1e-12
DEFAULT_DIMENSION_CAP = 4096

ComplexMatrix = np.ndarray


def as_matrix(data, name: str = "matrix") -> ComplexMatrix:
    """
    Converts input to a finite complex matrix.

    1-D input becomes a single column.

    Raises:
        NumericsError: Empty, non-2-D or non-finite input
    """
    matrix = np.asarray(data, dtype=complex)
    if matrix.ndim == 1:
        matrix = matrix.reshape(-1, 1)
    if matrix.ndim != 2 or 0 in matrix.shape:
        raise NumericsError(f"{name} must be a non-empty 2-D array, got shape {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise NumericsError(f"{name} contains NaN or Inf entries")
    return matrix


def as_square(data, name: str = "matrix") -> ComplexMatrix:
    matrix = as_matrix(data, name)
    if matrix.shape[0] != matrix.shape[1]:
        raise NumericsError(f"{name} must be square, got shape {matrix.shape}")
    return matrix


def dagger(matrix: ComplexMatrix) -> ComplexMatrix:
    return matrix.conj().T


def hermitian_part(matrix: ComplexMatrix) -> ComplexMatrix:
    return (matrix + dagger(matrix)) / 2


def hermiticity_violation(matrix: ComplexMatrix) -> float:
    return float(np.linalg.norm(matrix - dagger(matrix)))


def unitarity_violation(matrix: ComplexMatrix) -> float:
    matrix = as_square(matrix)
    return float(np.linalg.norm(dagger(matrix) @ matrix - np.eye(matrix.shape[0])))


def projector(vector) -> ComplexMatrix:
    v = np.asarray(vector, dtype=complex).reshape(-1, 1)
    return v @ dagger(v)


def kron(a, b, max_dim: int = DEFAULT_DIMENSION_CAP) -> ComplexMatrix:
    """
    Kronecker product with a dimension cap.

    Raises:
        DimensionCapError: Result would exceed max_dim rows or columns
    """
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    rows = a.shape[0] * b.shape[0]
    cols = a.shape[1] * b.shape[1]
    if max(rows, cols) > max_dim:
        raise DimensionCapError(
            f"Kronecker product of shape ({rows}, {cols}) exceeds dimension cap {max_dim}"
        )
    return np.kron(a, b)


def kron_all(factors: Iterable, max_dim: int = DEFAULT_DIMENSION_CAP) -> ComplexMatrix:
    return reduce(lambda acc, f: kron(acc, f, max_dim), factors)


def _validate_dims(matrix: ComplexMatrix, dims: Sequence[int]) -> list:
    dims = [int(d) for d in dims]
    if not dims or any(d < 1 for d in dims):
        raise NumericsError(f"Invalid subsystem dimensions {dims}")
    total = int(np.prod(dims))
    if matrix.shape != (total, total):
        raise NumericsError(
            f"Matrix of shape {matrix.shape} does not match subsystem dimensions {dims}"
        )
    return dims


def partial_trace(rho, dims: Sequence[int], keep: Iterable[int]) -> ComplexMatrix:
    """
    Traces out every subsystem not listed in keep.

    Kept subsystems stay in ascending index order.

    Raises:
        NumericsError: Dimension mismatch or invalid subsystem indices
    """
    rho = as_square(rho, "rho")
    dims = _validate_dims(rho, dims)
    n = len(dims)
    keep = sorted(set(int(k) for k in keep))
    if not keep or keep[0] < 0 or keep[-1] >= n:
        raise NumericsError(f"keep must be a non-empty subset of 0..{n - 1}, got {keep}")
    if len(keep) == n:
        return rho.copy()

    row_axes = list(range(n))
    col_axes = list(range(n, 2 * n))
    for i in range(n):
        if i not in keep:
            col_axes[i] = row_axes[i]
    out_axes = [row_axes[i] for i in keep] + [col_axes[i] for i in keep]

    reduced = np.einsum(rho.reshape(dims + dims), row_axes + col_axes, out_axes)
    kept_dim = int(np.prod([dims[i] for i in keep]))
    return reduced.reshape(kept_dim, kept_dim)


def partial_transpose(rho, dims: Sequence[int], transpose: Iterable[int]) -> ComplexMatrix:
    rho = as_square(rho, "rho")
    dims = _validate_dims(rho, dims)
    n = len(dims)
    axes = list(range(2 * n))
    for i in set(int(t) for t in transpose):
        axes[i], axes[n + i] = n + i, i
    total = rho.shape[0]
    return rho.reshape(dims + dims).transpose(axes).reshape(total, total)


def schmidt_coefficients(vector, dims: Sequence[int]) -> np.ndarray:
    """Schmidt coefficients of a bipartite vector, descending."""
    v = np.asarray(vector, dtype=complex).ravel()
    d_a, d_b = (int(d) for d in dims)
    if v.size != d_a * d_b:
        raise NumericsError(f"Vector of length {v.size} does not match dimensions {dims}")
    return sla.svdvals(v.reshape(d_a, d_b))


def normalize_phase(vector, tol: float = CHECK_TOL) -> np.ndarray:
    """
    Rotates the global phase so that the first component of largest
    magnitude is positive real. Magnitudes within tol of the peak count
    as ties; the earliest index wins.
    """
    v = np.asarray(vector, dtype=complex)
    magnitudes = np.abs(v)
    peak = magnitudes.max() if v.size else 0.0
    if peak <= tol:
        return v.copy()
    index = int(np.argmax(magnitudes >= peak - tol))
    return v * (abs(v[index]) / v[index])


def _tie_key(vector: np.ndarray, tol: float) -> tuple:
    nonzero = np.flatnonzero(np.abs(vector) > tol)
    first = int(nonzero[0]) if nonzero.size else vector.size
    rounded = np.round(vector, 9)
    return (first,) + tuple(-x for pair in zip(rounded.real, rounded.imag) for x in pair)


@dataclass(frozen=True)
class HermEigen:
    """Eigendecomposition with values descending and orthonormal columns."""

    values: np.ndarray
    vectors: ComplexMatrix

    def reconstruct(self) -> ComplexMatrix:
        return (self.vectors * self.values) @ dagger(self.vectors)

    def __len__(self) -> int:
        return len(self.values)


def herm_eigen(h, tol: float = CHECK_TOL) -> HermEigen:
    """
    Deterministic Hermitian eigendecomposition.

    Eigenvalues are sorted descending. Eigenvectors are phase-normalized;
    within a cluster of tied eigenvalues they are ordered by the index of
    their first nonzero component, then lexicographically by entries.

    Raises:
        NumericsError: Input not Hermitian within tol
    """
    h = as_square(h, "h")
    scale = max(1.0, float(np.linalg.norm(h)))
    violation = hermiticity_violation(h)
    if violation > tol * scale:
        raise NumericsError(f"Matrix is not Hermitian (violation {violation:.3e})")

    values, vectors = sla.eigh(hermitian_part(h))
    vectors = np.column_stack([normalize_phase(vectors[:, i]) for i in range(len(values))])

    tie_tol = ALGEBRA_TOL * scale * 100
    order = list(np.argsort(-values, kind="stable"))
    sorted_order = []
    start = 0
    while start < len(order):
        end = start + 1
        while end < len(order) and abs(values[order[end - 1]] - values[order[end]]) <= tie_tol:
            end += 1
        cluster = order[start:end]
        if len(cluster) > 1:
            cluster = sorted(cluster, key=lambda i: _tie_key(vectors[:, i], CHECK_TOL))
        sorted_order.extend(cluster)
        start = end

    return HermEigen(values=values[sorted_order].copy(), vectors=vectors[:, sorted_order].copy())


def psd_sqrt(h, tol: float = CHECK_TOL) -> ComplexMatrix:
    """
    Square root of a positive semidefinite matrix.

    Eigenvalues in [-tol, 0) are clamped to zero.

    Raises:
        NumericsError: An eigenvalue below -tol
    """
    eig = herm_eigen(h, tol)
    if eig.values.size and eig.values.min() < -tol:
        raise NumericsError(f"Matrix is not PSD (smallest eigenvalue {eig.values.min():.3e})")
    roots = np.sqrt(np.clip(eig.values, 0.0, None))
    return hermitian_part((eig.vectors * roots) @ dagger(eig.vectors))


def snap_unit_interval(values, tol: float = ALGEBRA_TOL) -> np.ndarray:
    """Clips to [0, 1]; values within tol of an endpoint land on it exactly."""
    values = np.clip(np.asarray(values, dtype=float), 0.0, 1.0)
    values[values <= tol] = 0.0
    values[values >= 1.0 - tol] = 1.0
    return values


def contraction_eigen(h, tol: float = CHECK_TOL) -> HermEigen:
    """
    Eigendecomposition of an operator with 0 <= h <= 1.

    The spectrum is snapped with snap_unit_interval, so roundoff never
    survives a later square root as a sqrt(eps) component.

    Raises:
        NumericsError: An eigenvalue outside [-tol, 1 + tol]
    """
    eig = herm_eigen(h, tol)
    if eig.values.size and (eig.values.min() < -tol or eig.values.max() > 1.0 + tol):
        raise NumericsError(
            f"Spectrum [{eig.values.min():.3e}, {eig.values.max():.3e}] leaves the unit interval"
        )
    return HermEigen(values=snap_unit_interval(eig.values), vectors=eig.vectors)


def contraction_sqrt(h, tol: float = CHECK_TOL) -> ComplexMatrix:
    eig = contraction_eigen(h, tol)
    return hermitian_part((eig.vectors * np.sqrt(eig.values)) @ dagger(eig.vectors))


def default_cutoff(values: np.ndarray, dim: int) -> float:
    peak = float(np.abs(values).max()) if values.size else 0.0
    return dim * np.finfo(float).eps * peak


def pinv(h, tol: Optional[float] = None) -> ComplexMatrix:
    """
    Moore-Penrose inverse of a Hermitian matrix.

    Eigenvalues with magnitude at most tol map to 0. The default tol is
    dim * machine epsilon * largest eigenvalue magnitude.
    """
    h = as_square(h, "h")
    eig = herm_eigen(h)
    cutoff = default_cutoff(eig.values, h.shape[0]) if tol is None else tol
    inverted = np.zeros_like(eig.values)
    mask = np.abs(eig.values) > cutoff
    inverted[mask] = 1.0 / eig.values[mask]
    return hermitian_part((eig.vectors * inverted) @ dagger(eig.vectors))


def psd_inverse_sqrt(h, tol: Optional[float] = None) -> ComplexMatrix:
    """h^{+1/2}: inverse square root on the support, zero on the kernel."""
    h = as_square(h, "h")
    eig = herm_eigen(h)
    cutoff = default_cutoff(eig.values, h.shape[0]) if tol is None else tol
    inverted = np.zeros_like(eig.values)
    mask = eig.values > cutoff
    inverted[mask] = 1.0 / np.sqrt(eig.values[mask])
    return hermitian_part((eig.vectors * inverted) @ dagger(eig.vectors))


def matrix_rank(matrix, tol: float = CHECK_TOL) -> int:
    matrix = as_matrix(matrix)
    singular = sla.svdvals(matrix)
    return int(np.sum(singular > tol))


def complete_onb(
    partial: Union[ComplexMatrix, Sequence, None], dim: int, tol: float = CHECK_TOL
) -> ComplexMatrix:
    """
    Extends orthonormal vectors to a full orthonormal basis.

    Args:
        partial: Orthonormal vectors, either as the columns of a dim x k
            array or as a sequence of 1-D vectors
        dim: Dimension of the space

    Returns:
        dim x dim unitary whose first k columns are the input, unchanged

    Raises:
        NumericsError: Input not orthonormal, wrong length, or k > dim
    """
    if partial is None or (isinstance(partial, (list, tuple)) and len(partial) == 0):
        return np.eye(dim, dtype=complex)
    if isinstance(partial, (list, tuple)):
        vectors = np.column_stack([np.asarray(v, dtype=complex).ravel() for v in partial])
    else:
        vectors = np.asarray(partial, dtype=complex)
        if vectors.ndim == 1:
            vectors = vectors.reshape(-1, 1)
    if vectors.shape[1] == 0:
        return np.eye(dim, dtype=complex)
    if vectors.shape[0] != dim:
        raise NumericsError(f"Vectors of length {vectors.shape[0]} do not live in dimension {dim}")
    count = vectors.shape[1]
    if count > dim:
        raise NumericsError(f"Cannot have {count} orthonormal vectors in dimension {dim}")
    violation = float(np.linalg.norm(dagger(vectors) @ vectors - np.eye(count)))
    if violation > tol:
        raise NumericsError(f"Input vectors are not orthonormal (violation {violation:.3e})")
    if count == dim:
        return vectors.copy()

    complement = sla.null_space(dagger(vectors))
    complement = np.column_stack(
        [normalize_phase(complement[:, i]) for i in range(complement.shape[1])]
    )
    return np.hstack([vectors, complement])


def haar_unitary(dim: int, rng: np.random.Generator) -> ComplexMatrix:
    """Haar-random unitary from the QR decomposition of a Ginibre matrix."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    phases = np.diag(r) / np.abs(np.diag(r))
    return q * phases
