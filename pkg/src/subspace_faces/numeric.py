"""Dense symmetric eigendecomposition, orthonormalization and subspace comparison.

All routines are pure and deterministic: eigenvectors carry a fixed sign
convention and orthonormal bases come from a sign-normalized QR, so fitted
models are reproducible across runs and platforms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SYMMETRY_RTOL = 1e-10
RANK_RTOL = 1e-12


@dataclass(frozen=True)
class SymEigen:
    """Eigenpairs of a real symmetric matrix, eigenvalues sorted descending.

    ``eigenvectors[:, i]`` belongs to ``eigenvalues[i]``.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def __len__(self) -> int:
        return self.eigenvalues.shape[0]

    def reconstruct(self) -> np.ndarray:
        return (self.eigenvectors * self.eigenvalues) @ self.eigenvectors.T


@dataclass(frozen=True)
class SubspaceBasis:
    """A d x k matrix with orthonormal columns."""

    columns: np.ndarray

    @property
    def dim_ambient(self) -> int:
        return self.columns.shape[0]

    @property
    def dim_subspace(self) -> int:
        return self.columns.shape[1]

    def projector(self) -> np.ndarray:
        return self.columns @ self.columns.T


def fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip each column so that its largest-magnitude entry is positive.

    Ties in magnitude resolve to the lowest row index.
    """
    vectors = np.array(vectors, dtype=float, copy=True)
    if vectors.size == 0:
        return vectors
    pivots = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[pivots, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def check_symmetric(A, rtol: float = SYMMETRY_RTOL) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix contains non-finite entries")
    scale = max(np.max(np.abs(A)), 1.0) if A.size else 1.0
    asym = float(np.max(np.abs(A - A.T))) if A.size else 0.0
    if asym > rtol * scale:
        raise ValueError(f"matrix is not symmetric: max asymmetry {asym:.3e}")
    return A


def eigh_desc(A) -> SymEigen:
    """Eigendecomposition of a symmetric matrix with a deterministic layout.

    Eigenvalues are sorted descending (equal eigenvalues keep the solver's
    order) and every eigenvector is sign-fixed by :func:`fix_signs`. The
    input is symmetrized as ``(A + A.T) / 2`` before decomposition.
    """
    A = check_symmetric(A)
    w, V = np.linalg.eigh(0.5 * (A + A.T))
    order = np.argsort(-w, kind="stable")
    return SymEigen(eigenvalues=w[order], eigenvectors=fix_signs(V[:, order]))


def orthonormalize(M) -> SubspaceBasis:
    """Orthonormal basis for the column space of ``M``, column order preserved.

    Equivalent to classical Gram-Schmidt (column j of the result is the
    normalized part of ``M[:, j]`` orthogonal to the previous columns), but
    computed with Householder QR for stability.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix contains non-finite entries")
    d, k = M.shape
    if k == 0:
        return SubspaceBasis(np.zeros((d, 0)))
    if k > d:
        raise ValueError(f"cannot orthonormalize {k} columns in dimension {d}")
    Q, R = np.linalg.qr(M)
    # M and R share singular values
    sv = np.linalg.svd(R, compute_uv=False)
    diag = np.diag(R)
    if sv[-1] <= RANK_RTOL * sv[0]:
        # |R_jj| is the norm of column j after removing earlier directions
        rel = np.abs(diag) / np.maximum(np.linalg.norm(M, axis=0), np.finfo(float).tiny)
        bad = np.flatnonzero(rel <= 1e-8)
        first = int(bad[0]) if bad.size else int(np.argmin(rel))
        raise ValueError(f"matrix is rank deficient: column {first} depends on earlier columns")
    signs = np.where(diag < 0, -1.0, 1.0)
    return SubspaceBasis(Q * signs)


def _as_columns(B) -> np.ndarray:
    return B.columns if isinstance(B, SubspaceBasis) else np.asarray(B, dtype=float)


def projector_distance(A, B) -> float:
    """Frobenius distance ``||A A^T - B B^T||_F`` between two subspaces.

    Evaluated as ``sqrt(||(I - AA^T) B||^2 + ||(I - BB^T) A||^2)``, which is
    the same quantity for orthonormal bases but never forms a d x d matrix
    and does not lose precision when the subspaces nearly coincide.
    """
    A = _as_columns(A)
    B = _as_columns(B)
    if A.shape[0] != B.shape[0]:
        raise ValueError(f"ambient dimensions differ: {A.shape[0]} vs {B.shape[0]}")
    ra = B - A @ (A.T @ B)
    rb = A - B @ (B.T @ A)
    return float(np.sqrt(np.sum(ra * ra) + np.sum(rb * rb)))
