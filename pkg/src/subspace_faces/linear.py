"""Eigendecomposition-based subspaces: PCA, 2DPCA and their entropy-ranked variants.

The 1-D methods work on vectorized images (rows of an (n, d) matrix); the
2-D methods work on an (n, rows, cols) stack and learn a ``rows x k`` basis
from the image covariance ``(1/n) sum (F_i - M)(F_i - M)^T``. ECA and 2DECA
reuse the same eigensystem but keep the eigenvectors with the largest
Renyi entropy contribution instead of the largest eigenvalues.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .numeric import SubspaceBasis, SymEigen, eigh_desc, fix_signs
from .validation import check_images, check_n_components, check_vectors

VECTOR_1D = "vector_1d"
MATRIX_2D = "matrix_2d"

# eigenvalues of the Gram matrix below this fraction of the largest are dropped
GRAM_FLOOR = 1e-10


class ZeroCovarianceError(ValueError):
    """All training samples coincide, so there is no subspace to learn."""


@dataclass(frozen=True)
class LinearModel:
    """A fitted linear subspace.

    ``eigenvalues`` is the full retained spectrum in descending order and
    ``selected`` indexes the columns of ``basis`` into it. For greedy L1 fits
    ``eigenvalues`` holds the L1 dispersion of each extracted direction.
    """

    mode: str
    mean: np.ndarray
    basis: SubspaceBasis
    eigenvalues: np.ndarray
    selection: str = "by_eigenvalue"
    entropy_terms: Optional[np.ndarray] = None
    selected: Optional[np.ndarray] = None
    eigenproblem_shape: Optional[tuple[int, int]] = None
    trace: Optional[object] = field(default=None, compare=False)

    @property
    def n_components(self) -> int:
        return self.basis.dim_subspace

    @property
    def components(self) -> np.ndarray:
        return self.basis.columns

    def transform(self, X) -> np.ndarray:
        W = self.basis.columns
        if self.mode == VECTOR_1D:
            X = check_vectors(X)
            if X.shape[1] != W.shape[0]:
                raise ValueError(f"expected {W.shape[0]} features, got {X.shape[1]}")
            return (X - self.mean) @ W
        F = check_images(X)
        if F.shape[1:] != self.mean.shape:
            raise ValueError(f"expected images of shape {self.mean.shape}, got {F.shape[1:]}")
        return np.matmul(W.T, F - self.mean)


@dataclass(frozen=True)
class FeatureSet:
    features: np.ndarray
    labels: np.ndarray
    mode: str = VECTOR_1D

    def __len__(self) -> int:
        return self.features.shape[0]


def project(model: LinearModel, data, labels=None) -> FeatureSet:
    """Center and project samples: ``W^T (x - m)`` or ``W^T (F - M)``."""
    if labels is None and hasattr(data, "labels"):
        labels = data.labels
    V = model.transform(data)
    if labels is None:
        labels = np.arange(V.shape[0])
    return FeatureSet(V, np.asarray(labels, dtype=object), model.mode)


def _check_spread(Xc, X) -> None:
    scale = max(1.0, float(np.max(np.abs(X))))
    if float(np.max(np.abs(Xc))) <= 1e-12 * scale:
        raise ZeroCovarianceError("zero covariance: all training samples are identical")


def pca_eigensystem(X) -> tuple[np.ndarray, SymEigen, tuple[int, int]]:
    """Mean, covariance eigensystem and eigenproblem size for row samples ``X``.

    When ``d > n`` the covariance eigenvectors are recovered from the n x n
    Gram matrix ``(1/n) Xc Xc^T``; only eigenvalues above ``GRAM_FLOOR``
    times the largest are kept, so the pool can be shorter than ``d``.
    """
    X = check_vectors(X, min_samples=2)
    n, d = X.shape
    mean = X.mean(axis=0)
    Xc = X - mean
    _check_spread(Xc, X)
    if d > n:
        gram = eigh_desc(Xc @ Xc.T / n)
        lam = gram.eigenvalues
        keep = lam > GRAM_FLOOR * lam[0]
        lam = lam[keep]
        U = Xc.T @ gram.eigenvectors[:, keep] / np.sqrt(n * lam)
        return mean, SymEigen(lam, fix_signs(U)), (n, n)
    return mean, eigh_desc(Xc.T @ Xc / n), (d, d)


def image_eigensystem(F) -> tuple[np.ndarray, SymEigen, tuple[int, int]]:
    """Mean image and eigensystem of the rows x rows image covariance."""
    F = check_images(F, min_samples=2)
    n, r, _ = F.shape
    mean = F.mean(axis=0)
    Fc = F - mean
    _check_spread(Fc, F)
    C = np.tensordot(Fc, Fc, axes=([0, 2], [0, 2])) / n
    return mean, eigh_desc(C), (r, r)


def entropy_terms(eig: SymEigen, ones=None) -> np.ndarray:
    """Per-eigenvector Renyi entropy contributions ``(1/n^2) (sqrt(l_i) e_i^T 1)^2``.

    ``n`` is the length of ``ones`` (all ones of the eigenvector length by
    default). Eigenvalues are clamped at zero before the square root; a
    clearly negative eigenvalue means the matrix was not PSD.
    """
    lam = np.asarray(eig.eigenvalues, dtype=float)
    E = np.asarray(eig.eigenvectors, dtype=float)
    if ones is None:
        ones = np.ones(E.shape[0])
    ones = np.asarray(ones, dtype=float)
    if ones.shape != (E.shape[0],):
        raise ValueError(f"ones vector has length {ones.size}, eigenvectors have {E.shape[0]} entries")
    if lam.size:
        floor = max(1e-6, 1e-9 * float(np.max(np.abs(lam))))
        if float(lam.min()) < -floor:
            raise ValueError(f"matrix is not PSD: eigenvalue {lam.min():.3e}")
    n = ones.size
    return (np.sqrt(np.clip(lam, 0.0, None)) * (ones @ E)) ** 2 / n**2


def rank_by_entropy(terms, k: int) -> np.ndarray:
    """Indices of the ``k`` largest terms; ties go to the lower index."""
    return np.argsort(-np.asarray(terms), kind="stable")[:k]


def _top(eig: SymEigen, k: int, what: str) -> None:
    if k > len(eig):
        raise ValueError(
            f"n_components={k} exceeds the {len(eig)} retained eigenvectors ({what})"
        )


def fit_pca(X, k: int) -> LinearModel:
    """Principal component analysis of vectorized samples (rows of ``X``)."""
    X = check_vectors(X, min_samples=2)
    n, d = X.shape
    k = check_n_components(k, min(d, n - 1), "PCA needs k <= min(d, n-1)")
    mean, eig, shape = pca_eigensystem(X)
    _top(eig, k, "covariance rank")
    idx = np.arange(k)
    return LinearModel(
        mode=VECTOR_1D,
        mean=mean,
        basis=SubspaceBasis(eig.eigenvectors[:, idx]),
        eigenvalues=eig.eigenvalues,
        selected=idx,
        eigenproblem_shape=shape,
    )


def fit_eca(X, k: int) -> LinearModel:
    """PCA eigensystem with eigenvectors ranked by entropy contribution."""
    X = check_vectors(X, min_samples=2)
    n, d = X.shape
    k = check_n_components(k, min(d, n - 1), "ECA needs k <= min(d, n-1)")
    mean, eig, shape = pca_eigensystem(X)
    _top(eig, k, "covariance rank")
    terms = entropy_terms(eig, np.ones(d))
    idx = rank_by_entropy(terms, k)
    return LinearModel(
        mode=VECTOR_1D,
        mean=mean,
        basis=SubspaceBasis(eig.eigenvectors[:, idx]),
        eigenvalues=eig.eigenvalues,
        selection="by_entropy",
        entropy_terms=terms,
        selected=idx,
        eigenproblem_shape=shape,
    )


def fit_2dpca(F, k: int) -> LinearModel:
    F = check_images(F, min_samples=2)
    k = check_n_components(k, F.shape[1], "2DPCA needs k <= image rows")
    mean, eig, shape = image_eigensystem(F)
    idx = np.arange(k)
    return LinearModel(
        mode=MATRIX_2D,
        mean=mean,
        basis=SubspaceBasis(eig.eigenvectors[:, idx]),
        eigenvalues=eig.eigenvalues,
        selected=idx,
        eigenproblem_shape=shape,
    )


def fit_2deca(F, k: int) -> LinearModel:
    """2DPCA eigensystem ranked by entropy against the all-ones row vector."""
    F = check_images(F, min_samples=2)
    r = F.shape[1]
    k = check_n_components(k, r, "2DECA needs k <= image rows")
    mean, eig, shape = image_eigensystem(F)
    terms = entropy_terms(eig, np.ones(r))
    idx = rank_by_entropy(terms, k)
    return LinearModel(
        mode=MATRIX_2D,
        mean=mean,
        basis=SubspaceBasis(eig.eigenvectors[:, idx]),
        eigenvalues=eig.eigenvalues,
        selection="by_entropy",
        entropy_terms=terms,
        selected=idx,
        eigenproblem_shape=shape,
    )


def with_prefix(model: LinearModel, k: int) -> LinearModel:
    """The same fit truncated to its first ``k`` selected components."""
    if not 1 <= k <= model.n_components:
        raise ValueError(f"cannot truncate {model.n_components} components to {k}")
    sel = None if model.selected is None else model.selected[:k]
    return replace(model, basis=SubspaceBasis(model.basis.columns[:, :k]), selected=sel)


# ---------------------------------------------------------------------------
# Estimators
# ---------------------------------------------------------------------------

class _LinearSubspace(TransformerMixin, BaseEstimator):
    _fit_fn = None
    _image_input = False

    def __init__(self, n_components=10):
        self.n_components = n_components

    def _fit_model(self, X) -> LinearModel:
        return type(self)._fit_fn(X, self.n_components)

    def fit(self, X, y=None):
        X = check_images(X) if self._image_input else check_vectors(X)
        self.model_ = self._fit_model(X)
        self.components_ = self.model_.basis.columns.T
        self.mean_ = self.model_.mean
        self.eigenvalues_ = self.model_.eigenvalues
        self.n_features_in_ = X.shape[1] if X.ndim == 2 else int(np.prod(X.shape[1:]))
        return self

    def transform(self, X):
        check_is_fitted(self, "model_")
        return self.model_.transform(X)


class PCA(_LinearSubspace):
    """Eigenface PCA; uses the Gram matrix when there are more pixels than samples."""

    _fit_fn = staticmethod(fit_pca)


class ECA(_LinearSubspace):
    """PCA with entropy-contribution component selection."""

    _fit_fn = staticmethod(fit_eca)


class TwoDPCA(_LinearSubspace):
    """2DPCA on image matrices; ``transform`` returns (n, k, cols) features."""

    _fit_fn = staticmethod(fit_2dpca)
    _image_input = True


class TwoDECA(_LinearSubspace):
    _fit_fn = staticmethod(fit_2deca)
    _image_input = True
