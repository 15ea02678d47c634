"""Polynomial-kernel KPCA and kernel entropy component analysis (KECA).

Both methods decompose the same kernel matrix ``K_ij = (x_i . x_j)^p``; they
differ only in which eigenvectors they keep. KPCA keeps the largest
eigenvalues, KECA the largest Renyi entropy terms
``(1/n^2) (sqrt(l_i) e_i^T 1)^2``. By default K is used uncentered.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .linear import entropy_terms, rank_by_entropy
from .numeric import SymEigen, eigh_desc
from .validation import check_n_components, check_vectors

RETENTION_FLOOR = 1e-10
RANKINGS = ("eigenvalue", "entropy")


def kernel_matrix(X, p: int = 2, Y=None) -> np.ndarray:
    """Polynomial kernel ``(x . y)^p``.

    Without ``Y`` the n x n training kernel is returned, mirrored from its
    upper triangle so that it is exactly symmetric.
    """
    if not isinstance(p, (int, np.integer)) or p < 1:
        raise ValueError(f"kernel degree must be a positive integer, got {p!r}")
    X = check_vectors(X)
    if Y is not None:
        Y = check_vectors(Y)
        if Y.shape[1] != X.shape[1]:
            raise ValueError(f"expected {X.shape[1]} features, got {Y.shape[1]}")
        return (Y @ X.T) ** p
    K = np.triu((X @ X.T) ** p)
    return K + np.triu(K, 1).T


def renyi_entropy_estimate(K) -> tuple[float, np.ndarray]:
    """Parzen estimate of the information potential and its eigen-terms.

    Returns ``(sp, terms)`` with ``sp = sum(terms) = 1^T K 1 / n^2``; the
    quadratic Renyi entropy is ``-log(sp)``.
    """
    eig = eigh_desc(K)
    terms = entropy_terms(eig)
    sp = float(terms.sum())
    if sp <= 0:
        raise ValueError("information potential is not positive; kernel matrix is zero")
    return sp, terms


def renyi_entropy(K) -> float:
    return -float(np.log(renyi_entropy_estimate(K)[0]))


def _double_center(K: np.ndarray) -> np.ndarray:
    col = K.mean(axis=0)
    Kc = K - col[None, :] - col[:, None] + col.mean()
    return 0.5 * (Kc + Kc.T)


@dataclass(frozen=True)
class KernelModel:
    train: np.ndarray
    degree: int
    eig: SymEigen
    selected: np.ndarray
    alphas: np.ndarray
    entropy_terms: np.ndarray
    ranking: str = "eigenvalue"
    center_kernel: bool = False
    kernel_col_mean: Optional[np.ndarray] = None

    @property
    def n_components(self) -> int:
        return self.selected.size

    @property
    def retained(self) -> int:
        lam = self.eig.eigenvalues
        return int(np.count_nonzero(lam > RETENTION_FLOOR * lam[0])) if lam[0] > 0 else 0

    @property
    def eigenproblem_shape(self) -> tuple[int, int]:
        n = self.train.shape[0]
        return (n, n)

    def training_features(self) -> np.ndarray:
        """``sqrt(l_j) (e_j)_i`` for every training sample i and selected j."""
        lam = self.eig.eigenvalues[self.selected]
        return self.eig.eigenvectors[:, self.selected] * np.sqrt(lam)

    def transform(self, X) -> np.ndarray:
        return project_kernel(self, X)


def select_components(model: KernelModel, k: int, ranking: str) -> KernelModel:
    """Re-pick ``k`` components from an existing fit; the eigensystem object is shared."""
    if ranking not in RANKINGS:
        raise ValueError(f"unknown ranking {ranking!r}; expected one of {RANKINGS}")
    retained = model.retained
    if retained == 0:
        raise ValueError("kernel matrix has no eigenvalue above the retention floor")
    k = check_n_components(k, retained, f"kernel matrix retained rank is {retained}")
    if ranking == "eigenvalue":
        selected = np.arange(k)
    else:
        selected = rank_by_entropy(model.entropy_terms[:retained], k)
    lam = model.eig.eigenvalues[selected]
    alphas = model.eig.eigenvectors[:, selected] / np.sqrt(lam)
    return replace(model, selected=selected, alphas=alphas, ranking=ranking)


def _fit_kernel(X, k: int, p: int, ranking: str, center_kernel: bool) -> KernelModel:
    X = check_vectors(X)
    K = kernel_matrix(X, p)
    col_mean = None
    if center_kernel:
        col_mean = K.mean(axis=0)
        K = _double_center(K)
    eig = eigh_desc(K)
    base = KernelModel(
        train=X,
        degree=int(p),
        eig=eig,
        selected=np.arange(0),
        alphas=np.zeros((X.shape[0], 0)),
        entropy_terms=entropy_terms(eig),
        center_kernel=center_kernel,
        kernel_col_mean=col_mean,
    )
    return select_components(base, k, ranking)


def fit_kpca(X, k: int, p: int = 2, center_kernel: bool = False) -> KernelModel:
    """Kernel PCA keeping the ``k`` largest kernel eigenvalues."""
    return _fit_kernel(X, k, p, "eigenvalue", center_kernel)


def fit_keca(X, k: int, p: int = 2, center_kernel: bool = False) -> KernelModel:
    """Kernel ECA keeping the ``k`` largest entropy terms (ties to the lower index)."""
    return _fit_kernel(X, k, p, "entropy", center_kernel)


def project_kernel(model: KernelModel, X) -> np.ndarray:
    """Out-of-sample features ``sum_i (a_j)_i k(x, x_i)`` with ``a_j = e_j / sqrt(l_j)``.

    A single vector gives a 1-D result; a matrix of row samples gives
    (n_samples, k).
    """
    single = np.ndim(X) == 1
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Kx = kernel_matrix(model.train, model.degree, Y=X)
    if model.center_kernel:
        col = model.kernel_col_mean
        Kx = Kx - col[None, :] - Kx.mean(axis=1, keepdims=True) + col.mean()
    V = Kx @ model.alphas
    return V[0] if single else V


class _KernelSubspace(TransformerMixin, BaseEstimator):
    _ranking = "eigenvalue"

    def __init__(self, n_components=10, degree=2, center_kernel=False):
        self.n_components = n_components
        self.degree = degree
        self.center_kernel = center_kernel

    def fit(self, X, y=None):
        X = check_vectors(X)
        self.model_ = _fit_kernel(X, self.n_components, self.degree, self._ranking, self.center_kernel)
        self.selected_ = self.model_.selected
        self.eigenvalues_ = self.model_.eig.eigenvalues
        self.entropy_terms_ = self.model_.entropy_terms
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "model_")
        return project_kernel(self.model_, check_vectors(X))


class KPCA(_KernelSubspace):
    """Polynomial-kernel PCA (uncentered kernel unless ``center_kernel``)."""


class KECA(_KernelSubspace):
    """Polynomial-kernel entropy component analysis."""

    _ranking = "entropy"
