"""Outlier-resistant subspaces.

R1-PCA and 2DR1-PCA refine a PCA start by weighted subspace iteration,
``W <- orthonormalize(C_r(W) W)``, where ``C_r`` is the covariance with each
sample down-weighted by a Cauchy function of its reconstruction residue.
L1-PCA and 2DL1-PCA maximize the L1 dispersion ``sum_i |w^T x_i|`` one
direction at a time by polarity flipping, deflating the data between
directions. The 2-D variants treat every image column as a sample.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .dataset import columns_of
from .linear import MATRIX_2D, VECTOR_1D, LinearModel, fit_2dpca, fit_pca
from .numeric import SubspaceBasis, orthonormalize, projector_distance
from .validation import check_images, check_n_components, check_vectors

WEIGHTS = ("cauchy", "l1")
L1_INITS = ("max_norm_sample", "seeded_random")
CAUCHY_FLOOR = 1e-12


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    subspace_change: float
    off_diagonality: Optional[float] = None
    objective: Optional[float] = None


@dataclass
class ConvergenceTrace:
    """Per-iteration diagnostics of an iterative fit.

    ``converged_at`` is the first iteration whose subspace change fell below
    the tolerance, or None when the iteration budget ran out first.
    """

    records: list[IterationRecord] = field(default_factory=list)
    converged_at: Optional[int] = None
    unit_weights: bool = False
    hit_cap: bool = False

    def __len__(self) -> int:
        return len(self.records)

    def append(self, **values) -> None:
        self.records.append(IterationRecord(iteration=len(self.records) + 1, **values))

    def column(self, name: str) -> np.ndarray:
        return np.array(
            [np.nan if getattr(r, name) is None else getattr(r, name) for r in self.records],
            dtype=float,
        )

    @property
    def subspace_change(self) -> np.ndarray:
        return self.column("subspace_change")

    @property
    def objective(self) -> np.ndarray:
        return self.column("objective")


# ---------------------------------------------------------------------------
# R1 family
# ---------------------------------------------------------------------------

def cauchy_weights(s, c: float) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    if c < CAUCHY_FLOOR:
        return np.ones_like(s)
    return 1.0 / (1.0 + (s / c) ** 2)


def l1_weights(s, c: float) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    if c < CAUCHY_FLOOR:
        return np.ones_like(s)
    return 1.0 / np.maximum(s, CAUCHY_FLOOR * c)


def _off_diagonality(L: np.ndarray) -> float:
    total = np.linalg.norm(L)
    if total == 0:
        return 0.0
    return float(np.linalg.norm(L - np.diag(np.diag(L))) / total)


class _R1Problem:
    """Samples in the shape one R1 variant works on, plus the four products it needs.

    ``P`` is the projection of every sample on ``W``: (n, k) for vectors,
    (n, k, cols) for images.
    """

    def __init__(self, samples: np.ndarray):
        self.samples = samples

    def project(self, W):
        if self.samples.ndim == 2:
            return self.samples @ W
        return np.matmul(W.T, self.samples)

    def residues(self, W, P):
        if self.samples.ndim == 2:
            return np.linalg.norm(self.samples - P @ W.T, axis=1)
        R = self.samples - np.matmul(W, P)
        return np.sqrt(np.einsum("nrc,nrc->n", R, R))

    def weighted_apply(self, omega, P):
        """``C_r W`` with ``C_r = sum_i omega_i x_i x_i^T``."""
        if self.samples.ndim == 2:
            return self.samples.T @ (omega[:, None] * P)
        return np.tensordot(omega[:, None, None] * self.samples, P, axes=([0, 2], [0, 2]))

    def weighted_gram(self, omega, P):
        """``W^T C_r W``."""
        if P.ndim == 2:
            return P.T @ (omega[:, None] * P)
        return np.tensordot(omega[:, None, None] * P, P, axes=([0, 2], [0, 2]))


def _r1_iterate(
    problem: _R1Problem,
    W: np.ndarray,
    weight: str,
    max_iter: int,
    tol: float,
) -> tuple[np.ndarray, np.ndarray, ConvergenceTrace]:
    """Shared fixed-point loop; returns the ordered basis, its spectrum and the trace.

    The Cauchy scale is the median residue of the starting basis and stays
    fixed; the weights are recomputed from the current basis every step.
    """
    if weight not in WEIGHTS:
        raise ValueError(f"unknown weight {weight!r}; expected one of {WEIGHTS}")
    if max_iter < 1:
        raise ValueError(f"max_iter must be >= 1, got {max_iter}")
    if tol < 0:
        raise ValueError(f"tol must be >= 0, got {tol}")
    weigh = cauchy_weights if weight == "cauchy" else l1_weights
    P = problem.project(W)
    s = problem.residues(W, P)
    c = float(np.median(s))
    trace = ConvergenceTrace(unit_weights=c < CAUCHY_FLOOR)
    omega = weigh(s, c)
    for t in range(1, max_iter + 1):
        W_new = orthonormalize(problem.weighted_apply(omega, P)).columns
        change = projector_distance(W, W_new)
        P = problem.project(W_new)
        L = problem.weighted_gram(omega, P)
        trace.append(subspace_change=change, off_diagonality=_off_diagonality(L))
        W = W_new
        omega = weigh(problem.residues(W, P), c)
        if change < tol:
            trace.converged_at = t
            break
    diag = np.diag(problem.weighted_gram(omega, P)).copy()
    order = np.argsort(-diag, kind="stable")
    return W[:, order], diag[order], trace


def fit_r1pca(
    X,
    k: int,
    max_iter: int = 120,
    tol: float = 1e-4,
    weight: str = "cauchy",
    center: bool = True,
) -> tuple[LinearModel, ConvergenceTrace]:
    """R1-PCA by Cauchy-weighted subspace iteration from the PCA basis.

    With ``center=False`` residues and weighted covariance use the raw
    samples, and projection is ``W^T x``.
    """
    X = check_vectors(X, min_samples=2)
    n, d = X.shape
    k = check_n_components(k, min(d, n - 1), "R1-PCA needs k <= min(d, n-1)")
    start = fit_pca(X, k)
    mean = start.mean if center else np.zeros(d)
    W, spectrum, trace = _r1_iterate(_R1Problem(X - mean), start.basis.columns, weight, max_iter, tol)
    model = LinearModel(
        mode=VECTOR_1D,
        mean=mean,
        basis=SubspaceBasis(W),
        eigenvalues=spectrum,
        selected=np.arange(k),
        eigenproblem_shape=start.eigenproblem_shape,
        trace=trace,
    )
    return model, trace


def fit_2dr1pca(
    F,
    k: int,
    max_iter: int = 120,
    tol: float = 1e-4,
    weight: str = "cauchy",
    center: bool = True,
) -> tuple[LinearModel, ConvergenceTrace]:
    """2DR1-PCA: the R1 iteration on image matrices with Frobenius residues."""
    F = check_images(F, min_samples=2)
    n, r, cols = F.shape
    k = check_n_components(k, r, "2DR1-PCA needs k <= image rows")
    start = fit_2dpca(F, k)
    mean = start.mean if center else np.zeros((r, cols))
    W, spectrum, trace = _r1_iterate(_R1Problem(F - mean), start.basis.columns, weight, max_iter, tol)
    model = LinearModel(
        mode=MATRIX_2D,
        mean=mean,
        basis=SubspaceBasis(W),
        eigenvalues=spectrum,
        selected=np.arange(k),
        eigenproblem_shape=start.eigenproblem_shape,
        trace=trace,
    )
    return model, trace


# ---------------------------------------------------------------------------
# L1 family
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class L1State:
    w: np.ndarray
    polarity: np.ndarray
    objective: float
    perturbed: bool = False


@dataclass
class L1History:
    states: list[L1State] = field(default_factory=list)
    hit_cap: bool = False
    converged: bool = False

    def __len__(self) -> int:
        return len(self.states)

    @property
    def objectives(self) -> np.ndarray:
        return np.array([s.objective for s in self.states])


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def l1_component(
    data,
    seed=0,
    init: str = "max_norm_sample",
    max_iter: int = 1000,
) -> tuple[np.ndarray, L1History]:
    """One direction maximizing ``sum_i |w^T x_i|`` over unit vectors.

    Fixed-point polarity flipping: ``p_i = sign(w^T x_i)`` (zero counts as
    positive) and ``w <- normalize(sum_i p_i x_i)``. If the iteration stops on
    a point where some ``w^T x_i`` vanishes, ``w`` is nudged by a small
    seeded random vector and the iteration resumes. The returned vector is
    the best iterate seen.
    """
    X = check_vectors(data)
    if init not in L1_INITS:
        raise ValueError(f"unknown init {init!r}; expected one of {L1_INITS}")
    norms = np.linalg.norm(X, axis=1)
    top = float(norms.max())
    if top == 0.0:
        raise ValueError("all data vectors are zero")
    rng = _rng(seed)
    d = X.shape[1]
    live = norms > 1e-12 * top
    step = 1e-6 * float(norms.mean())

    def nudge(w):
        dw = rng.standard_normal(d)
        w = w + step * dw / np.linalg.norm(dw)
        return w / np.linalg.norm(w)

    w = X[int(np.argmax(norms))] if init == "max_norm_sample" else rng.standard_normal(d)
    w = w / np.linalg.norm(w)
    history = L1History()
    perturbed = False
    for _ in range(max_iter):
        proj = X @ w
        p = np.where(proj < 0, -1.0, 1.0)
        history.states.append(L1State(w, p, float(np.abs(proj).sum()), perturbed))
        perturbed = False
        w_new = p @ X
        size = np.linalg.norm(w_new)
        if size == 0.0:
            w, perturbed = nudge(w), True
            continue
        w_new = w_new / size
        if np.array_equal(w_new, w):
            if np.any(np.abs(proj[live]) <= 1e-12 * norms[live]):
                w, perturbed = nudge(w), True
                continue
            history.converged = True
            break
        w = w_new
    else:
        history.hit_cap = True
    best = int(np.argmax(history.objectives))
    return history.states[best].w.copy(), history


def l1_greedy(
    data,
    k: int,
    seed=0,
    init: str = "max_norm_sample",
    histories: Optional[list] = None,
) -> SubspaceBasis:
    """``k`` L1 directions by greedy deflation ``x_i <- x_i - w (w^T x_i)``.

    Pass a list as ``histories`` to collect each component's L1History.
    """
    X = check_vectors(data).copy()
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    if k > X.shape[1]:
        raise ValueError(f"k={k} exceeds the data dimension {X.shape[1]}")
    rng = _rng(seed)
    scale = float(np.linalg.norm(X, axis=1).max())
    ws = []
    for j in range(k):
        if scale == 0.0 or float(np.linalg.norm(X, axis=1).max()) <= 1e-10 * scale:
            raise ValueError(f"deflated data vanished after {j} of {k} components")
        w, history = l1_component(X, seed=rng, init=init)
        if histories is not None:
            histories.append(history)
        ws.append(w)
        X -= np.outer(X @ w, w)
    return SubspaceBasis(np.column_stack(ws))


def _l1_trace(histories: list[L1History]) -> ConvergenceTrace:
    trace = ConvergenceTrace(hit_cap=any(h.hit_cap for h in histories))
    for h in histories:
        prev = None
        for s in h.states:
            change = 0.0 if prev is None else projector_distance(prev[:, None], s.w[:, None])
            trace.append(subspace_change=change, objective=s.objective)
            prev = s.w
    if all(h.converged for h in histories):
        trace.converged_at = len(trace)
    return trace


def _dispersions(histories: list[L1History]) -> np.ndarray:
    return np.array([h.objectives.max() for h in histories])


def fit_l1pca(X, k: int, seed=0, init: str = "max_norm_sample", center: bool = True) -> LinearModel:
    """Greedy L1-PCA on (centered) vectorized samples."""
    X = check_vectors(X)
    n, d = X.shape
    k = check_n_components(k, d, "L1-PCA needs k <= d")
    mean = X.mean(axis=0) if center else np.zeros(d)
    histories: list[L1History] = []
    basis = l1_greedy(X - mean, k, seed=seed, init=init, histories=histories)
    return LinearModel(
        mode=VECTOR_1D,
        mean=mean,
        basis=basis,
        eigenvalues=_dispersions(histories),
        selection="greedy",
        selected=np.arange(k),
        trace=_l1_trace(histories),
    )


def fit_2dl1pca(F, k: int, seed=0, init: str = "max_norm_sample", center: bool = True) -> LinearModel:
    """Greedy L1-PCA on every column of every (centered) image."""
    F = check_images(F)
    n, r, cols = F.shape
    k = check_n_components(k, r, "2DL1-PCA needs k <= image rows")
    mean = F.mean(axis=0) if center else np.zeros((r, cols))
    histories: list[L1History] = []
    basis = l1_greedy(columns_of(F - mean), k, seed=seed, init=init, histories=histories)
    return LinearModel(
        mode=MATRIX_2D,
        mean=mean,
        basis=basis,
        eigenvalues=_dispersions(histories),
        selection="greedy",
        selected=np.arange(k),
        trace=_l1_trace(histories),
    )


# ---------------------------------------------------------------------------
# Estimators
# ---------------------------------------------------------------------------

class _RobustSubspace(TransformerMixin, BaseEstimator):
    _image_input = False

    def fit(self, X, y=None):
        X = check_images(X) if self._image_input else check_vectors(X)
        self.model_ = self._fit_model(X)
        self.trace_ = self.model_.trace
        self.converged_at_ = self.trace_.converged_at
        self.components_ = self.model_.basis.columns.T
        self.mean_ = self.model_.mean
        self.n_features_in_ = X.shape[1] if X.ndim == 2 else int(np.prod(X.shape[1:]))
        return self

    def transform(self, X):
        check_is_fitted(self, "model_")
        return self.model_.transform(X)


class R1PCA(_RobustSubspace):
    def __init__(self, n_components=10, max_iter=120, tol=1e-4, weight="cauchy", center=True):
        self.n_components = n_components
        self.max_iter = max_iter
        self.tol = tol
        self.weight = weight
        self.center = center

    def _fit_model(self, X):
        return fit_r1pca(X, self.n_components, self.max_iter, self.tol, self.weight, self.center)[0]


class TwoDR1PCA(R1PCA):
    _image_input = True

    def _fit_model(self, X):
        return fit_2dr1pca(X, self.n_components, self.max_iter, self.tol, self.weight, self.center)[0]


class L1PCA(_RobustSubspace):
    def __init__(self, n_components=10, init="max_norm_sample", random_state=0, center=True):
        self.n_components = n_components
        self.init = init
        self.random_state = random_state
        self.center = center

    def _fit_model(self, X):
        return fit_l1pca(X, self.n_components, self.random_state, self.init, self.center)


class TwoDL1PCA(L1PCA):
    _image_input = True

    def _fit_model(self, X):
        return fit_2dl1pca(X, self.n_components, self.random_state, self.init, self.center)
