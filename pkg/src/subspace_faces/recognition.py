"""Minimum-distance (1-nearest-neighbour) classification in feature space."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.spatial.distance import cdist
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

METRICS = ("euclidean", "frobenius", "colsum")


@dataclass(frozen=True)
class Prediction:
    label: object
    distance: float
    index: int


def distance_matrix(probe, gallery, metric: str = "euclidean") -> np.ndarray:
    """Pairwise distances between probe and gallery features.

    Vector features use the Euclidean norm. Matrix features (n, k, cols) use
    the Frobenius norm of the difference, or with ``colsum`` the sum of the
    Euclidean norms of the column differences.
    """
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}; expected one of {METRICS}")
    probe = np.asarray(probe, dtype=float)
    gallery = np.asarray(gallery, dtype=float)
    if probe.shape[1:] != gallery.shape[1:]:
        raise ValueError(f"feature shapes differ: probe {probe.shape[1:]} vs gallery {gallery.shape[1:]}")
    if gallery.shape[0] == 0:
        raise ValueError("gallery is empty")
    if metric == "colsum":
        if probe.ndim != 3:
            raise ValueError("colsum distance needs matrix features")
        D = np.zeros((probe.shape[0], gallery.shape[0]))
        for j in range(probe.shape[2]):
            D += cdist(probe[:, :, j], gallery[:, :, j])
        return D
    return cdist(probe.reshape(probe.shape[0], -1), gallery.reshape(gallery.shape[0], -1))


def classify(gallery, gallery_labels, probe, metric: str = "euclidean") -> list[Prediction]:
    """Label every probe with its nearest gallery item (ties: lowest gallery index)."""
    gallery_labels = np.asarray(gallery_labels, dtype=object)
    if len(gallery_labels) != len(gallery):
        raise ValueError(f"{len(gallery)} gallery features but {len(gallery_labels)} labels")
    D = distance_matrix(probe, gallery, metric)
    idx = np.argmin(D, axis=1)
    return [Prediction(gallery_labels[i], float(D[row, i]), int(i)) for row, i in enumerate(idx)]


def accuracy(predictions: Sequence[Prediction], truth: Sequence) -> float:
    if len(predictions) != len(truth):
        raise ValueError(f"{len(predictions)} predictions but {len(truth)} true labels")
    if not predictions:
        raise ValueError("no predictions to score")
    hits = sum(p.label == t for p, t in zip(predictions, truth))
    return hits / len(predictions)


class MinimumDistanceClassifier(ClassifierMixin, BaseEstimator):
    """1-NN over stored training features; accepts vector or matrix features."""

    def __init__(self, metric="euclidean"):
        self.metric = metric

    def fit(self, X, y):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y)
        if X.shape[0] != y.shape[0]:
            raise ValueError(f"{X.shape[0]} samples but {y.shape[0]} labels")
        if X.shape[0] == 0:
            raise ValueError("cannot fit on an empty gallery")
        self.gallery_ = X
        self.classes_, self.gallery_labels_ = np.unique(y, return_inverse=True)
        return self

    def predict(self, X):
        check_is_fitted(self, "gallery_")
        D = distance_matrix(np.asarray(X, dtype=float), self.gallery_, self.metric)
        return self.classes_[self.gallery_labels_[np.argmin(D, axis=1)]]
