"""ECONOMY-K: non-myopic early classification by expected cost.

Training series are grouped by K-Means on their full length. For every
prefix length ``t`` and cluster ``k`` a naive Bayes classifier ``h_t^k`` is
fitted on the cluster's prefixes, and its training confusion gives
``P_t(pred | y, k)``. At time ``t`` the expected cost of deciding ``tau``
steps later is

    f_tau = sum_k m_k sum_y P(y|k) sum_pred P_{t+tau}(pred|y,k) cost(pred, y) + time_cost * (t + tau)

with cluster memberships ``m_k`` from sigmoids of centroid distances. The
model predicts when ``tau = 0`` minimizes the cost.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .base import EarlyClassifier, harmonic_mean
from .learners import GaussianNB, ProbClassifier, kmeans

logger = logging.getLogger(__name__)

K_GRID = (1, 2, 3)


class ConstantClassifier(ProbClassifier):
    """Predicts a fixed class distribution regardless of input."""

    def __init__(self, proba):
        self.proba = np.asarray(proba, dtype=float)
        self.n_classes_ = len(self.proba)

    def fit(self, X, y, n_classes=None):
        return self

    def predict_proba(self, X):
        return np.tile(self.proba, (len(np.atleast_2d(X)), 1))


def as_panel(X) -> np.ndarray:
    """``(n, D, T)`` view of univariate ``(n, T)`` or multivariate data."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 2:
        X = X[:, np.newaxis, :]
    if X.ndim != 3:
        raise ValueError(f"expected (n, T) or (n, D, T) data, got shape {X.shape}")
    return X


def memberships(centroids: np.ndarray, prefix, lam: float) -> np.ndarray:
    """Cluster membership probabilities of a prefix.

    Parameters
    ----------
    centroids : ndarray, shape (K, D, T)
    prefix : array_like, shape (D, t) or (t,)
    lam : float
        Sigmoid sharpness.

    Notes
    -----
    ``Delta_k`` is the mean distance to all centroids minus the distance to
    centroid ``k``, both measured on the first ``t`` points. The closest
    centroid has ``Delta_k >= 0``, so the normalizer is at least one half.
    """
    p = np.asarray(prefix, dtype=float)
    if p.ndim == 1:
        p = p[np.newaxis, :]
    t = p.shape[-1]
    d = np.sqrt(((centroids[:, :, :t] - p[np.newaxis]) ** 2).sum(axis=(1, 2)))
    s = expit(lam * (d.mean() - d))
    return s / s.sum()


def choose_tau(f) -> int:
    """Offset minimizing the expected cost; ties go to the earliest."""
    return int(np.argmin(np.asarray(f, dtype=float)))


@dataclass
class EconomyKModel:
    """Fitted ECONOMY-K parameters.

    Attributes
    ----------
    centroids : ndarray, shape (K, D, T)
    classifiers : list of list
        ``classifiers[t-1][k]`` is ``h_t^k``.
    confusion : ndarray, shape (T, K, C, C)
        ``confusion[t-1, k, y, pred] = P_t(pred | y, k)``.
    class_given_cluster : ndarray, shape (K, C)
        ``P(y | c_k)``.
    lam, time_cost : float
    misclass_cost : ndarray, shape (C, C)
        ``misclass_cost[pred, y]``.
    """

    centroids: np.ndarray
    classifiers: list
    confusion: np.ndarray
    class_given_cluster: np.ndarray
    lam: float = 100.0
    time_cost: float = 0.001
    misclass_cost: np.ndarray | None = None

    def __post_init__(self):
        C = self.confusion.shape[-1]
        if self.misclass_cost is None:
            self.misclass_cost = 1.0 - np.eye(C)
        # expected misclassification cost per (t, k), ignoring memberships
        pair = self.confusion * self.misclass_cost.T[np.newaxis, np.newaxis]
        self._risk = np.einsum("ky,tky->tk", self.class_given_cluster, pair.sum(axis=3))

    @property
    def length(self) -> int:
        return self.confusion.shape[0]

    @property
    def n_clusters(self) -> int:
        return self.centroids.shape[0]

    def memberships(self, prefix) -> np.ndarray:
        return memberships(self.centroids, prefix, self.lam)

    def expected_costs(self, prefix) -> np.ndarray:
        """``f_tau`` for ``tau = 0..T-t``."""
        p = np.asarray(prefix, dtype=float)
        t = p.shape[-1]
        if not 1 <= t <= self.length:
            raise ValueError(f"prefix length {t} outside [1, {self.length}]")
        m = self.memberships(p)
        future = np.arange(t, self.length + 1)
        return self._risk[future - 1] @ m + self.time_cost * future

    def expected_cost(self, prefix, tau: int) -> float:
        f = self.expected_costs(prefix)
        if not 0 <= tau < len(f):
            raise ValueError(f"tau={tau} outside [0, {len(f) - 1}]")
        return float(f[tau])

    def decide_index(self, prefix) -> int | None:
        p = np.asarray(prefix, dtype=float)
        if p.ndim == 1:
            p = p[np.newaxis, :]
        t = p.shape[-1]
        if t < self.length and choose_tau(self.expected_costs(p)) != 0:
            return None
        k = int(np.argmax(self.memberships(p)))
        return int(self.classifiers[t - 1][k].predict(p.reshape(1, -1))[0])


def fit_economy_model(X, y, n_classes: int, k: int, lam: float = 100.0, time_cost: float = 0.001,
                      misclass_cost=None, seed: int = 0) -> EconomyKModel:
    """Fit clusters, per-(t, k) classifiers and their smoothed confusions."""
    X = as_panel(X)
    y = np.asarray(y, dtype=int)
    n, D, T = X.shape
    C = n_classes
    km = kmeans(X.reshape(n, -1), k, seed=seed)
    centroids = km.centroids.reshape(k, D, T)
    groups = [np.flatnonzero(km.labels == c) for c in range(k)]
    overall = np.bincount(y, minlength=C) / n

    class_given_cluster = np.empty((k, C))
    for c, g in enumerate(groups):
        class_given_cluster[c] = (np.bincount(y[g], minlength=C) + 1.0) / (len(g) + C)

    classifiers = []
    confusion = np.empty((T, k, C, C))
    for t in range(1, T + 1):
        flat = X[:, :, :t].reshape(n, -1)
        row = []
        for c, g in enumerate(groups):
            if len(g) == 0:
                h = ConstantClassifier(overall)
            elif len(np.unique(y[g])) == 1:
                h = ConstantClassifier(np.eye(C)[y[g][0]])
            else:
                h = GaussianNB().fit(flat[g], y[g], C)
            row.append(h)
            counts = np.ones((C, C))
            if len(g):
                np.add.at(counts, (y[g], h.predict(flat[g])), 1.0)
            confusion[t - 1, c] = counts / counts.sum(axis=1, keepdims=True)
        classifiers.append(row)
    return EconomyKModel(centroids, classifiers, confusion, class_given_cluster, lam, time_cost,
                         None if misclass_cost is None else np.asarray(misclass_cost, dtype=float))


class EconomyK(EarlyClassifier):
    """Expected-cost early classifier over K-Means clusters.

    Parameters
    ----------
    k : int or sequence of int
        Cluster count, or candidates scored by training harmonic mean (ties
        go to the smaller count).
    lam : float
        Membership sigmoid sharpness.
    time_cost : float
        Cost per observed time point.
    """

    multivariate = True

    def __init__(self, k=K_GRID, lam: float = 100.0, time_cost: float = 0.001, misclass_cost=None, seed: int = 0):
        self.k = k
        self.lam = lam
        self.time_cost = time_cost
        self.misclass_cost = misclass_cost
        self.seed = seed

    def fit(self, X, y):
        X = as_panel(X)
        yi = self._encode(y)
        n, _, T = X.shape
        self.length_ = T
        n_distinct = len(np.unique(X.reshape(n, -1), axis=0))
        grid = [self.k] if np.isscalar(self.k) else list(self.k)
        grid = [k for k in grid if k <= n_distinct] or [1]
        self.k_scores_ = {}
        best = None
        for k in grid:
            model = fit_economy_model(X, yi, self.n_classes_, k, self.lam, self.time_cost,
                                      self.misclass_cost, self.seed)
            self.model_ = model
            labels, trig = self._simulate(X)
            score = harmonic_mean(float(np.mean(labels == yi)), float(np.mean(trig / T)))
            self.k_scores_[k] = score
            if best is None or score > best[0]:
                best = (score, k, model)
        _, self.k_, self.model_ = best
        return self

    def _simulate(self, X):
        out = [self._stream(x) for x in X]
        return np.array([o[0] for o in out]), np.array([o[1] for o in out])

    def _stream(self, x):
        for t in range(1, self.length_ + 1):
            idx = self.model_.decide_index(x[:, :t])
            if idx is not None:
                return idx, t
        raise RuntimeError("no decision at full length")

    def decide_index(self, prefix, state=None) -> int | None:
        p = np.asarray(prefix, dtype=float)
        return self.model_.decide_index(p if p.ndim == 2 else p[np.newaxis, :])

    def decide(self, prefix, state=None):
        idx = self.decide_index(prefix, state)
        return None if idx is None else self.classes_[idx]
