"""Base learners shared by the early classifiers.

Every probabilistic classifier follows the same small contract: ``fit(X, y,
n_classes)`` with integer labels in ``[0, n_classes)`` and
``predict_proba(X)`` returning rows that sum to one over all ``n_classes``
(classes absent at fit time get probability zero or close to it).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import logsumexp, softmax
from scipy.stats import norm

logger = logging.getLogger(__name__)


def _n_classes(y: np.ndarray, n_classes: int | None) -> int:
    return int(n_classes) if n_classes is not None else int(np.max(y)) + 1


class ProbClassifier:
    n_classes_: int

    def fit(self, X, y, n_classes: int | None = None) -> "ProbClassifier":
        raise NotImplementedError

    def predict_proba(self, X) -> np.ndarray:
        raise NotImplementedError

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.predict_proba(X), axis=1)


# ---------------------------------------------------------------- logistic regression


def softmax_loss_grad(W: np.ndarray, b: np.ndarray, X: np.ndarray, Y: np.ndarray, l2: float):
    """Mean cross-entropy plus ``l2/2 * ||W||^2`` and its gradients.

    ``Y`` is one-hot ``(n, C)``; the bias is not penalized.
    """
    n = X.shape[0]
    logits = X @ W + b
    log_p = logits - logsumexp(logits, axis=1, keepdims=True)
    loss = -np.sum(Y * log_p) / n + 0.5 * l2 * np.sum(W * W)
    diff = (np.exp(log_p) - Y) / n
    return loss, X.T @ diff + l2 * W, diff.sum(axis=0)


class LogisticRegression(ProbClassifier):
    """Multinomial logistic regression fitted by full-batch gradient descent.

    Features are standardized internally. The fixed step is ``1/L`` with
    ``L`` the Lipschitz bound of the gradient; Nesterov momentum speeds up
    the otherwise plain descent.
    """

    def __init__(self, l2: float = 1e-3, max_iter: int = 500, tol: float = 1e-5):
        self.l2 = l2
        self.max_iter = max_iter
        self.tol = tol

    def _scale(self, X):
        return (X - self.mean_) / self.scale_

    def fit(self, X, y, n_classes=None):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=int)
        if X.ndim != 2 or X.shape[0] != y.shape[0] or X.shape[0] == 0:
            raise ValueError(f"dimension mismatch: X {X.shape}, y {y.shape}")
        C = _n_classes(y, n_classes)
        self.n_classes_ = C
        self.mean_ = X.mean(axis=0)
        sd = X.std(axis=0)
        self.scale_ = np.where(sd > 1e-12, sd, 1.0)
        Xs = self._scale(X)
        n, F = Xs.shape
        Y = np.zeros((n, C))
        Y[np.arange(n), y] = 1.0

        lip = 0.5 * (np.linalg.norm(Xs, 2) ** 2 + n) / n + self.l2
        step = 1.0 / lip
        W = np.zeros((F, C))
        b = np.log((Y.sum(axis=0) + 1e-3) / (n + 1e-3 * C))
        W_prev, b_prev = W, b
        self.converged_ = False
        for it in range(1, self.max_iter + 1):
            mom = (it - 1) / (it + 2)
            Wm = W + mom * (W - W_prev)
            bm = b + mom * (b - b_prev)
            _, gW, gb = softmax_loss_grad(Wm, bm, Xs, Y, self.l2)
            W_prev, b_prev = W, b
            W = Wm - step * gW
            b = bm - step * gb
            if it % 10 == 0 or it == self.max_iter:
                _, gW, gb = softmax_loss_grad(W, b, Xs, Y, self.l2)
                if np.sqrt(np.sum(gW**2) + np.sum(gb**2)) < self.tol:
                    self.converged_ = True
                    break
        self.n_iter_ = it
        self.coef_, self.intercept_ = W, b
        if not self.converged_:
            logger.debug("logistic regression stopped at max_iter=%d", self.max_iter)
        return self

    def gradient_norm(self, X, y) -> float:
        """Norm of the training-loss gradient at the fitted parameters."""
        Xs = self._scale(np.asarray(X, dtype=float))
        Y = np.zeros((Xs.shape[0], self.n_classes_))
        Y[np.arange(Xs.shape[0]), np.asarray(y, dtype=int)] = 1.0
        _, gW, gb = softmax_loss_grad(self.coef_, self.intercept_, Xs, Y, self.l2)
        return float(np.sqrt(np.sum(gW**2) + np.sum(gb**2)))

    def predict_proba(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return softmax(self._scale(X) @ self.coef_ + self.intercept_, axis=1)


def fit_logreg(X, y, l2=1e-3, max_iter=500, tol=1e-5, n_classes=None) -> LogisticRegression:
    return LogisticRegression(l2=l2, max_iter=max_iter, tol=tol).fit(X, y, n_classes)


# ---------------------------------------------------------------- naive Bayes


class GaussianNB(ProbClassifier):
    """Gaussian naive Bayes with a small variance floor."""

    def __init__(self, var_smoothing: float = 1e-9):
        self.var_smoothing = var_smoothing

    def fit(self, X, y, n_classes=None):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        y = np.asarray(y, dtype=int)
        C = _n_classes(y, n_classes)
        self.n_classes_ = C
        F = X.shape[1]
        self.theta_ = np.zeros((C, F))
        self.var_ = np.ones((C, F))
        counts = np.bincount(y, minlength=C).astype(float)
        self.class_prior_ = counts / counts.sum()
        eps = self.var_smoothing * max(float(np.var(X, axis=0).max()), 1e-12)
        for c in np.flatnonzero(counts):
            Xc = X[y == c]
            self.theta_[c] = Xc.mean(axis=0)
            self.var_[c] = Xc.var(axis=0) + eps
        return self

    def predict_proba(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        present = self.class_prior_ > 0
        jll = np.full((X.shape[0], self.n_classes_), -np.inf)
        mu, var = self.theta_[present], self.var_[present]
        ll = -0.5 * np.sum(np.log(2 * np.pi * var), axis=1) - 0.5 * (
            ((X[:, None, :] - mu[None]) ** 2) / var[None]
        ).sum(axis=2)
        jll[:, present] = ll + np.log(self.class_prior_[present])
        return np.exp(jll - logsumexp(jll, axis=1, keepdims=True))


def fit_gnb(X, y, n_classes=None) -> GaussianNB:
    return GaussianNB().fit(X, y, n_classes)


# ---------------------------------------------------------------- symbolic words


def paa(windows: np.ndarray, n_segments: int) -> np.ndarray:
    """Piecewise aggregate approximation along the last axis."""
    w = windows.shape[-1]
    bounds = np.linspace(0, w, n_segments + 1).round().astype(int)
    csum = np.concatenate([np.zeros(windows.shape[:-1] + (1,)), np.cumsum(windows, axis=-1)], axis=-1)
    return (csum[..., bounds[1:]] - csum[..., bounds[:-1]]) / np.diff(bounds)


class WordClassifier(ProbClassifier):
    """Bag of symbolic words fed to logistic regression.

    Each sliding window is (optionally) z-normalized, reduced to
    ``word_length`` segment means, and each mean is discretized into one of
    ``alphabet_size`` symbols. Normalized windows use Gaussian breakpoints;
    raw windows use equi-depth breakpoints learned from the training data.
    """

    def __init__(self, window_length: int = 8, word_length: int = 4, alphabet_size: int = 4,
                 window_norm: bool = False, l2: float = 1e-3, max_iter: int = 500):
        self.window_length = window_length
        self.word_length = word_length
        self.alphabet_size = alphabet_size
        self.window_norm = window_norm
        self.l2 = l2
        self.max_iter = max_iter

    def _segments(self, X: np.ndarray) -> np.ndarray:
        if X.shape[1] < self.window_length:
            raise ValueError(f"series of length {X.shape[1]} shorter than window {self.window_length}")
        win = sliding_window_view(X, self.window_length, axis=1)
        if self.window_norm:
            mu = win.mean(axis=-1, keepdims=True)
            sd = win.std(axis=-1, keepdims=True)
            win = np.where(sd > 1e-8, (win - mu) / np.where(sd > 1e-8, sd, 1.0), 0.0)
        return paa(win, min(self.word_length, self.window_length))

    def _words(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        symbols = np.searchsorted(self.breakpoints_, self._segments(X), side="right")
        powers = self.alphabet_size ** np.arange(symbols.shape[-1])
        return symbols @ powers

    def transform(self, X) -> np.ndarray:
        """Word-count matrix over the training vocabulary."""
        words = self._words(X)
        vocab = self.vocabulary_words_
        cols = np.minimum(np.searchsorted(vocab, words), len(vocab) - 1)
        known = vocab[cols] == words
        rows = np.broadcast_to(np.arange(words.shape[0])[:, None], words.shape)
        out = np.zeros((words.shape[0], len(vocab)))
        np.add.at(out, (rows[known], cols[known]), 1.0)
        return out

    def fit(self, X, y, n_classes=None):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        y = np.asarray(y, dtype=int)
        self.n_classes_ = _n_classes(y, n_classes)
        a = self.alphabet_size
        if self.window_norm:
            self.breakpoints_ = norm.ppf(np.arange(1, a) / a)
        else:
            seg = self._segments(X)
            self.breakpoints_ = np.unique(np.quantile(seg, np.arange(1, a) / a)) if a > 1 else np.array([])
        self.vocabulary_words_ = np.unique(self._words(X))
        self.vocabulary_ = {int(w): i for i, w in enumerate(self.vocabulary_words_)}
        self.logreg_ = LogisticRegression(l2=self.l2, max_iter=self.max_iter).fit(self.transform(X), y, self.n_classes_)
        return self

    def predict_proba(self, X):
        return self.logreg_.predict_proba(self.transform(X))


def fit_word_classifier(X, y, window_length, word_length, alphabet_size, **kw) -> WordClassifier:
    return WordClassifier(window_length, word_length, alphabet_size, **kw).fit(X, y)


# ---------------------------------------------------------------- one-class boundary


def min_enclosing_center(V: np.ndarray, n_iter: int = 1000) -> np.ndarray:
    """Approximate minimum-enclosing-ball center (Badoiu-Clarkson iterations)."""
    c = V[0].astype(float).copy()
    for i in range(1, n_iter + 1):
        far = V[np.argmax(np.sum((V - c) ** 2, axis=1))]
        c += (far - c) / (i + 1)
    return c


@dataclass
class OneClassBoundary:
    """Hypersphere acceptance region in score space."""

    center: np.ndarray
    radius: float
    nu: float
    train_distances: np.ndarray = field(repr=False, default_factory=lambda: np.empty(0))

    def accept(self, v) -> bool:
        return bool(np.linalg.norm(np.asarray(v, dtype=float) - self.center) <= self.radius)


def fit_one_class(scores, nu: float = 0.05) -> OneClassBoundary:
    """Sphere around the minimum-enclosing center, shrunk to keep ``1 - nu``.

    The radius is the smallest training distance that still accepts at least
    a ``1 - nu`` fraction of the training vectors.
    """
    V = np.atleast_2d(np.asarray(scores, dtype=float))
    if V.shape[0] < 2:
        raise ValueError("one-class boundary needs at least 2 training vectors")
    if not 0.0 <= nu < 1.0:
        raise ValueError("nu must lie in [0, 1)")
    center = min_enclosing_center(V)
    dist = np.sort(np.linalg.norm(V - center, axis=1))
    keep = int(np.ceil((1.0 - nu) * len(dist) - 1e-9))
    radius = float(dist[max(keep, 1) - 1]) * (1 + 1e-9) + 1e-12
    return OneClassBoundary(center, radius, nu, dist)


def accept(b: OneClassBoundary, v) -> bool:
    return b.accept(v)


# ---------------------------------------------------------------- k-means and 1-NN


@dataclass
class KMeansModel:
    k: int
    centroids: np.ndarray
    labels: np.ndarray
    objective_history: list = field(default_factory=list)

    @property
    def objective(self) -> float:
        return self.objective_history[-1]

    def assign(self, items) -> np.ndarray:
        d = squared_distances(np.atleast_2d(items), self.centroids)
        return np.argmin(d, axis=1)


def squared_distances(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    return ((A[:, None, :] - B[None, :, :]) ** 2).sum(axis=2)


def kmeans(items, k: int, seed: int = 0, max_iter: int = 100) -> KMeansModel:
    """Lloyd's algorithm from ``k`` distinct seeded points.

    Assignment ties go to the lowest centroid index; an emptied cluster keeps
    its previous centroid.
    """
    X = np.atleast_2d(np.asarray(items, dtype=float))
    uniq = np.unique(X, axis=0)
    if not 1 <= k <= len(uniq):
        raise ValueError(f"k={k} needs between 1 and {len(uniq)} distinct items")
    rng = np.random.default_rng(seed)
    centroids = uniq[np.sort(rng.choice(len(uniq), size=k, replace=False))].copy()
    history = []
    labels = np.full(len(X), -1)
    for _ in range(max_iter):
        d = squared_distances(X, centroids)
        new_labels = np.argmin(d, axis=1)
        history.append(float(d[np.arange(len(X)), new_labels].sum()))
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for c in range(k):
            members = X[labels == c]
            if len(members):
                centroids[c] = members.mean(axis=0)
    return KMeansModel(k, centroids, labels, history)


def nn1(query, pool, return_distance: bool = False):
    """Index of the Euclidean nearest pool row (lowest index on ties)."""
    pool = np.atleast_2d(np.asarray(pool, dtype=float))
    d = np.sum((pool - np.asarray(query, dtype=float)) ** 2, axis=1)
    i = int(np.argmin(d))
    return (i, float(np.sqrt(d[i]))) if return_distance else i


def cross_val_proba(factory, X, y, n_classes: int, folds: int = 5, seed: int = 0) -> np.ndarray:
    """Out-of-fold class probabilities from ``folds`` stratified splits.

    ``factory()`` must return an unfitted :class:`ProbClassifier`.
    """
    from .core import stratified_assignments

    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    folds = max(2, min(folds, len(y)))
    assign = stratified_assignments(y.tolist(), folds, seed)
    out = np.zeros((len(y), n_classes))
    for f in range(folds):
        test = assign == f
        if not test.any():
            continue
        model = factory().fit(X[~test], y[~test], n_classes)
        out[test] = model.predict_proba(X[test])
    return out
