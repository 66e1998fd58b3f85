"""ECEC: confidence-thresholded early classification.

Prefix classifiers are trained at ``N`` checkpoints. Cross-validated
predictions give, per checkpoint, the reliability ``r[k, pred, true]`` of a
prediction. The confidence in the current label after ``t`` checkpoints is
``1 - prod_k (1 - r[k, pred_k, label_t])``, and a label is emitted once the
confidence reaches a threshold chosen on training data to minimize
``alpha * (1 - accuracy) + (1 - alpha) * earliness``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .base import EarlyClassifier, as_prefix, as_univariate, checkpoint_schedule
from .learners import cross_val_proba
from .teaser import prefix_word_classifier


def estimate_reliability(predictions, y, n_classes: int, smoothing: float = 1.0) -> np.ndarray:
    """Reliability table ``r[k, pred, true]`` from out-of-fold predictions.

    ``predictions`` has shape ``(n, N)``. Counts are Laplace-smoothed so no
    entry is exactly zero; each ``r[k, pred]`` row sums to one.
    """
    P = np.atleast_2d(np.asarray(predictions, dtype=int))
    y = np.asarray(y, dtype=int)
    if P.shape[0] != len(y):
        raise ValueError("predictions and labels disagree in length")
    N = P.shape[1]
    counts = np.zeros((N, n_classes, n_classes))
    for k in range(N):
        np.add.at(counts[k], (P[:, k], y), 1.0)
    counts += smoothing
    return counts / counts.sum(axis=2, keepdims=True)


def confidence(r: np.ndarray, preds) -> float:
    """Confidence in ``preds[-1]`` given the predictions at checkpoints ``1..t``."""
    preds = np.asarray(preds, dtype=int)
    t = len(preds)
    if t < 1:
        raise ValueError("need at least one prediction")
    unrel = 1.0 - r[np.arange(t), preds, preds[-1]]
    return float(1.0 - np.prod(unrel))


def confidence_matrix(r: np.ndarray, P: np.ndarray) -> np.ndarray:
    """``C[i, t]``: confidence of instance ``i`` after checkpoint ``t`` (0-based)."""
    n, N = P.shape
    out = np.empty((n, N))
    for t in range(N):
        # r[k, P[i,k], P[i,t]] for k <= t
        unrel = 1.0 - r[np.arange(t + 1)[None, :], P[:, : t + 1], P[:, t : t + 1]]
        out[:, t] = 1.0 - np.prod(unrel, axis=1)
    return out


def threshold_candidates(conf) -> np.ndarray:
    """Midpoints of adjacent sorted confidences, plus the smallest confidence.

    The smallest value makes "always emit at the first checkpoint" reachable.
    """
    v = np.unique(np.asarray(conf, dtype=float).ravel())
    return np.unique(np.concatenate([v[:1], (v[1:] + v[:-1]) / 2.0]))


def trigger_indices(conf: np.ndarray, theta: float) -> np.ndarray:
    """First checkpoint with confidence >= ``theta``; the last one otherwise."""
    hit = conf >= theta
    hit[:, -1] = True
    return np.argmax(hit, axis=1)


def cost(conf, P, y, lengths, T: int, theta: float, alpha: float) -> tuple[float, float, float]:
    """(CF, accuracy, earliness) of threshold ``theta`` on the given predictions."""
    trig = trigger_indices(conf, theta)
    n = len(y)
    acc = float(np.mean(P[np.arange(n), trig] == y))
    earl = float(np.mean(np.asarray(lengths)[trig] / T))
    return alpha * (1.0 - acc) + (1.0 - alpha) * earl, acc, earl


def select_threshold(conf, P, y, lengths, T: int, alpha: float) -> tuple[float, np.ndarray, np.ndarray]:
    """Candidate minimizing the cost (smallest on ties), with all candidates and costs."""
    cands = threshold_candidates(conf)
    n = len(y)
    # first index with running-max confidence >= theta equals first index with confidence >= theta
    run = np.maximum.accumulate(conf, axis=1)
    N = conf.shape[1]
    trig = np.empty((n, len(cands)), dtype=int)
    for i in range(n):
        trig[i] = np.minimum(np.searchsorted(run[i], cands, side="left"), N - 1)
    correct = P[np.arange(n)[:, None], trig] == np.asarray(y)[:, None]
    acc = correct.mean(axis=0)
    earl = (np.asarray(lengths)[trig] / T).mean(axis=0)
    costs = alpha * (1.0 - acc) + (1.0 - alpha) * earl
    best = int(np.argmin(costs))
    return float(cands[best]), cands, costs


@dataclass
class EcecState:
    preds: list = field(default_factory=list)


class ECEC(EarlyClassifier):
    """Early classifier emitting once the cumulative confidence passes a learned threshold."""

    def __init__(self, n_prefixes: int = 20, alpha: float = 0.8, cv_folds: int = 5, seed: int = 0, **word_params):
        self.n_prefixes = n_prefixes
        self.alpha = alpha
        self.cv_folds = cv_folds
        self.seed = seed
        self.word_params = word_params

    def fit(self, X, y):
        X = as_univariate(X)
        yi = self._encode(y)
        n, T = X.shape
        self.length_ = T
        self.prefix_lengths_ = checkpoint_schedule(T, self.n_prefixes)
        C = self.n_classes_
        oof = np.empty((n, len(self.prefix_lengths_)), dtype=int)
        self.classifiers_ = []
        for k, L in enumerate(self.prefix_lengths_):
            factory = lambda L=L: prefix_word_classifier(L, **self.word_params)
            oof[:, k] = np.argmax(cross_val_proba(factory, X[:, :L], yi, C, self.cv_folds, self.seed), axis=1)
            self.classifiers_.append(factory().fit(X[:, :L], yi, C))
        self.reliability_ = estimate_reliability(oof, yi, C)
        conf = confidence_matrix(self.reliability_, oof)
        self.theta_, self.candidates_, self.costs_ = select_threshold(
            conf, oof, yi, self.prefix_lengths_, T, self.alpha)
        return self

    def checkpoints(self):
        return list(self.prefix_lengths_)

    def init_state(self):
        return EcecState()

    def decide_index(self, prefix, state: EcecState | None = None) -> int | None:
        p = as_prefix(prefix)
        t = len(p)
        if t not in self.prefix_lengths_:
            raise ValueError(f"prefix length {t} is not a checkpoint {self.prefix_lengths_}")
        k = self.prefix_lengths_.index(t)
        state = state if state is not None else EcecState()
        # fill in any checkpoints the caller skipped
        while len(state.preds) <= k:
            j = len(state.preds)
            L = self.prefix_lengths_[j]
            state.preds.append(int(self.classifiers_[j].predict(p[np.newaxis, :L])[0]))
        preds = state.preds[: k + 1]
        if k == len(self.prefix_lengths_) - 1 or confidence(self.reliability_, preds) >= self.theta_:
            return preds[-1]
        return None

    def decide(self, prefix, state=None):
        idx = self.decide_index(prefix, state)
        return None if idx is None else self.classes_[idx]
