"""TEASER: prefix slave classifiers gated by one-class masters and a consistency run.

At each of ``S`` checkpoints a word classifier (the slave) predicts from the
prefix; a one-class boundary (the master) trained on the slave's confident,
correct outputs decides whether that prediction is acceptable. A label is
emitted once the same accepted label has been seen at ``v`` consecutive
checkpoints, or unconditionally at the last checkpoint.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .base import EarlyClassifier, as_prefix, as_univariate, checkpoint_schedule, harmonic_mean
from .core import znormalize
from .learners import OneClassBoundary, WordClassifier, cross_val_proba, fit_one_class

logger = logging.getLogger(__name__)

V_GRID = (1, 2, 3, 4, 5)


def prefix_word_classifier(length: int, window_fraction: float = 0.4, word_length: int = 4,
                           alphabet_size: int = 4, **kw) -> WordClassifier:
    """Word classifier sized for prefixes of ``length`` points."""
    window = int(np.clip(round(window_fraction * length), min(2, length), length))
    return WordClassifier(window, word_length, alphabet_size, **kw)


def master_features(proba: np.ndarray, kind: str = "proba") -> np.ndarray:
    """Score vectors the one-class masters see.

    ``"proba"`` is the full probability vector; ``"margin"`` is (highest
    probability, gap to the runner-up).
    """
    proba = np.atleast_2d(proba)
    if kind == "proba":
        return proba
    if kind == "margin":
        top = np.sort(proba, axis=1)[:, ::-1]
        second = top[:, 1] if top.shape[1] > 1 else np.zeros(len(top))
        return np.column_stack([top[:, 0], top[:, 0] - second])
    raise ValueError(f"unknown master feature kind {kind!r}")


@dataclass
class ConsistencyState:
    last: int | None = None
    run: int = 0
    checkpoint: int = 0


def consistency_step(state: ConsistencyState, label: int, accepted: bool) -> int:
    """Advance the run counter; rejection or a label change restarts it."""
    if not accepted:
        state.last, state.run = None, 0
    elif label == state.last:
        state.run += 1
    else:
        state.last, state.run = label, 1
    return state.run


def simulate_trigger(labels, accepted, v: int) -> int:
    """Index of the checkpoint where TEASER fires for one instance.

    ``labels[i]`` and ``accepted[i]`` are the slave label and master verdict
    at checkpoint ``i``; the last checkpoint always fires.
    """
    state = ConsistencyState()
    last = len(labels) - 1
    for i in range(last):
        if consistency_step(state, labels[i], bool(accepted[i])) >= v:
            return i
    return last


class TEASER(EarlyClassifier):
    """Two-tier early classifier.

    Parameters
    ----------
    n_prefixes : int
        Number of checkpoints ``S``.
    znorm : bool
        Z-normalize every series before training and prediction (TEASER-Z).
        The whole test series is normalized, as in z-normalized benchmark data.
    nu : float
        Fraction of its training vectors a master may reject.
    v : int or None
        Consistency requirement; ``None`` selects it from ``1..5`` by training
        harmonic mean.
    cv_folds : int or None
        Folds for the out-of-fold slave outputs that train the masters and
        score the ``v`` grid; ``None`` uses in-sample outputs instead.
    """

    def __init__(self, n_prefixes: int = 20, znorm: bool = False, nu: float = 0.05, v: int | None = None,
                 master_kind: str = "proba", cv_folds: int | None = 5, seed: int = 0, **word_params):
        self.n_prefixes = n_prefixes
        self.znorm = znorm
        self.nu = nu
        self.v = v
        self.master_kind = master_kind
        self.cv_folds = cv_folds
        self.seed = seed
        self.word_params = word_params

    def fit(self, X, y):
        X = as_univariate(X)
        if self.znorm:
            X = znormalize(X)
        yi = self._encode(y)
        n, T = X.shape
        self.length_ = T
        self.prefix_lengths_ = checkpoint_schedule(T, self.n_prefixes)
        C = self.n_classes_
        S = len(self.prefix_lengths_)

        self.slaves_: list[WordClassifier] = []
        self.masters_: list[OneClassBoundary | None] = []
        oof_labels = np.empty((n, S), dtype=int)
        oof_accept = np.zeros((n, S), dtype=bool)
        for i, L in enumerate(self.prefix_lengths_):
            factory = lambda L=L: prefix_word_classifier(L, **self.word_params)
            Xl = X[:, :L]
            slave = factory().fit(Xl, yi, C)
            self.slaves_.append(slave)
            if self.cv_folds:
                proba = cross_val_proba(factory, Xl, yi, C, self.cv_folds, self.seed)
            else:
                proba = slave.predict_proba(Xl)
            oof_labels[:, i] = np.argmax(proba, axis=1)
            master = None
            if i < S - 1:
                correct = oof_labels[:, i] == yi
                if correct.sum() >= 2:
                    master = fit_one_class(master_features(proba[correct], self.master_kind), self.nu)
                    oof_accept[:, i] = [master.accept(f) for f in master_features(proba, self.master_kind)]
            self.masters_.append(master)

        lengths = np.asarray(self.prefix_lengths_)
        scores = {}
        for v in V_GRID:
            trig = np.array([simulate_trigger(oof_labels[j], oof_accept[j], v) for j in range(n)])
            acc = float(np.mean(oof_labels[np.arange(n), trig] == yi))
            earl = float(np.mean(lengths[trig] / T))
            scores[v] = harmonic_mean(acc, earl)
        self.v_scores_ = scores
        self.v_ = self.v if self.v is not None else max(V_GRID, key=lambda v: (scores[v], -v))
        return self

    def checkpoints(self):
        return list(self.prefix_lengths_)

    def init_state(self):
        return ConsistencyState()

    def decide_index(self, prefix, state: ConsistencyState | None = None) -> int | None:
        p = as_prefix(prefix)
        t = len(p)
        try:
            i = self.prefix_lengths_.index(t)
        except ValueError:
            raise ValueError(f"prefix length {t} is not a checkpoint {self.prefix_lengths_}") from None
        proba = self.slaves_[i].predict_proba(p[np.newaxis, :])
        label = int(np.argmax(proba[0]))
        if i == len(self.prefix_lengths_) - 1:
            return label
        state = state if state is not None else ConsistencyState()
        master = self.masters_[i]
        accepted = master is not None and master.accept(master_features(proba, self.master_kind)[0])
        state.checkpoint = t
        return label if consistency_step(state, label, accepted) >= self.v_ else None

    def decide(self, prefix, state=None):
        idx = self.decide_index(prefix, state)
        return None if idx is None else self.classes_[idx]

    def preprocess(self, series):
        s = as_prefix(series)
        return znormalize(s) if self.znorm else s
