"""Per-variable voting for multivariate data and the fixed-prefix baseline."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .base import EarlyClassifier, harmonic_mean
from .core import stratified_assignments
from .learners import LogisticRegression

PREFIX_FRACTIONS = (0.4, 0.5, 0.6)


def vote(labels):
    """Most frequent label; among tied labels the one a lower-index voter emitted first."""
    labels = list(labels)
    if not labels:
        raise ValueError("no votes")
    counts = Counter(labels)
    top = max(counts.values())
    return next(lab for lab in labels if counts[lab] == top)


def vote_traces(labels, triggers) -> tuple[object, int]:
    """(voted label, trigger of the last voter to fire)."""
    return vote(labels), int(max(triggers))


@dataclass
class VoteState:
    states: list
    labels: list
    triggers: list = field(default_factory=list)
    t: int = 0


class VotingClassifier(EarlyClassifier):
    """One univariate early classifier per variable, combined by majority vote.

    Voters advance in lock-step over the prefix; the ensemble emits once the
    last voter has emitted, so its trigger is the latest voter trigger.
    """

    multivariate = True

    def __init__(self, factory):
        self.factory = factory

    def fit(self, X, y):
        X = np.asarray(X, dtype=float)
        if X.ndim == 2:
            X = X[:, np.newaxis, :]
        self._encode(y)
        self.length_ = X.shape[2]
        self.voters_ = [self.factory().fit(X[:, d, :], y) for d in range(X.shape[1])]
        self._points = [set(v.checkpoints()) for v in self.voters_]
        return self

    def checkpoints(self):
        return sorted(set().union(*self._points))

    def preprocess(self, series):
        s = np.asarray(series, dtype=float)
        if s.ndim == 1:
            s = s[np.newaxis, :]
        return np.stack([v.preprocess(row) for v, row in zip(self.voters_, s)])

    def init_state(self):
        D = len(self.voters_)
        return VoteState([v.init_state() for v in self.voters_], [None] * D, [None] * D)

    def decide(self, prefix, state: VoteState | None = None):
        p = np.asarray(prefix, dtype=float)
        if p.ndim == 1:
            p = p[np.newaxis, :]
        t = p.shape[-1]
        state = state if state is not None else self.init_state()
        # replay voter checkpoints the caller skipped
        for s in self.checkpoints():
            if state.t < s < t:
                self._advance(p[:, :s], state)
        self._advance(p, state)
        state.t = t
        if any(lab is None for lab in state.labels):
            return None
        return vote(state.labels)

    def _advance(self, p, state):
        t = p.shape[-1]
        for d, voter in enumerate(self.voters_):
            if state.labels[d] is None and t in self._points[d]:
                lab = voter.decide(p[d], state.states[d])
                if lab is not None:
                    state.labels[d], state.triggers[d] = lab, t


class FixedPrefixModel(EarlyClassifier):
    """Predicts once, from a prefix covering a fixed fraction of the series.

    The fraction is picked from ``fractions`` by harmonic mean on a seeded
    75/25 stratified holdout (ties go to the smaller fraction); the
    classifier is then refitted on the whole training set.
    """

    multivariate = True

    def __init__(self, fractions=PREFIX_FRACTIONS, learner=LogisticRegression, seed: int = 0):
        self.fractions = tuple(fractions)
        self.learner = learner
        self.seed = seed

    @staticmethod
    def _flat(X, L):
        return X[:, :, :L].reshape(len(X), -1)

    def fit(self, X, y):
        X = np.asarray(X, dtype=float)
        if X.ndim == 2:
            X = X[:, np.newaxis, :]
        yi = self._encode(y)
        C = self.n_classes_
        T = X.shape[2]
        self.length_ = T
        hold = stratified_assignments(yi.tolist(), 4, self.seed) == 0
        if hold.all() or not hold.any():
            hold = np.zeros(len(yi), dtype=bool)
        self.scores_ = {}
        for p in self.fractions:
            L = math.ceil(p * T)
            if hold.any():
                clf = self.learner().fit(self._flat(X[~hold], L), yi[~hold], C)
                acc = float(np.mean(clf.predict(self._flat(X[hold], L)) == yi[hold]))
            else:
                acc = 1.0
            self.scores_[p] = harmonic_mean(acc, L / T)
        self.fraction_ = max(self.fractions, key=lambda p: (self.scores_[p], -p))
        self.prefix_length_ = math.ceil(self.fraction_ * T)
        self.classifier_ = self.learner().fit(self._flat(X, self.prefix_length_), yi, C)
        return self

    def checkpoints(self):
        return [self.prefix_length_]

    def decide(self, prefix, state=None):
        p = np.asarray(prefix, dtype=float)
        if p.ndim == 1:
            p = p[np.newaxis, :]
        if p.shape[-1] < self.prefix_length_:
            return None
        x = p[:, : self.prefix_length_].reshape(1, -1)
        return self.classes_[int(self.classifier_.predict(x)[0])]
