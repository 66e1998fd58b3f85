"""Streaming contract shared by all early classifiers.

A fitted model exposes the prefix lengths at which it wants to be consulted
(``checkpoints``) and a ``decide`` call that returns a class label to emit or
``None`` to wait for more data. Per-stream memory lives in the object
returned by ``init_state`` and is owned by the caller.
"""

from __future__ import annotations

import math

import numpy as np


def checkpoint_schedule(T: int, n: int) -> list[int]:
    """``ceil(T*i/n)`` for ``i = 1..n``: integral, strictly increasing, ending at ``T``."""
    if n < 1:
        raise ValueError("need at least one checkpoint")
    if n > T:
        raise ValueError(f"{n} checkpoints exceed series length {T}")
    return [math.ceil(T * i / n) for i in range(1, n + 1)]


def as_univariate(X) -> np.ndarray:
    """``(n, T)`` view of univariate data given as ``(n, T)`` or ``(n, 1, T)``."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 3:
        if X.shape[1] != 1:
            raise ValueError(f"univariate algorithm got {X.shape[1]} variables; wrap it in VotingClassifier")
        X = X[:, 0, :]
    if X.ndim != 2:
        raise ValueError(f"expected (n, T) or (n, 1, T) data, got shape {X.shape}")
    return X


def as_prefix(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim == 2:
        if p.shape[0] != 1:
            raise ValueError("univariate algorithm got a multivariate prefix")
        p = p[0]
    return p


class EarlyClassifier:
    """Base class: label bookkeeping and the prefix-streaming loop."""

    multivariate = False
    classes_: np.ndarray
    length_: int

    def _encode(self, y) -> np.ndarray:
        self.classes_, yi = np.unique(np.asarray(y), return_inverse=True)
        return yi.astype(int)

    @property
    def n_classes_(self) -> int:
        return len(self.classes_)

    def checkpoints(self) -> list[int]:
        return list(range(1, self.length_ + 1))

    def init_state(self):
        return None

    def preprocess(self, series) -> np.ndarray:
        """Whole-series transform applied before streaming; identity by default."""
        return np.asarray(series, dtype=float)

    def decide(self, prefix, state=None):
        raise NotImplementedError

    def predict_early(self, series) -> tuple[object, int]:
        """Stream ``series`` through ``decide``; return (label, trigger length)."""
        s = self.preprocess(series)
        state = self.init_state()
        for t in self.checkpoints():
            label = self.decide(s[..., :t], state)
            if label is not None:
                return label, t
        raise RuntimeError("decision function did not emit at the final checkpoint")

    def predict_many(self, X) -> tuple[np.ndarray, np.ndarray]:
        out = [self.predict_early(x) for x in np.asarray(X, dtype=float)]
        return np.array([o[0] for o in out]), np.array([o[1] for o in out], dtype=int)


def harmonic_mean(accuracy: float, earliness: float) -> float:
    """Harmonic mean of accuracy and ``1 - earliness``; 0 when both vanish."""
    timeliness = 1.0 - earliness
    den = accuracy + timeliness
    return 0.0 if den <= 0 else 2.0 * accuracy * timeliness / den
