"""Early Classification on Time Series (1-NN with minimum prediction lengths).

For every prefix length the nearest neighbour of each training series is
recorded. A series' minimum prediction length (MPL) is the prefix length
from which its reverse-nearest-neighbour set stops changing. Label-pure
agglomerative clustering can lower MPLs: a cluster whose RNN set and 1-NN
closure are stable from some length on hands that length to its members.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .base import EarlyClassifier, as_prefix, as_univariate

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class NnTables:
    """``nn[t-1, i]`` is the nearest neighbour of series ``i`` on prefixes of length ``t``."""

    nn: np.ndarray

    @property
    def length(self) -> int:
        return self.nn.shape[0]

    @property
    def n_instances(self) -> int:
        return self.nn.shape[1]

    def rnn(self, t: int, i: int) -> frozenset[int]:
        return frozenset(np.flatnonzero(self.nn[t - 1] == i).tolist())


def build_nn_tables(X) -> NnTables:
    """Nearest neighbours (Euclidean, self excluded, lowest index on ties) for every prefix length."""
    X = as_univariate(X)
    n, T = X.shape
    if n < 2:
        raise ValueError("nearest-neighbour tables need at least 2 instances")
    d2 = np.zeros((n, n))
    nn = np.empty((T, n), dtype=int)
    eye = np.eye(n, dtype=bool)
    for t in range(T):
        col = X[:, t]
        d2 += (col[:, None] - col[None, :]) ** 2
        nn[t] = np.argmin(np.where(eye, np.inf, d2), axis=1)
    return NnTables(nn)


def _stable_from(consistent: np.ndarray) -> int:
    """Smallest 1-based ``t`` with ``consistent[t-1:]`` all true; ``T + 1`` if none."""
    bad = np.flatnonzero(~consistent)
    return 1 if bad.size == 0 else int(bad[-1]) + 2


def mpl_nn(tables: NnTables, i: int) -> int:
    """Prefix length from which the RNN set of ``i`` equals its full-length RNN set."""
    member = tables.nn == i  # (T, n): j points at i
    consistent = np.all(member == member[-1], axis=1)
    return _stable_from(consistent)


def all_mpl_nn(tables: NnTables) -> np.ndarray:
    return np.array([mpl_nn(tables, i) for i in range(tables.n_instances)])


def cluster_mpl(tables: NnTables, members) -> int:
    """MPL of a cluster, or ``T + 1`` when its 1-NN closure fails at full length.

    The cluster RNN set at length ``t`` holds outside series whose nearest
    neighbour lies inside the cluster; 1-NN consistency requires every
    member's nearest neighbour to be a member.
    """
    inside = np.zeros(tables.n_instances, dtype=bool)
    inside[list(members)] = True
    points_in = inside[tables.nn]  # (T, n)
    rnn = points_in & ~inside[None, :]
    rnn_consistent = np.all(rnn == rnn[-1], axis=1)
    nn_consistent = np.all(points_in[:, inside], axis=1)
    return _stable_from(rnn_consistent & nn_consistent)


@dataclass
class ClusterStep:
    members: tuple[int, ...]
    mpl: int


def cluster_and_refine(X, y, tables: NnTables, mpl=None) -> tuple[np.ndarray, list[ClusterStep]]:
    """Label-pure single-linkage clustering; returns refined MPLs and the merge log.

    The closest pair of active clusters (full-length Euclidean, single
    linkage, lowest indices on ties) is merged when both share a label;
    otherwise both are frozen. Members take the minimum of their MPL and
    the MPL of each cluster they join.
    """
    X = as_univariate(X)
    y = np.asarray(y)
    n, T = X.shape
    mpl = (all_mpl_nn(tables) if mpl is None else np.asarray(mpl)).astype(int).copy()
    dist = np.sqrt(((X[:, None, :] - X[None, :, :]) ** 2).sum(axis=2))
    link = np.where(np.triu(np.ones((n, n), dtype=bool), k=1), dist, np.inf)
    members = {i: [i] for i in range(n)}
    active = np.ones(n, dtype=bool)
    log: list[ClusterStep] = []
    while active.sum() >= 2:
        flat = int(np.argmin(link))
        a, b = divmod(flat, n)
        if not np.isfinite(link[a, b]):
            break
        if y[a] != y[b]:
            for c in (a, b):
                active[c] = False
                link[c, :] = np.inf
                link[:, c] = np.inf
            continue
        merged = np.minimum(np.minimum(link[a, :], link[:, a]), np.minimum(link[b, :], link[:, b]))
        members[a] = sorted(members[a] + members.pop(b))
        active[b] = False
        link[b, :] = np.inf
        link[:, b] = np.inf
        for c in np.flatnonzero(active):
            if c < a:
                link[c, a] = merged[c]
            elif c > a:
                link[a, c] = merged[c]
        c_mpl = cluster_mpl(tables, members[a])
        log.append(ClusterStep(tuple(members[a]), c_mpl))
        if c_mpl <= T:
            idx = members[a]
            mpl[idx] = np.minimum(mpl[idx], c_mpl)
    return mpl, log


class ECTS(EarlyClassifier):
    """1-NN early classifier gated by per-instance minimum prediction lengths.

    ``support`` is the smallest full-length RNN set an instance needs to act
    as an early predictor; instances below it only predict at full length.
    """

    def __init__(self, support: int = 0, cluster: bool = True):
        self.support = support
        self.cluster = cluster

    def fit(self, X, y):
        X = as_univariate(X)
        yi = self._encode(y)
        self.X_ = X.copy()
        self.y_ = yi
        self.length_ = X.shape[1]
        self.tables_ = build_nn_tables(X)
        self.mpl_nn_ = all_mpl_nn(self.tables_)
        if self.cluster:
            self.mpl_, self.merge_log_ = cluster_and_refine(X, yi, self.tables_, self.mpl_nn_)
        else:
            self.mpl_, self.merge_log_ = self.mpl_nn_.copy(), []
        if self.support > 0:
            rnn_size = np.bincount(self.tables_.nn[-1], minlength=len(yi))
            self.mpl_ = np.where(rnn_size < self.support, self.length_, self.mpl_)
        return self

    def init_state(self):
        return {"t": 0, "d2": np.zeros(len(self.y_))}

    def _distances(self, p, state):
        t = len(p)
        if state is not None and state["t"] == t - 1:
            state["d2"] = state["d2"] + (self.X_[:, t - 1] - p[t - 1]) ** 2
            state["t"] = t
            return state["d2"]
        return np.sum((self.X_[:, :t] - p) ** 2, axis=1)

    def decide_index(self, prefix, state=None) -> int | None:
        p = as_prefix(prefix)
        t = len(p)
        nn = int(np.argmin(self._distances(p, state)))
        if t >= self.mpl_[nn] or t >= self.length_:
            return int(self.y_[nn])
        return None

    def decide(self, prefix, state=None):
        idx = self.decide_index(prefix, state)
        return None if idx is None else self.classes_[idx]
