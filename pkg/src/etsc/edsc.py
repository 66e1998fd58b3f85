"""Early Distinctive Shapelet Classification.

Candidate shapelets are every subseries of every training series within a
length range. Each gets a Chebyshev distance threshold from its distances
to the other classes and a utility combining precision with an
earliness-weighted recall. The highest-utility candidates that cover the
training set form the pool; a prefix is labelled by the first pool shapelet
it comes within threshold of.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .base import EarlyClassifier, as_prefix, as_univariate

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Shapelet:
    subseries: np.ndarray
    threshold: float
    label: int
    utility: float
    origin: tuple[int, int]

    def __len__(self):
        return len(self.subseries)


def min_dist(sub, s) -> float:
    """Smallest Euclidean distance between ``sub`` and any equal-length window of ``s``."""
    sub = np.asarray(sub, dtype=float)
    s = as_prefix(s)
    if len(sub) > len(s):
        raise ValueError(f"subseries of length {len(sub)} longer than series of length {len(s)}")
    win = sliding_window_view(s, len(sub))
    return float(np.sqrt(np.min(np.sum((win - sub) ** 2, axis=1))))


def chebyshev_threshold(mean: float, var: float, k: float) -> float:
    return max(mean - k * var, 0.0)


def che_threshold(non_target_min_dists, k: float = 3.0) -> float:
    """``max(mean - k * var, 0)`` over the non-target distances (population variance)."""
    d = np.asarray(non_target_min_dists, dtype=float)
    if d.size == 0:
        raise ValueError("threshold needs at least one non-target distance")
    if k <= 0:
        raise ValueError("k must be positive")
    return chebyshev_threshold(float(d.mean()), float(d.var()), k)


def match_weight(t_match, T: int):
    """Recall weight of a true match first seen at prefix length ``t_match``."""
    return 1.0 - (np.asarray(t_match, dtype=float) - 1.0) / T


def utility_score(target: np.ndarray, t_match: np.ndarray, T: int) -> float:
    """F1-style score with earliness-weighted recall.

    ``target`` flags series of the shapelet's class; ``t_match`` holds the
    first prefix length at which each series matches (0 for no match).
    """
    matched = t_match > 0
    if not matched.any() or not target.any():
        return 0.0
    precision = (matched & target).sum() / matched.sum()
    wrecall = match_weight(t_match[matched & target], T).sum() / target.sum()
    den = precision + wrecall
    return 0.0 if den == 0 else float(2 * precision * wrecall / den)


def _utility_rows(target: np.ndarray, t_match: np.ndarray, T: int) -> np.ndarray:
    """Row-wise :func:`utility_score` for stacked candidates."""
    matched = t_match > 0
    tp = matched & target
    n_matched = matched.sum(axis=1)
    precision = tp.sum(axis=1) / np.maximum(n_matched, 1)
    wrecall = np.where(tp, match_weight(t_match, T), 0.0).sum(axis=1) / np.maximum(target.sum(axis=1), 1)
    den = precision + wrecall
    return np.where(den > 0, 2 * precision * wrecall / np.where(den > 0, den, 1.0), 0.0)


def first_match_lengths(sub, threshold: float, X, tol: float = 0.0) -> np.ndarray:
    """Per series, the shortest prefix containing a window within threshold (0 if none)."""
    sub = np.asarray(sub, dtype=float)
    X = as_univariate(X)
    win = sliding_window_view(X, len(sub), axis=1)
    d = np.sqrt(np.sum((win - sub) ** 2, axis=2))
    hit = d <= threshold + tol
    first = np.argmax(hit, axis=1)
    return np.where(hit.any(axis=1), first + len(sub), 0)


def utility(sh: Shapelet, X, y, tol: float = 0.0) -> float:
    X = as_univariate(X)
    t_match = first_match_lengths(sh.subseries, sh.threshold, X, tol)
    return utility_score(np.asarray(y) == sh.label, t_match, X.shape[1])


def select_pool(utilities, covers, n_instances: int, order=None) -> list[int]:
    """Greedy covering in descending utility.

    A candidate joins the pool when it correctly matches at least one
    training instance not yet covered; selection stops once every instance
    is covered. ``covers[i]`` is the set (or boolean mask) of instances
    candidate ``i`` matches with its own class. ``order`` overrides the
    ranking (ties are otherwise broken by candidate index).
    """
    utilities = np.asarray(utilities, dtype=float)
    if order is None:
        order = np.lexsort((np.arange(len(utilities)), -utilities))
    covered = np.zeros(n_instances, dtype=bool)
    pool = []
    for i in order:
        cov = covers[i]
        mask = np.zeros(n_instances, dtype=bool)
        if isinstance(cov, np.ndarray) and cov.dtype == bool:
            mask = cov
        else:
            mask[list(cov)] = True
        gain = mask & ~covered
        if gain.any():
            pool.append(int(i))
            covered |= gain
            if covered.all():
                break
    return pool


class EDSC(EarlyClassifier):
    """Shapelet-based early classifier with Chebyshev thresholds.

    Parameters
    ----------
    min_len, max_len : int
        Candidate subseries length range; ``max_len=None`` means ``T // 2``.
    k : float
        Chebyshev parameter; larger values give tighter thresholds.
    stride, length_step : int
        Step between candidate offsets and between candidate lengths. 1 and 1
        enumerate every candidate.
    """

    def __init__(self, min_len: int = 5, max_len: int | None = None, k: float = 3.0,
                 stride: int = 1, length_step: int = 1, chunk_size: int = 256):
        self.min_len = min_len
        self.max_len = max_len
        self.k = k
        self.stride = stride
        self.length_step = length_step
        self.chunk_size = chunk_size

    def _lengths(self, T: int) -> list[int]:
        hi = self.max_len if self.max_len is not None else T // 2
        hi = max(1, min(hi, T))
        lo = max(1, min(self.min_len, hi))
        return list(range(lo, hi + 1, self.length_step))

    def _candidates_of_length(self, X, y, L):
        n, T = X.shape
        win = sliding_window_view(X, L, axis=1)  # (n, W, L)
        W = win.shape[1]
        offsets = np.arange(0, W, self.stride)
        cand = win[:, offsets, :].reshape(-1, L)
        origin_inst = np.repeat(np.arange(n), len(offsets))
        origin_off = np.tile(offsets, n)
        cand_label = y[origin_inst]
        win_flat = win.reshape(-1, L)
        win_sq = np.sum(win_flat**2, axis=1)

        util = np.empty(len(cand))
        thresh = np.empty(len(cand))
        covers = np.empty((len(cand), n), dtype=bool)
        for start in range(0, len(cand), self.chunk_size):
            c = cand[start:start + self.chunk_size]
            lab = cand_label[start:start + self.chunk_size]
            sq = np.sum(c**2, axis=1)[:, None] + win_sq[None, :] - 2.0 * c @ win_flat.T
            d = np.sqrt(np.maximum(sq, 0.0)).reshape(len(c), n, W)
            mins = d.min(axis=2)
            target = y[None, :] == lab[:, None]
            other = ~target
            cnt = other.sum(axis=1)
            mean = np.where(other, mins, 0).sum(axis=1) / cnt
            var = np.where(other, (mins - mean[:, None]) ** 2, 0).sum(axis=1) / cnt
            delta = np.maximum(mean - self.k * var, 0.0)
            hit = d <= (delta + self.tol_)[:, None, None]
            any_hit = hit.any(axis=2)
            t_match = np.where(any_hit, np.argmax(hit, axis=2) + L, 0)
            util[start:start + len(c)] = _utility_rows(target, t_match, T)
            thresh[start:start + len(c)] = delta
            covers[start:start + len(c)] = any_hit & target
        return cand, cand_label, thresh, util, covers, origin_inst, origin_off

    def fit(self, X, y):
        X = as_univariate(X)
        yi = self._encode(y)
        if self.n_classes_ < 2:
            raise ValueError("EDSC needs at least two classes")
        n, T = X.shape
        self.length_ = T
        # match slack for the dot-product distance expansion; common shift keeps it small
        Xc = X - X.mean()
        self.tol_ = 1e-6 * max(float(Xc.std()), 1e-12) * np.sqrt(T)

        records = []
        for L in self._lengths(T):
            cand, lab, thr, util, cov, inst, off = self._candidates_of_length(Xc, yi, L)
            records.append((L, cand, lab, thr, util, np.packbits(cov, axis=1), inst, off))

        util = np.concatenate([r[4] for r in records])
        inst = np.concatenate([r[6] for r in records])
        off = np.concatenate([r[7] for r in records])
        length = np.concatenate([np.full(len(r[4]), r[0]) for r in records])
        order = np.lexsort((length, off, inst, -util))
        bounds = np.cumsum([0] + [len(r[4]) for r in records])

        def locate(g):
            b = int(np.searchsorted(bounds, g, side="right") - 1)
            return records[b], g - bounds[b]

        class _Covers:
            def __getitem__(self, g):
                rec, j = locate(g)
                return np.unpackbits(rec[5][j], count=n).astype(bool)

        chosen = select_pool(util, _Covers(), n, order=order)
        pool = []
        mean_shift = X.mean()
        for g in chosen:
            rec, j = locate(g)
            pool.append(Shapelet(rec[1][j] + mean_shift, float(rec[3][j]), int(rec[2][j]),
                                 float(rec[4][j]), (int(rec[6][j]), int(rec[7][j]))))
        self.pool_ = pool
        self.n_candidates_ = len(util)
        self.majority_ = int(np.argmax(np.bincount(yi, minlength=self.n_classes_)))
        logger.debug("EDSC pool of %d from %d candidates", len(pool), len(util))
        return self

    def decide_index(self, prefix) -> int | None:
        p = as_prefix(prefix)
        t = len(p)
        for sh in self.pool_:
            if len(sh) <= t and min_dist(sh.subseries, p) <= sh.threshold + self.tol_:
                return sh.label
        if t < self.length_:
            return None
        if not self.pool_:
            return self.majority_
        margins = [min_dist(sh.subseries, p) - sh.threshold for sh in self.pool_]
        return self.pool_[int(np.argmin(margins))].label

    def decide(self, prefix, state=None):
        idx = self.decide_index(prefix)
        return None if idx is None else self.classes_[idx]
