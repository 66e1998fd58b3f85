import numpy as np
import pytest

from etsc.ecec import (
    ECEC,
    confidence,
    confidence_matrix,
    cost,
    estimate_reliability,
    select_threshold,
    threshold_candidates,
)


class FixedLabel:
    def __init__(self, label):
        self.label = label

    def predict(self, X):
        return np.full(len(X), self.label)


def stub_model(r_values, theta):
    """One class-0 prediction per checkpoint with the given reliabilities."""
    N = len(r_values)
    m = ECEC(n_prefixes=N)
    m.classes_ = np.array(["x", "y"])
    m.length_ = N
    m.prefix_lengths_ = list(range(1, N + 1))
    m.classifiers_ = [FixedLabel(0) for _ in range(N)]
    r = np.full((N, 2, 2), 0.5)
    r[:, 0, 0] = r_values
    r[:, 0, 1] = 1 - np.asarray(r_values)
    m.reliability_ = r
    m.theta_ = theta
    return m


def test_confidence_arithmetic():
    r = np.zeros((2, 2, 2))
    r[0, 1, 1], r[1, 1, 1] = 0.6, 0.7
    assert abs(confidence(r, [1, 1]) - 0.88) <= 1e-12


def test_threshold_comparison():
    assert stub_model([0.45, 0.5], 0.5).decide([0.0]) is None
    assert stub_model([0.5, 0.5], 0.5).decide([0.0]) == "x"
    # the final checkpoint always emits
    assert stub_model([0.1, 0.1], 0.99).predict_early(np.zeros(2)) == ("x", 2)


def test_reliability_rows_sum_to_one():
    rng = np.random.default_rng(0)
    r = estimate_reliability(rng.integers(0, 3, (30, 4)), rng.integers(0, 3, 30), 3)
    np.testing.assert_allclose(r.sum(axis=2), 1.0, atol=1e-12)
    assert np.all(r > 0)


def test_confidence_non_decreasing_for_fixed_final_label():
    rng = np.random.default_rng(1)
    r = estimate_reliability(rng.integers(0, 2, (20, 6)), rng.integers(0, 2, 20), 2)
    preds = [0] * 6
    c = [confidence(r, preds[: t + 1]) for t in range(6)]
    assert all(b >= a - 1e-15 for a, b in zip(c, c[1:]))


def test_confidence_matrix_agrees_with_scalar():
    rng = np.random.default_rng(2)
    P = rng.integers(0, 3, (10, 5))
    r = estimate_reliability(P, rng.integers(0, 3, 10), 3)
    M = confidence_matrix(r, P)
    for i in range(10):
        for t in range(5):
            assert M[i, t] == pytest.approx(confidence(r, P[i, : t + 1]), abs=1e-14)


@pytest.mark.parametrize("seed", range(20))
def test_select_threshold_matches_exhaustive_scan(seed):
    rng = np.random.default_rng(seed)
    n, N, T = int(rng.integers(5, 30)), int(rng.integers(2, 8)), 40
    P = rng.integers(0, 3, (n, N))
    y = rng.integers(0, 3, n)
    lengths = np.sort(rng.choice(np.arange(1, T + 1), N, replace=False))
    lengths[-1] = T
    conf = confidence_matrix(estimate_reliability(P, y, 3), P)
    alpha = float(rng.uniform(0.1, 0.9))
    theta, cands, costs = select_threshold(conf, P, y, lengths, T, alpha)
    scan = [cost(conf, P, y, lengths, T, c, alpha)[0] for c in threshold_candidates(conf)]
    np.testing.assert_allclose(costs, scan, atol=1e-12)
    assert theta == threshold_candidates(conf)[int(np.argmin(scan))]


def test_candidates_include_minimum():
    np.testing.assert_allclose(threshold_candidates([0.2, 0.4, 0.4, 0.8]), [0.2, 0.3, 0.6])


def test_fit_and_stream(onset_data):
    X, y = onset_data
    m = ECEC(n_prefixes=10).fit(X[:70], y[:70])
    labels, trig = m.predict_many(X[70:])
    assert np.mean(labels == y[70:]) > 0.8
    assert set(trig) <= set(m.checkpoints())
    # skipping checkpoints gives the same answer as streaming through them
    state = m.init_state()
    assert m.decide(X[70, :50], state) == m.decide(X[70, :50])
