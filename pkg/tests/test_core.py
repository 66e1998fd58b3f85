import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from etsc.core import (
    Dataset,
    DatasetError,
    LabeledInstance,
    categorize,
    dataset_stats,
    dump_csv,
    impute_missing,
    impute_series,
    load_dataset,
    prefix,
    stratified_assignments,
    stratified_folds,
    znormalize,
)

ALIVE = [1137, 1229, 1213, 1091, 896, 744, 681, 661]
NECROTIC = [0, 0, 11, 42, 84, 99, 103, 106]
APOPTOTIC = [0, 1, 17, 118, 282, 432, 509, 549]


def _write(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


def _toy(labels, T=4, sources=None):
    inst = [LabeledInstance(np.arange(T, dtype=float)[None, :] + i, lab, None if sources is None else sources[i])
            for i, lab in enumerate(labels)]
    return Dataset(tuple(inst))


def test_load_csv_basic(tmp_path):
    p = _write(tmp_path, "1,1137,1229,1213\n0,0,0,11\n0,0,1,17\n")
    d = load_dataset(p)
    assert len(d) == 3 and d.n_dims == 1 and d.lengths == [3, 3, 3]
    assert d.class_set == ("0", "1")
    np.testing.assert_array_equal(d.instances[0].series, [[1137, 1229, 1213]])


def test_load_csv_running_example_multivariate(tmp_path):
    row = ",".join(str(v) for v in ALIVE + NECROTIC + APOPTOTIC)
    d = load_dataset(_write(tmp_path, f"treated,{row}\n"), dims=3)
    s = d.instances[0].series
    assert s.shape == (3, 8)
    np.testing.assert_array_equal(s[0], ALIVE)
    np.testing.assert_array_equal(prefix(s, 8), s)


def test_load_csv_reports_bad_line(tmp_path):
    p = _write(tmp_path, "a,1,2,3\nb,1,x,3\n")
    with pytest.raises(DatasetError, match=r":2:"):
        load_dataset(p)


def test_load_csv_bad_dims(tmp_path):
    with pytest.raises(DatasetError, match="cannot be split"):
        load_dataset(_write(tmp_path, "a,1,2,3\n"), dims=2)


def test_load_csv_missing_marker_and_source(tmp_path):
    d = load_dataset(_write(tmp_path, "a,v1,1,?,3\nb,v2,4,5,6\n"), has_source=True)
    assert [i.source_id for i in d.instances] == ["v1", "v2"]
    assert math.isnan(d.instances[0].series[0, 1])


def test_load_ts_fixture(gunpoint_path, basicmotions_path):
    g = load_dataset(gunpoint_path)
    assert (len(g), g.n_dims, g.lengths[0]) == (200, 1, 150)
    b = load_dataset(basicmotions_path)
    assert (len(b), b.n_dims, b.lengths[0], len(b.class_set)) == (80, 6, 100, 4)


def test_load_ts_rejects_data_before_header(tmp_path):
    with pytest.raises(DatasetError, match="before @data"):
        load_dataset(_write(tmp_path, "1,2,3:a\n", "x.ts"))


def test_missing_file(tmp_path):
    with pytest.raises(DatasetError, match="no such"):
        load_dataset(tmp_path / "nope.csv")


def test_csv_round_trip(tmp_path):
    d = _toy(["a", "b", "a"])
    dump_csv(d, tmp_path / "r.csv")
    back = load_dataset(tmp_path / "r.csv")
    for x, z in zip(d.instances, back.instances):
        np.testing.assert_array_equal(x.series, z.series)
        assert x.label == z.label


def test_to_arrays_rejects_ragged():
    d = Dataset((LabeledInstance(np.zeros((1, 3)), "a"), LabeledInstance(np.zeros((1, 4)), "b")))
    with pytest.raises(DatasetError, match="ragged"):
        d.to_arrays()


def test_dataset_rejects_mixed_dims():
    with pytest.raises(DatasetError):
        Dataset((LabeledInstance(np.zeros((1, 3)), "a"), LabeledInstance(np.zeros((2, 3)), "b")))


@pytest.mark.parametrize(
    "row, expected",
    [
        ([1, np.nan, 3], [1, 2, 3]),
        ([np.nan, np.nan, 5, 7], [5, 5, 5, 7]),
        ([4, 4, 4], [4, 4, 4]),
        ([2, np.nan, np.nan, 8], [2, 5, 5, 8]),
        ([1, np.nan], [1, 1]),
    ],
)
def test_impute(row, expected):
    np.testing.assert_allclose(impute_series(np.array(row, dtype=float))[0], expected)


def test_impute_all_missing_raises():
    d = Dataset((LabeledInstance(np.full((1, 3), np.nan), "a"),))
    with pytest.raises(DatasetError, match="no present values"):
        impute_missing(d)


@given(st.lists(st.one_of(st.none(), st.floats(-1e6, 1e6)), min_size=1, max_size=30).filter(
    lambda v: any(x is not None for x in v)))
def test_impute_fills_within_range(values):
    row = np.array([np.nan if v is None else v for v in values])
    out = impute_series(row)[0]
    present = row[~np.isnan(row)]
    assert not np.isnan(out).any()
    np.testing.assert_array_equal(out[~np.isnan(row)], present)
    assert out.min() >= present.min() - 1e-9 and out.max() <= present.max() + 1e-9


def test_prefix_bounds():
    s = np.arange(5.0)
    assert prefix(s, 1).shape == (1, 1)
    np.testing.assert_array_equal(prefix(s, 5)[0], s)
    with pytest.raises(ValueError):
        prefix(s, 6)


def test_znormalize_examples():
    np.testing.assert_allclose(znormalize([1.0, 2.0, 3.0]), [-math.sqrt(1.5), 0, math.sqrt(1.5)])
    np.testing.assert_array_equal(znormalize([5.0, 5.0, 5.0]), [0, 0, 0])


@given(st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=40))
def test_znormalize_idempotent(values):
    z = znormalize(np.array(values))
    np.testing.assert_allclose(znormalize(z), z, atol=1e-9)


def test_folds_exact_divisibility():
    d = _toy(["a"] * 5 + ["b"] * 5)
    plan = stratified_folds(d, 5, seed=3)
    for f in range(5):
        labs = sorted(d.labels[i] for i in plan.test_indices(f))
        assert labs == ["a", "b"]


def test_folds_uneven_split():
    d = _toy(["a"] * 7 + ["b"] * 3)
    plan = stratified_folds(d, 5, seed=1)
    for f in range(5):
        labs = [d.labels[i] for i in plan.test_indices(f)]
        assert labs.count("a") in (1, 2) and labs.count("b") in (0, 1)


def test_folds_deterministic_and_seed_sensitive():
    d = _toy(["a", "b"] * 20)
    assert stratified_folds(d, 5, 9) == stratified_folds(d, 5, 9)
    assert stratified_folds(d, 5, 9) != stratified_folds(d, 5, 10)


def test_folds_by_source():
    d = _toy(["a"] * 10, sources=["s1"] * 5 + ["s2"] * 5)
    plan = stratified_folds(d, 5, 0, key="source_id")
    for f in range(5):
        assert sorted(d.instances[i].source_id for i in plan.test_indices(f)) == ["s1", "s2"]
    with pytest.raises(DatasetError):
        stratified_folds(_toy(["a", "b"]), 2, 0, key="source_id")


def test_folds_warn_on_small_stratum(caplog):
    stratified_folds(_toy(["a"] * 6 + ["b"] * 2), 5, 0)
    assert "smallest stratum" in caplog.text


@settings(max_examples=50)
@given(st.lists(st.integers(0, 3), min_size=2, max_size=60), st.integers(2, 6), st.integers(0, 1000))
def test_assignments_balanced(keys, k, seed):
    a = stratified_assignments(keys, k, seed)
    for key in set(keys):
        counts = np.bincount(a[np.array(keys) == key], minlength=k)
        assert counts.max() - counts.min() <= 1
    sizes = np.bincount(a, minlength=k)
    assert sizes.max() - sizes.min() <= 1


def test_categorize_rules():
    assert categorize(100, 50, 2, 1.0, 3.0) == ("Common",)
    assert categorize(1001, 1301, 3, 2.0, 101.0) == ("Wide", "Large", "Unstable", "Imbalanced", "Multiclass")
    assert categorize(1000, 1300, 2, 1.0, 100.0) == ("Common",)


def test_dataset_stats_biological_like():
    # 537 / 100 instances give the imbalance ratio 5.37
    labels = ["a"] * 537 + ["b"] * 100
    inst = [LabeledInstance(np.array([[0.0, 1.0]]), lab) for lab in labels]
    st_ = dataset_stats(Dataset(tuple(inst)))
    assert st_.imbalance_ratio == pytest.approx(5.37)
    assert categorize(637, 2, 2, 5.37, 222.93) == ("Unstable", "Imbalanced")
    assert "Imbalanced" in st_.categories


def test_dataset_stats_basicmotions(basicmotions_path):
    s = dataset_stats(load_dataset(basicmotions_path))
    assert (s.height, s.length, s.num_classes, s.imbalance_ratio) == (80, 100, 4, 1.0)
    assert s.categories == ("Multiclass",)
    assert len(s.std_dev) == 6


def test_dataset_stats_single_class():
    s = dataset_stats(_toy(["a", "a", "a"]))
    assert s.imbalance_ratio == 1.0 and s.categories == ("Common",)
