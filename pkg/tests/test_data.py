import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from muygps_ecg import data as D
from conftest import make_beats, write_csv


def test_three_row_round_trip_is_bit_exact(tmp_path):
    X = np.array([[0.1, 0.2, 1 / 3], [0.0, 1.0, 0.123456789012345678], [2 ** -30, 0.5, 0.75]])
    y = np.array([0, 1, 1])
    ds = D.load_csv(write_csv(tmp_path / "t.csv", X, y, fmt="%r"))
    np.testing.assert_array_equal(ds.features, X)
    assert ds.labels.tolist() == [0, 1, 1]
    assert ds.n_samples == 3 and ds.n_features == 3 and ds.n_classes == 2


def test_header_is_detected(tmp_path):
    p = write_csv(tmp_path / "h.csv", np.eye(2), [1, 0], header="a,b,label")
    ds = D.load_csv(p)
    assert ds.n_samples == 2
    assert ds.labels.tolist() == [1, 0]


def test_label_column_index(tmp_path):
    p = tmp_path / "first.csv"
    p.write_text("1,0.5,0.25\n0,0.75,0.125\n")
    ds = D.load_csv(p, label_column=0)
    assert ds.labels.tolist() == [1, 0]
    assert ds.features.tolist() == [[0.5, 0.25], [0.75, 0.125]]


def test_save_then_load_is_identical(tmp_path, beats):
    D.save_csv(beats, tmp_path / "b.csv")
    back = D.load_csv(tmp_path / "b.csv")
    np.testing.assert_array_equal(back.features, beats.features)
    np.testing.assert_array_equal(back.labels, beats.labels)


@pytest.mark.parametrize("body,needle", [
    ("", "no samples"),
    ("\n\n", "no samples"),
    ("0.1,0.2,0\n0.1,1\n", "row 2"),
    ("0.1,0.2,0\n0.1,abc,1\n", "row 2"),
    ("0.1,0.2,0\n0.3,0.4,0.5\n", "row 2"),
    ("0.1,0.2,0\n0.3,0.4,-1\n", "row 2"),
])
def test_malformed_files_report_row(tmp_path, body, needle):
    p = tmp_path / "bad.csv"
    p.write_text(body)
    with pytest.raises(D.DataError, match=needle):
        D.load_csv(p)


def test_label_outside_declared_classes(tmp_path):
    p = tmp_path / "c.csv"
    p.write_text("0.1,0\n0.2,1\n0.3,7\n")
    with pytest.raises(D.DataError, match="row 3"):
        D.load_csv(p, class_names=D.PTB_CLASS_NAMES)


def test_missing_file():
    with pytest.raises(FileNotFoundError):
        D.load_csv("/nonexistent/x.csv")


def test_dataset_invariants():
    with pytest.raises(D.DataError):
        D.EcgDataset(np.empty((0, 3)), np.empty(0))
    with pytest.raises(D.DataError):
        D.EcgDataset(np.ones((2, 3)), [0])
    with pytest.raises(D.DataError):
        D.EcgDataset(np.ones((2, 3)), [0, 2], class_names=("a", "b"))
    ds = D.EcgDataset(np.ones((2, 3)), [0, 1])
    with pytest.raises(ValueError):
        ds.features[0, 0] = 5


def test_truncate():
    ds = make_beats((5, 5), n_features=187)
    t = D.truncate(ds, 80)
    assert t.n_features == 80 and t.n_samples == ds.n_samples
    np.testing.assert_array_equal(t.features, ds.features[:, :80])
    np.testing.assert_array_equal(t.labels, ds.labels)
    np.testing.assert_array_equal(D.truncate(ds, 187).features, ds.features)
    np.testing.assert_array_equal(D.truncate(ds, 1).features[:, 0], ds.features[:, 0])
    np.testing.assert_array_equal(D.truncate(D.truncate(ds, 100), 30).features,
                                  D.truncate(ds, 30).features)
    for w in (0, 188):
        with pytest.raises(D.DataError):
            D.truncate(ds, w)


def test_stratified_split_exact_arithmetic():
    ds = D.EcgDataset(np.arange(100.0)[:, None], np.repeat([0, 1], 50))
    train, test = D.stratified_split(ds, 0.2, seed=42)
    assert (train.n_samples, test.n_samples) == (80, 20)
    assert test.class_counts().tolist() == [10, 10]
    again = D.stratified_split(ds, 0.2, seed=42)
    np.testing.assert_array_equal(again[1].features, test.features)


def test_stratified_split_ptb_sized():
    # class sizes of the published PTB files
    labels = np.repeat([0, 1], [4046, 10506])
    ds = D.EcgDataset(np.zeros((labels.size, 1)), labels)
    tr, te = D.stratified_indices(ds, 0.2, 42)
    assert abs(len(tr) - 11642) <= 1 and abs(len(te) - 2910) <= 1


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(2, 40), min_size=2, max_size=5), st.floats(0.05, 0.95),
       st.integers(0, 2 ** 32 - 1))
def test_stratified_split_properties(counts, frac, seed):
    labels = np.repeat(np.arange(len(counts)), counts)
    ds = D.EcgDataset(np.arange(labels.size, dtype=float)[:, None], labels)
    tr, te = D.stratified_indices(ds, frac, seed)
    assert np.intersect1d(tr, te).size == 0
    assert np.union1d(tr, te).tolist() == list(range(labels.size))
    test_counts = np.bincount(labels[te], minlength=len(counts))
    for c, n in enumerate(counts):
        assert abs(test_counts[c] - n * frac) <= 1
        assert 1 <= test_counts[c] <= n - 1
    np.testing.assert_array_equal(
        np.bincount(labels[tr], minlength=len(counts)) + test_counts, counts)


def test_stratified_split_needs_two_per_class():
    ds = D.EcgDataset(np.ones((3, 1)), [0, 0, 1])
    with pytest.raises(D.DataError):
        D.stratified_split(ds)


def test_sample_batch():
    assert sorted(D.sample_batch(10, 10, 3).tolist()) == list(range(10))
    a, b = D.sample_batch(1000, 500, 7), D.sample_batch(1000, 500, 7)
    np.testing.assert_array_equal(a, b)
    assert len(set(a.tolist())) == 500 and a.max() < 1000 and a.min() >= 0
    with pytest.raises(D.DataError):
        D.sample_batch(10, 11)


def test_smote_midpoint():
    X = np.array([[0.0, 0.0], [1.0, 1.0], [5, 5], [5, 6], [6, 5], [6, 6]])
    ds = D.EcgDataset(X, [0, 0, 1, 1, 1, 1])
    out, prov = D.smote_oversample(ds, D.SmoteConfig(k_neighbors=1, ratio=0.75), True, gaps=0.5)
    assert out.class_counts().tolist() == [3, 4]
    np.testing.assert_array_equal(out.features[-1], [0.5, 0.5])


def test_smote_no_op_when_satisfied(beats):
    out, prov = D.smote_oversample(beats, D.SmoteConfig(ratio=0.4), True)
    assert out is beats and len(prov) == 0


def test_smote_counts_and_segments():
    ds = make_beats((60, 150, 40), n_features=20, seed=1)
    cfg = D.SmoteConfig(k_neighbors=5, ratio=0.8, seed=11)
    out, prov = D.smote_oversample(ds, cfg, True)
    majority = 150
    target = math.ceil(0.8 * majority)
    counts = np.zeros(3, dtype=int)
    for label in out.labels:  # independent counting pass
        counts[label] += 1
    assert counts.tolist() == [target, 150, target]
    np.testing.assert_array_equal(out.features[:ds.n_samples], ds.features)
    np.testing.assert_array_equal(out.labels[:ds.n_samples], ds.labels)
    synth = out.features[ds.n_samples:]
    assert len(prov) == synth.shape[0]
    for s, src, nb, r, c in zip(synth, prov.source, prov.neighbor, prov.r, prov.label):
        assert ds.labels[src] == c == ds.labels[nb] and src != nb
        assert 0 <= r <= 1
        x, y = ds.features[src], ds.features[nb]
        np.testing.assert_allclose(s, x + r * (y - x), atol=1e-12)
        assert np.all(s >= np.minimum(x, y) - 1e-12) and np.all(s <= np.maximum(x, y) + 1e-12)
        # the neighbor is among the 5 nearest same-class rows of the source
        same = np.flatnonzero(ds.labels == c)
        d = np.linalg.norm(ds.features[same] - x, axis=1)
        order = sorted((dd, j) for dd, j in zip(d, same) if j != src)
        assert nb in [j for _, j in order[:5]]


def test_smote_deterministic_and_provenance_file(tmp_path):
    ds = make_beats((20, 50), n_features=8, seed=2)
    cfg = D.SmoteConfig(3, 0.8, 5)
    a, pa = D.smote_oversample(ds, cfg, True)
    b, pb = D.smote_oversample(ds, cfg, True)
    np.testing.assert_array_equal(a.features, b.features)
    pa.write_jsonl(tmp_path / "p.jsonl")
    back = D.SmoteProvenance.read_jsonl(tmp_path / "p.jsonl")
    for f in ("source", "neighbor", "r", "label"):
        np.testing.assert_array_equal(getattr(back, f), getattr(pb, f))


def test_smote_errors():
    ds = D.EcgDataset(np.random.default_rng(0).random((12, 2)), [0] * 3 + [1] * 9)
    with pytest.raises(D.DataError):
        D.smote_oversample(ds, D.SmoteConfig(k_neighbors=3))
    with pytest.raises(D.DataError):
        D.SmoteConfig(ratio=0)
    with pytest.raises(D.DataError):
        D.smote_oversample(D.EcgDataset(np.ones((3, 1)), [0, 0, 0]))


def test_signed_labels():
    assert D.signed_labels([0, 1, 0, 2], 0).tolist() == [1, -1, 1, -1]


def test_published_file_layouts(tmp_path):
    normal = make_beats((4, 0), n_features=187, seed=0)
    abnormal = make_beats((0, 6), n_features=187, seed=1)
    D.save_csv(D.EcgDataset(normal.features, np.zeros(4, int)), tmp_path / "ptbdb_normal.csv")
    D.save_csv(D.EcgDataset(abnormal.features, np.ones(6, int)), tmp_path / "ptbdb_abnormal.csv")
    ptb = D.load_ptb(tmp_path)
    assert ptb.n_samples == 10 and ptb.n_features == 187
    assert ptb.class_names == D.PTB_CLASS_NAMES and ptb.class_counts().tolist() == [4, 6]
    mit = make_beats((5, 3, 2, 2, 3), n_features=187, seed=2)
    D.save_csv(mit, tmp_path / "mitbih_train.csv")
    D.save_csv(mit.subset(np.arange(0, 15, 2)), tmp_path / "mitbih_test.csv")
    train, test = D.load_mitbih(tmp_path)
    assert train.class_names == ("N", "S", "V", "F", "Q")
    assert (train.n_samples, test.n_samples) == (15, 8)
