import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from muygps_ecg.nn_index import NnIndex, build, query
from oracles import brute_force_knn


def test_single_row_index():
    idx = build([[0.2, 0.4]])
    for q in ([0, 0], [5, 5]):
        res = query(idx, q, 1)
        assert res.indices.tolist() == [0]


def test_training_point_finds_itself():
    X = np.random.default_rng(0).random((30, 5))
    res = query(build(X), X[7], 1)
    assert res.indices.tolist() == [7]
    assert res.distances[0] == 0.0


def test_collinear_leave_one_out():
    res = query(build([[0.0], [1.0], [2.0]]), [0.0], 2, exclude_self=0)
    assert res.indices.tolist() == [1, 2]
    assert res.distances.tolist() == [1.0, 2.0]


@pytest.mark.parametrize("n,d,k", [(1000, 8, 10), (500, 80, 50)])
def test_matches_brute_force(n, d, k):
    rng = np.random.default_rng(n + d)
    X = rng.random((n, d))
    Q = rng.random((40, d))
    idx, dist = build(X).query_batch(Q, k)
    for i, q in enumerate(Q):
        bi, bd = brute_force_knn(X, q, k)
        assert idx[i].tolist() == bi.tolist()
        np.testing.assert_array_equal(dist[i], bd)


def test_leave_one_out_matches_brute_force():
    rng = np.random.default_rng(4)
    X = rng.random((300, 6))
    excl = np.arange(0, 300, 3)
    idx, dist = build(X).query_batch(X[excl], 12, exclude=excl)
    for row, e in enumerate(excl):
        bi, bd = brute_force_knn(X, X[e], 12, exclude=e)
        assert idx[row].tolist() == bi.tolist()
        assert e not in idx[row]


def test_ties_broken_by_index():
    X = np.array([[1.0, 0], [-1.0, 0], [0, 1.0], [0, -1.0], [2.0, 0]])
    res = query(build(X), [0.0, 0.0], 4)
    assert res.indices.tolist() == [0, 1, 2, 3]
    dup = np.repeat(np.random.default_rng(2).random((20, 3)), 3, axis=0)
    idx, _ = build(dup).query_batch(dup[::3], 6)
    for i, row in enumerate(idx):
        assert row[:3].tolist() == [3 * i, 3 * i + 1, 3 * i + 2]


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 40), st.integers(1, 6), st.integers(0, 10_000), st.booleans())
def test_property_exact_and_prefix(n, d, seed, coarse):
    rng = np.random.default_rng(seed)
    X = rng.random((n, d))
    if coarse:
        X = np.round(X * 3) / 3  # many exact ties
    index = build(X)
    q = X[0] if coarse else rng.random(d)
    full = index.query(q, n)
    assert sorted(full.indices.tolist()) == list(range(n))
    assert np.all(np.diff(full.distances) >= 0)
    bi, _ = brute_force_knn(X, q, n)
    assert full.indices.tolist() == bi.tolist()
    for k in range(1, n):
        assert index.query(q, k).indices.tolist() == full.indices[:k].tolist()


def test_threads_do_not_change_results():
    rng = np.random.default_rng(9)
    X, Q = rng.random((700, 10)), rng.random((600, 10))
    index = build(X)
    a = index.query_batch(Q, 7, threads=1)
    b = index.query_batch(Q, 7, threads=4)
    np.testing.assert_array_equal(a[0], b[0])
    np.testing.assert_array_equal(a[1], b[1])


def test_build_is_deterministic_and_immutable():
    X = np.random.default_rng(1).random((50, 3))
    a, b = build(X), build(X)
    np.testing.assert_array_equal(a.query_batch(X, 5)[0], b.query_batch(X, 5)[0])
    X[:] = 0  # caller mutation does not leak in
    assert a.train.max() > 0
    with pytest.raises(ValueError):
        a.train[0, 0] = 1.0


def test_errors():
    with pytest.raises(ValueError):
        NnIndex(np.empty((0, 3)))
    index = build(np.random.default_rng(0).random((5, 2)))
    with pytest.raises(ValueError):
        index.query([0, 0], 6)
    with pytest.raises(ValueError):
        index.query([0, 0], 5, exclude_self=1)
    with pytest.raises(ValueError):
        index.query([0, 0], 0)
    with pytest.raises(ValueError):
        index.query([0, 0, 0], 1)
