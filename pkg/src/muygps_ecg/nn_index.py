"""Exact Euclidean k-nearest-neighbor search.

Candidates are screened with the squared-norm expansion, then the survivors
are re-ranked with directly computed distances, so the result is exactly the
brute-force answer (ties broken by ascending training index).
"""

from dataclasses import dataclass

import numpy as np

from ._parallel import chunked_map, concat

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class NeighborSet:
    indices: np.ndarray
    distances: np.ndarray

    def __len__(self):
        return len(self.indices)


class NnIndex:
    """Read-only brute-force index over a fixed training matrix."""

    def __init__(self, train):
        train = np.asarray(train, dtype=float)
        if train.ndim != 2 or train.shape[0] == 0:
            raise ValueError("cannot build a neighbor index over an empty matrix")
        self.train = np.array(train, copy=True)
        self.train.setflags(write=False)
        self.sq_norms = np.einsum("ij,ij->i", self.train, self.train)
        self.sq_norms.setflags(write=False)
        self._max_sq_norm = float(self.sq_norms.max())

    @property
    def n(self):
        return self.train.shape[0]

    @property
    def dim(self):
        return self.train.shape[1]

    def _check_k(self, k, excluding):
        limit = self.n - (1 if excluding else 0)
        if not 1 <= k <= limit:
            raise ValueError(f"k={k} out of range [1, {limit}]")

    def query(self, x, k, exclude_self=None):
        x = np.asarray(x, dtype=float).reshape(1, -1)
        excl = None if exclude_self is None else np.array([exclude_self])
        idx, dist = self.query_batch(x, k, exclude=excl, threads=1)
        return NeighborSet(idx[0], dist[0])

    def query_batch(self, queries, k, exclude=None, threads=None):
        """Neighbors for every row of ``queries``.

        ``exclude`` optionally gives, per query row, one training index to
        leave out (leave-one-out mode). Returns ``(indices, distances)``,
        both of shape ``(m, k)``.
        """
        Q = np.atleast_2d(np.asarray(queries, dtype=float))
        if Q.shape[1] != self.dim:
            raise ValueError(f"query dimension {Q.shape[1]} != index dimension {self.dim}")
        self._check_k(k, exclude is not None)
        m = Q.shape[0]
        if m == 0:
            return np.empty((0, k), dtype=np.int64), np.empty((0, k))
        if exclude is not None:
            exclude = np.asarray(exclude, dtype=np.int64)
            if exclude.shape != (m,):
                raise ValueError("exclude must give one index per query row")
            if np.any((exclude < 0) | (exclude >= self.n)):
                raise ValueError("exclude index out of range")
        block = int(max(1, min(256, 2**22 // self.n)))

        def run(sl):
            return self._query_block(Q[sl], k, None if exclude is None else exclude[sl])

        return concat(chunked_map(run, m, threads=threads, chunk=block))

    def _query_block(self, Q, k, exclude):
        qn = np.einsum("ij,ij->i", Q, Q)
        approx = qn[:, None] + self.sq_norms[None, :] - 2.0 * (Q @ self.train.T)
        if exclude is not None:
            approx[np.arange(len(Q)), exclude] = np.inf
        tol = 64.0 * _EPS * (qn + self._max_sq_norm) + 1e-300
        n_avail = self.n - (exclude is not None)
        kk = min(n_avail, k + 8)
        cand = np.argpartition(approx, kk - 1, axis=1)[:, :kk]
        cand_approx = np.take_along_axis(approx, cand, axis=1)
        kth = np.partition(cand_approx, k - 1, axis=1)[:, k - 1]
        # rows whose screening margin may hide a true neighbor go to the slow path
        safe = (kk == n_avail) | (cand_approx.max(axis=1) > kth + 2.0 * tol)
        diff = self.train[cand] - Q[:, None, :]
        dist = np.sqrt(np.sum(diff * diff, axis=2))
        order = np.lexsort((cand, dist), axis=-1)[:, :k]
        out_i = np.take_along_axis(cand, order, axis=1)
        out_d = np.take_along_axis(dist, order, axis=1)
        for r in np.flatnonzero(~safe):
            cand = np.flatnonzero(approx[r] <= kth[r] + 2.0 * tol[r])
            diff = self.train[cand] - Q[r]
            d = np.sqrt(np.sum(diff * diff, axis=1))
            order = np.lexsort((cand, d))[:k]
            out_i[r] = cand[order]
            out_d[r] = d[order]
        return out_i, out_d


def build(train):
    return NnIndex(train)


def query(index, x, k, exclude_self=None):
    return index.query(x, k, exclude_self=exclude_self)
