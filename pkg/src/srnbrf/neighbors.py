"""Exact Euclidean k-nearest-neighbor queries with a deterministic tie-break.

Neighbors are ordered by (distance, row index). Candidates come from a
``cKDTree`` query; distances are then recomputed here and re-ranked, and a
query whose tie group may extend past the candidate set is widened until it
provably does not. Results are therefore identical to a brute-force scan.
"""
from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

from .dataset import NEGATIVE, POSITIVE


class NeighborIndex:
    """Read-only index over the rows of ``points``."""

    def __init__(self, points):
        pts = np.array(points, dtype=np.float64, order="C")
        if pts.ndim != 2:
            raise ValueError("points must be an n x d matrix")
        pts.setflags(write=False)
        self.points = pts
        self._tree = cKDTree(pts, balanced_tree=False, compact_nodes=False) if len(pts) else None

    @property
    def n(self) -> int:
        return self.points.shape[0]

    def query_many(self, queries, k: int, exclude=None):
        """k nearest rows for each query row.

        ``exclude`` is an optional per-query row index (or -1) to leave out,
        used for self-exclusion. Returns ``(indices, distances)`` arrays of
        shape (m, k), sorted by (distance, index).
        """
        Q = np.atleast_2d(np.asarray(queries, dtype=np.float64))
        m = Q.shape[0]
        if exclude is None:
            excl = np.full(m, -1, dtype=np.int64)
        else:
            excl = np.asarray(exclude, dtype=np.int64).reshape(m)
        eligible = self.n - (excl >= 0).astype(np.int64)
        if k < 1:
            raise ValueError("k must be positive")
        if m and k > eligible.min():
            raise ValueError(f"k={k} exceeds the {int(eligible.min())} eligible points")
        out_idx = np.empty((m, k), dtype=np.int64)
        out_dist = np.empty((m, k), dtype=np.float64)
        if m == 0:
            return out_idx, out_dist
        # One spare slot for the excluded row, one to witness a strict gap past the k-th distance.
        todo = np.arange(m)
        kq = min(k + 2, self.n)
        while todo.size:
            idx, dist, sure = self._candidates(Q[todo], excl[todo], k, kq)
            out_idx[todo] = idx
            out_dist[todo] = dist
            todo = todo[~sure]
            # tie groups (duplicate rows) reach past the candidate set: widen and retry
            kq = min(2 * kq, self.n)
        return out_idx, out_dist

    def _candidates(self, Q, excl, k, kq):
        tree_dist, cand = self._tree.query(Q, k=kq)
        m = Q.shape[0]
        tree_dist = tree_dist.reshape(m, kq)
        cand = cand.reshape(m, kq)
        diff = self.points[cand] - Q[:, None, :]
        dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
        dist[cand == excl[:, None]] = np.inf
        order = np.lexsort((cand, dist), axis=1)
        cand = np.take_along_axis(cand, order, axis=1)[:, :k]
        dist = np.take_along_axis(dist, order, axis=1)[:, :k]
        if kq == self.n:
            sure = np.ones(m, dtype=bool)
        else:
            # every point the tree did not return lies at least tree_dist[:, -1] away
            sure = tree_dist[:, -1] > dist[:, -1] * (1 + 1e-9) + 1e-300
        return cand, dist, sure

    def knn_rows(self, k: int):
        """k nearest neighbors of every indexed row, each excluding itself."""
        return self.query_many(self.points, k, exclude=np.arange(self.n))


def knn(index: NeighborIndex, query, k: int, exclude_self: int | None = None) -> list[tuple[int, float]]:
    """k nearest neighbors of one point as ``[(row, distance), ...]``.

    ``exclude_self`` is the row index of the query inside the index, if any.
    """
    excl = None if exclude_self is None else [exclude_self]
    idx, dist = index.query_many(np.asarray(query, dtype=np.float64)[None, :], k, exclude=excl)
    return [(int(i), float(d)) for i, d in zip(idx[0], dist[0])]


def vote(neighbor_labels) -> np.ndarray:
    """Majority label per row of a (m, k) label matrix; ties go to negative."""
    lab = np.asarray(neighbor_labels)
    k = lab.shape[1]
    pos = np.count_nonzero(lab == POSITIVE, axis=1)
    return np.where(2 * pos > k, POSITIVE, NEGATIVE).astype(np.int8)


def knn_label_vote(index: NeighborIndex, labels, query_row: int, k: int) -> int:
    idx, _ = index.query_many(index.points[query_row][None, :], k, exclude=[query_row])
    return int(vote(np.asarray(labels)[idx])[0])


def knn_votes(index: NeighborIndex, labels, k: int):
    """Self-excluded k-NN vote for every row; also returns the neighbor matrix."""
    idx, _ = index.knn_rows(k)
    return vote(np.asarray(labels)[idx]), idx
