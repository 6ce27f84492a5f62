"""Exact nearest-neighbor search over the aligned source positions.

A thin wrapper around scipy's cKDTree that pins down two things the raw
tree leaves open: distances are recomputed with one canonical numpy
expression (so results are bitwise comparable with a linear scan using
the same arithmetic), and equidistant candidates are ordered by source
index.  Queries are exact, never approximate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .cloud import ColorPointCloud
from .errors import EmptyCloud

# Relative slack when re-examining a possible tie at the k-th neighbor;
# only needs to cover ulp-level disagreement between scipy's internal
# distance and the canonical recomputation.
_TIE_RTOL = 1e-12


@dataclass(frozen=True)
class NeighborSet:
    """K nearest source points of one query, sorted by (distance, index)."""

    target_index: int
    indices: np.ndarray
    distances: np.ndarray

    def __len__(self) -> int:
        return len(self.indices)


class SpatialIndex:
    """Immutable exact KD-tree over the source cloud positions.

    Build once, query from any number of threads; `workers` only changes
    how queries are parallelized, never their results.
    """

    def __init__(self, source: ColorPointCloud):
        if len(source) == 0:
            raise EmptyCloud("cannot index an empty source cloud")
        self._points = source.positions
        self._tree = cKDTree(self._points)

    @property
    def count(self) -> int:
        return self._points.shape[0]

    @property
    def points(self) -> np.ndarray:
        return self._points

    def _canonical_distances(self, queries: np.ndarray, idx: np.ndarray) -> np.ndarray:
        diff = self._points[idx] - queries[..., None, :]
        return np.sqrt(np.sum(diff * diff, axis=-1))

    def k_nearest_batch(self, queries: np.ndarray, k: int,
                        workers: int = 1) -> tuple[np.ndarray, np.ndarray]:
        """Exact k nearest source points for each query row.

        Returns (indices, distances), both (n, m) with m = min(k, count),
        each row sorted by (distance, source index).
        """
        queries = np.atleast_2d(np.asarray(queries, dtype=np.float64))
        if k < 1:
            raise ValueError("k must be >= 1")
        n = queries.shape[0]
        m = min(k, self.count)
        probe = min(m + 1, self.count)  # one extra column to spot boundary ties
        _, idx = self._tree.query(queries, k=probe, workers=workers)
        idx = idx.reshape(n, probe)
        dist = self._canonical_distances(queries, idx)
        order = np.lexsort((idx, dist), axis=-1)
        idx = np.take_along_axis(idx, order, axis=-1)
        dist = np.take_along_axis(dist, order, axis=-1)
        if probe > m:
            edge = dist[:, m - 1]
            suspect = dist[:, m] <= edge * (1.0 + _TIE_RTOL)
            for row in np.nonzero(suspect)[0]:
                r_idx, r_dist = self._k_nearest_careful(queries[row], m)
                idx[row, :m] = r_idx
                dist[row, :m] = r_dist
        return idx[:, :m].copy(), dist[:, :m].copy()

    def _k_nearest_careful(self, query: np.ndarray, m: int) -> tuple[np.ndarray, np.ndarray]:
        # Boundary tie: collect every candidate within the k-th radius
        # (plus slack), then rank canonically.
        _, idx = self._tree.query(query, k=min(m, self.count))
        idx = np.atleast_1d(idx)
        d = self._canonical_distances(query, idx)
        radius = d.max() * (1.0 + 1e-9) + 1e-300
        cand = np.asarray(self._tree.query_ball_point(query, radius), dtype=np.intp)
        cd = self._canonical_distances(query, cand)
        order = np.lexsort((cand, cd))[:m]
        return cand[order], cd[order]

    def nearest_batch(self, queries: np.ndarray,
                      workers: int = 1) -> tuple[np.ndarray, np.ndarray]:
        """Nearest source index and distance for each query row."""
        idx, dist = self.k_nearest_batch(queries, 1, workers=workers)
        return idx[:, 0], dist[:, 0]

    def nearest(self, query) -> tuple[int, float]:
        """Single-query nearest neighbor; ties go to the smaller index."""
        idx, dist = self.nearest_batch(np.asarray(query, dtype=np.float64)[None, :])
        return int(idx[0]), float(dist[0])

    def k_nearest(self, query, k: int, target_index: int = -1) -> NeighborSet:
        """Single-query k nearest neighbors as a NeighborSet."""
        idx, dist = self.k_nearest_batch(np.asarray(query, dtype=np.float64)[None, :], k)
        return NeighborSet(target_index, idx[0].copy(), dist[0].copy())


def build_index(source: ColorPointCloud) -> SpatialIndex:
    """Build the immutable KD-tree over all source points."""
    return SpatialIndex(source)
