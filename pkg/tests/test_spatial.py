import numpy as np
import pytest

from cloudcolor import SpatialIndex, build_index
from cloudcolor.errors import EmptyCloud

from conftest import make_cloud, random_cloud
from oracles import knn_scan


class TestBuildIndex:
    def test_empty_cloud_rejected(self):
        empty = make_cloud(np.empty((0, 3)), np.empty((0, 3), dtype=np.int64))
        with pytest.raises(EmptyCloud):
            build_index(empty)

    def test_singleton_every_query_hits_it(self, rng):
        index = build_index(make_cloud([[1.0, 2.0, 3.0]], [[0, 0, 0]]))
        for q in rng.uniform(-5, 5, (10, 3)):
            i, d = index.nearest(q)
            assert i == 0
            assert d == pytest.approx(np.linalg.norm(q - [1.0, 2.0, 3.0]))

    def test_self_queries_return_zero(self, rng):
        cloud = random_cloud(rng, 100)
        index = build_index(cloud)
        idx, dist = index.nearest_batch(cloud.positions)
        assert np.array_equal(idx, np.arange(100))
        assert np.all(dist == 0.0)

    def test_build_then_probe_matches_scan(self, rng):
        cloud = random_cloud(rng, 300)
        index = build_index(cloud)
        probes = rng.uniform(-1, 1, (1000, 3))
        idx, dist = index.nearest_batch(probes)
        for q, i, d in zip(probes, idx, dist):
            oi, od = knn_scan(cloud.positions, q, 1)
            assert i == oi[0]
            assert d == od[0]


class TestNearest:
    def test_exact_hit(self):
        index = build_index(make_cloud([[0, 0, 0], [5, 0, 0]], [[0, 0, 0]] * 2))
        i, d = index.nearest([5.0, 0.0, 0.0])
        assert (i, d) == (1, 0.0)

    def test_picks_closer_of_two(self):
        index = build_index(make_cloud([[2, 0, 0], [1, 0, 0]], [[0, 0, 0]] * 2))
        i, d = index.nearest([0.0, 0.0, 0.0])
        assert i == 1
        assert d == 1.0

    def test_tie_breaks_to_smaller_index(self):
        # two points equidistant from the origin
        index = build_index(make_cloud([[1, 0, 0], [-1, 0, 0], [0, 3, 0]], [[0, 0, 0]] * 3))
        i, d = index.nearest([0.0, 0.0, 0.0])
        assert (i, d) == (0, 1.0)


class TestKNearest:
    def test_k1_equals_nearest(self, rng):
        cloud = random_cloud(rng, 50)
        index = build_index(cloud)
        for q in rng.uniform(-1, 1, (20, 3)):
            ns = index.k_nearest(q, 1)
            assert len(ns) == 1
            i, d = index.nearest(q)
            assert ns.indices[0] == i
            assert ns.distances[0] == d

    def test_k_at_least_count_returns_all(self, rng):
        cloud = random_cloud(rng, 7)
        index = build_index(cloud)
        ns = index.k_nearest(rng.uniform(-1, 1, 3), 100)
        assert len(ns) == 7
        assert sorted(ns.indices) == list(range(7))
        assert np.all(np.diff(ns.distances) >= 0)

    def test_k8_matches_sort_all_oracle(self, rng):
        cloud = random_cloud(rng, 500)
        index = build_index(cloud)
        probes = rng.uniform(-1, 1, (200, 3))
        idx, dist = index.k_nearest_batch(probes, 8)
        for q, irow, drow in zip(probes, idx, dist):
            oi, od = knn_scan(cloud.positions, q, 8)
            assert np.array_equal(irow, oi)
            assert np.array_equal(drow, od)

    def test_grid_ties_match_oracle(self):
        # integer grid: plenty of exactly equidistant neighbors
        g = np.arange(4, dtype=np.float64)
        pts = np.array([[x, y, z] for x in g for y in g for z in g])
        cloud = make_cloud(pts, np.zeros_like(pts, dtype=np.int64))
        index = build_index(cloud)
        queries = np.array([
            [0.0, 0.0, 0.0], [1.0, 1.0, 1.0], [1.5, 1.5, 1.5],
            [2.0, 1.0, 1.0], [0.5, 0.0, 0.0], [3.0, 3.0, 3.0],
        ])
        for q in queries:
            for k in (1, 2, 5, 9, 27):
                ns = index.k_nearest(q, k)
                oi, od = knn_scan(pts, q, k)
                assert np.array_equal(ns.indices, oi), (q, k)
                assert np.array_equal(ns.distances, od), (q, k)

    def test_duplicate_points_tie_correctly(self):
        pts = np.array([[0.0, 0.0, 0.0]] * 5 + [[1.0, 0.0, 0.0]])
        cloud = make_cloud(pts, np.zeros((6, 3), dtype=np.int64))
        index = build_index(cloud)
        ns = index.k_nearest([0.0, 0.0, 0.0], 3)
        assert np.array_equal(ns.indices, [0, 1, 2])

    def test_random_property_against_scan(self, rng):
        for _ in range(10):
            n = int(rng.integers(1, 400))
            cloud = random_cloud(rng, n)
            index = build_index(cloud)
            queries = rng.uniform(-1, 1, (50, 3))
            k = int(rng.integers(1, 12))
            idx, dist = index.k_nearest_batch(queries, k)
            for q, irow, drow in zip(queries, idx, dist):
                oi, od = knn_scan(cloud.positions, q, k)
                assert np.array_equal(irow, oi)
                assert np.array_equal(drow, od)

    def test_workers_do_not_change_results(self, rng):
        cloud = random_cloud(rng, 400)
        index = build_index(cloud)
        probes = rng.uniform(-1, 1, (300, 3))
        i1, d1 = index.k_nearest_batch(probes, 6, workers=1)
        i4, d4 = index.k_nearest_batch(probes, 6, workers=4)
        assert np.array_equal(i1, i4)
        assert np.array_equal(d1, d4)
