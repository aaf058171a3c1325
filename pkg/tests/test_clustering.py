import numpy as np
import pytest

from rhomboid_pool.clustering import (HierarchySchedule, LevelGraph, PoolingHierarchy, build_hierarchy,
                                      cluster_matrix, delaunay_graph, generated_graph, normalize_rows,
                                      pool_features)
from rhomboid_pool.errors import OrderOutOfRange, ShapeMismatch
from rhomboid_pool.geometry import PointCloud
from rhomboid_pool.synthetic import knn_edges, random_cloud
from rhomboid_pool.tiling import build_tiling, co_membership_weight, slice_tiling


def test_cluster_matrix_equals_pairwise_recount(cloud3d):
    tiling = build_tiling(cloud3d, 4)
    for k1, k2 in ((1, 2), (1, 3), (2, 4)):
        mat = cluster_matrix(tiling, k1, k2).entries
        fine, coarse = tiling.vertices(k1), tiling.vertices(k2)
        assert mat.shape == (len(coarse), len(fine))
        naive = np.array([[co_membership_weight(tiling, q, q2) for q in fine] for q2 in coarse])
        assert np.array_equal(mat, naive)


def test_cluster_matrix_order_checks(cloud2d):
    tiling = build_tiling(cloud2d, 2)
    with pytest.raises(OrderOutOfRange):
        cluster_matrix(tiling, 2, 2)
    with pytest.raises(OrderOutOfRange):
        cluster_matrix(tiling, 1, 3)


def test_normalize_rows():
    out = normalize_rows(np.array([[1, 3], [0, 0], [2, 2]]))
    assert np.allclose(out, [[0.25, 0.75], [0, 0], [0.5, 0.5]])


def test_pool_features_is_weighted_member_average():
    c_hat = normalize_rows(np.array([[1, 1, 0], [0, 2, 2]]))
    h = np.arange(6, dtype=float).reshape(3, 2)
    out = pool_features(c_hat, h)
    expected = np.zeros((2, 2))
    for i in range(2):
        for j in range(3):
            expected[i] += c_hat[i, j] * h[j]
    assert np.allclose(out, expected)
    with pytest.raises(ShapeMismatch):
        pool_features(c_hat, h[:2])


def test_level_graph_validation():
    with pytest.raises(ShapeMismatch):
        LevelGraph(1, np.zeros((2, 3)), "x")
    with pytest.raises(ShapeMismatch):
        LevelGraph(1, np.array([[0, 1], [0, 0]]), "x")
    with pytest.raises(ShapeMismatch):
        LevelGraph(1, np.eye(2), "x")
    with pytest.raises(ShapeMismatch):
        LevelGraph.from_edges(2, [(0, 5)])
    g = LevelGraph.from_edges(3, [(0, 1), (2, 1), (1, 1)])
    assert g.edges() == [(0, 1), (1, 2)]


def test_schedules():
    assert HierarchySchedule().orders == (1, 2, 3) and HierarchySchedule().max_order == 3
    cox2 = HierarchySchedule(step=2, layers=1)
    assert cox2.orders == (1, 3) and cox2.max_order == 3
    with pytest.raises(ValueError):
        HierarchySchedule(step=0)


def test_generated_graph_matches_member_adjacency_loop(cloud2d):
    tiling = build_tiling(cloud2d, 3)
    g_ini = LevelGraph.from_edges(cloud2d.n, knn_edges(cloud2d.points, 2))
    sl = slice_tiling(tiling, 3)
    for overlaps in (False, True):
        gen = generated_graph(sl, g_ini, connect_overlaps=overlaps)
        m = len(sl.vertices)
        expected = np.zeros((m, m))
        for a in range(m):
            for b in range(m):
                if a == b:
                    continue
                linked = any(g_ini.adjacency[x, y] for x in sl.vertices[a] for y in sl.vertices[b])
                shared = bool(set(sl.vertices[a]) & set(sl.vertices[b]))
                expected[a, b] = linked or (overlaps and shared)
        assert np.array_equal(gen.adjacency, expected)
    with pytest.raises(ShapeMismatch):
        generated_graph(sl, g_ini, n_points=cloud2d.n + 1)


def test_build_hierarchy_chains_shapes(cloud3d):
    hier = build_hierarchy(cloud3d, None, HierarchySchedule())
    assert hier.num_layers == 2
    assert [g.order for g in hier.graphs] == [1, 2, 3]
    for l, mat in enumerate(hier.matrices):
        assert mat.shape == (hier.graphs[l + 1].num_vertices, hier.graphs[l].num_vertices)
        sums = mat.sum(axis=1)
        assert np.allclose(sums[sums > 0], 1.0)
    tiling = build_tiling(cloud3d, 3)
    assert np.array_equal(hier.graphs[0].adjacency, delaunay_graph(slice_tiling(tiling, 1)).adjacency)


def test_build_hierarchy_generated_kind(cloud2d):
    g_ini = LevelGraph.from_edges(cloud2d.n, knn_edges(cloud2d.points))
    hier = build_hierarchy(cloud2d, g_ini, HierarchySchedule(2, 2), graph_kind="generated")
    assert hier.graphs[0] is g_ini
    assert [g.kind for g in hier.graphs[1:]] == ["generated", "generated"]
    with pytest.raises(ValueError):
        build_hierarchy(cloud2d, None, HierarchySchedule(), graph_kind="generated")


def test_build_hierarchy_degenerate_cloud():
    cloud = PointCloud([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    hier = build_hierarchy(cloud, None, HierarchySchedule(layers=3))
    assert hier.matrices[0].shape == (1, 3) and np.allclose(hier.matrices[0], 1 / 3)
    assert all(m.shape == (1, 1) for m in hier.matrices[1:])


def test_build_hierarchy_rejects_short_tiling(cloud2d):
    with pytest.raises(OrderOutOfRange):
        build_hierarchy(cloud2d, None, HierarchySchedule(), tiling=build_tiling(cloud2d, 2))


def test_hierarchy_shape_check():
    g = LevelGraph(1, np.zeros((3, 3)), "x")
    with pytest.raises(ShapeMismatch):
        PoolingHierarchy(HierarchySchedule(1, 1), (np.ones((2, 4)),), (g, LevelGraph(2, np.zeros((2, 2)), "x")))
