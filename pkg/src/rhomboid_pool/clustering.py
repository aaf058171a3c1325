"""Clustering matrices between slice levels and the pooling hierarchy built on them.

Orientation: a cluster matrix has one row per coarse vertex (order k2) and one
column per fine vertex (order k1), so that ``Z = C_hat @ H`` averages cluster
members into their cluster.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .errors import OrderOutOfRange, ShapeMismatch, TooFewPoints
from .geometry import PointCloud
from .tiling import DelaunaySlice, RhomboidTiling, build_tiling, incidence_matrix, slice_tiling

GraphKind = Literal["delaunay", "generated"]


@dataclass(frozen=True, eq=False)
class ClusterMatrix:
    fine_level: int
    coarse_level: int
    entries: np.ndarray  # (n_coarse, n_fine) non-negative integers

    @property
    def shape(self):
        return self.entries.shape


@dataclass(frozen=True, eq=False)
class LevelGraph:
    order: int
    adjacency: np.ndarray
    kind: str

    def __post_init__(self):
        adj = np.asarray(self.adjacency)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise ShapeMismatch(f"adjacency must be square, got {adj.shape}")
        if not np.array_equal(adj, adj.T):
            raise ShapeMismatch("adjacency must be symmetric")
        if np.any(np.diag(adj)):
            raise ShapeMismatch("adjacency must not carry self-loops")
        object.__setattr__(self, "adjacency", adj.astype(np.float64))

    @property
    def num_vertices(self) -> int:
        return self.adjacency.shape[0]

    def edges(self) -> list[tuple[int, int]]:
        rows, cols = np.nonzero(np.triu(self.adjacency))
        return list(zip(rows.tolist(), cols.tolist()))

    @classmethod
    def from_edges(cls, n: int, edges, order: int = 1, kind: str = "input") -> "LevelGraph":
        adj = np.zeros((n, n))
        for a, b in edges:
            if not (0 <= a < n and 0 <= b < n):
                raise ShapeMismatch(f"edge ({a}, {b}) outside 0..{n - 1}")
            if a != b:
                adj[a, b] = adj[b, a] = 1.0
        return cls(order, adj, kind)


@dataclass(frozen=True)
class HierarchySchedule:
    step: int = 1  # delta k
    layers: int = 2  # L

    def __post_init__(self):
        if self.step < 1 or self.layers < 1:
            raise ValueError(f"step and layers must be >= 1, got {self.step}, {self.layers}")

    @property
    def orders(self) -> tuple[int, ...]:
        return tuple(l * self.step + 1 for l in range(self.layers + 1))

    @property
    def max_order(self) -> int:
        return self.step * self.layers + 1


@dataclass(frozen=True, eq=False)
class PoolingHierarchy:
    schedule: HierarchySchedule
    matrices: tuple[np.ndarray, ...]  # normalised, C_hat_l for l = 0..L-1
    graphs: tuple[LevelGraph, ...]  # G_0 .. G_L
    vertices: tuple[tuple[tuple[int, ...], ...], ...] = ()  # subsets per level, when geometric

    def __post_init__(self):
        if len(self.graphs) != len(self.matrices) + 1:
            raise ShapeMismatch("need one graph per level")
        for l, mat in enumerate(self.matrices):
            if mat.shape != (self.graphs[l + 1].num_vertices, self.graphs[l].num_vertices):
                raise ShapeMismatch(
                    f"layer {l}: matrix {mat.shape} does not chain graphs "
                    f"{self.graphs[l].num_vertices} -> {self.graphs[l + 1].num_vertices}"
                )

    @property
    def num_layers(self) -> int:
        return len(self.matrices)


def cluster_matrix(tiling: RhomboidTiling, k1: int, k2: int) -> ClusterMatrix:
    if not 1 <= k1 < k2 <= tiling.max_order:
        raise OrderOutOfRange(f"need 1 <= k1 < k2 <= {tiling.max_order}, got {k1}, {k2}")
    entries = incidence_matrix(tiling, k2).T @ incidence_matrix(tiling, k1)
    return ClusterMatrix(k1, k2, entries)


def normalize_rows(c) -> np.ndarray:
    """Divide each row by its sum; all-zero rows stay zero."""
    mat = np.asarray(c.entries if isinstance(c, ClusterMatrix) else c, dtype=np.float64)
    sums = mat.sum(axis=1, keepdims=True)
    out = np.zeros_like(mat)
    np.divide(mat, sums, out=out, where=sums != 0)
    return out


def pool_features(c_hat: np.ndarray, h: np.ndarray) -> np.ndarray:
    if c_hat.shape[1] != h.shape[0]:
        raise ShapeMismatch(f"cannot pool {h.shape[0]} rows with a {c_hat.shape} matrix")
    return c_hat @ h


def delaunay_graph(sl: DelaunaySlice) -> LevelGraph:
    n = len(sl.vertices)
    adj = np.zeros((n, n))
    for a, b in sl.edges:
        adj[a, b] = adj[b, a] = 1.0
    return LevelGraph(sl.k, adj, "delaunay")


def _membership(vertices: Sequence[Sequence[int]], n: int) -> np.ndarray:
    m = np.zeros((len(vertices), n))
    for i, q in enumerate(vertices):
        m[i, list(q)] = 1.0
    return m


def generated_graph(sl: DelaunaySlice, g_ini: LevelGraph, n_points: int | None = None,
                    connect_overlaps: bool = False) -> LevelGraph:
    """Join two clusters when some member of one is adjacent to some member of the other in ``g_ini``.

    Clusters that merely share a point are not joined unless ``connect_overlaps``.
    """
    n = g_ini.num_vertices
    if n_points is not None and n_points != n:
        raise ShapeMismatch(f"initial graph has {n} vertices, cloud has {n_points}")
    if any(max(q, default=-1) >= n for q in sl.vertices):
        raise ShapeMismatch("slice refers to points beyond the initial graph")
    member = _membership(sl.vertices, n)
    adj = (member @ g_ini.adjacency @ member.T) > 0
    if connect_overlaps:
        adj |= (member @ member.T) > 0
    np.fill_diagonal(adj, False)
    return LevelGraph(sl.k, adj.astype(np.float64), "generated")


def _degenerate_hierarchy(n: int, g_ini: LevelGraph, schedule: HierarchySchedule) -> PoolingHierarchy:
    matrices = [np.full((1, n), 1.0 / n)] + [np.ones((1, 1)) for _ in range(schedule.layers - 1)]
    graphs = [g_ini] + [LevelGraph(o, np.zeros((1, 1)), "degenerate") for o in schedule.orders[1:]]
    return PoolingHierarchy(schedule, tuple(matrices), tuple(graphs))


def build_hierarchy(cloud: PointCloud, g_ini: LevelGraph | None, schedule: HierarchySchedule,
                    graph_kind: GraphKind = "delaunay", connect_overlaps: bool = False,
                    edge_rule: str = "nerve", tiling: RhomboidTiling | None = None) -> PoolingHierarchy:
    """Clustering matrices and level graphs for every pooling layer of ``schedule``.

    Clouds too small for a single maximal rhomboid (n < d+2) collapse into
    one uniform cluster that is carried unchanged through the later layers.
    """
    n = cloud.n
    if graph_kind not in ("delaunay", "generated"):
        raise ValueError(f"unknown graph kind {graph_kind!r}")
    if g_ini is not None and g_ini.num_vertices != n:
        raise ShapeMismatch(f"initial graph has {g_ini.num_vertices} vertices, cloud has {n}")
    if graph_kind == "generated" and g_ini is None:
        raise ValueError("generated graphs need an initial graph")

    if tiling is None:
        try:
            tiling = build_tiling(cloud, schedule.max_order)
        except TooFewPoints:
            g0 = g_ini if g_ini is not None else LevelGraph(1, np.zeros((n, n)), "input")
            return _degenerate_hierarchy(n, g0, schedule)
    elif tiling.max_order < schedule.max_order:
        raise OrderOutOfRange(f"tiling reaches order {tiling.max_order}, schedule needs {schedule.max_order}")

    orders = schedule.orders
    slices = [slice_tiling(tiling, k, edge_rule) for k in orders]
    g0 = g_ini if g_ini is not None else delaunay_graph(slices[0])
    graphs = [g0]
    matrices = []
    for l in range(schedule.layers):
        matrices.append(normalize_rows(cluster_matrix(tiling, orders[l], orders[l + 1])))
        sl = slices[l + 1]
        if graph_kind == "delaunay":
            graphs.append(delaunay_graph(sl))
        else:
            graphs.append(generated_graph(sl, g_ini, connect_overlaps=connect_overlaps))
    return PoolingHierarchy(schedule, tuple(matrices), tuple(graphs), tuple(s.vertices for s in slices))
