"""Maximal rhomboids, integer-level slices and incidence matrices.

Two constructions give the same tiling:

``brute``     every (d+1)-subset's circumsphere, kept when at most K points
              lie strictly inside; O(n^(d+2)), used as a reference.
``delaunay``  level by level: a sphere with inside set I carries a Delaunay
              simplex of X - I that fills the hole left by deleting any p in I
              from Del(X - I + p).  That hole is spanned by p's star, which
              consists of shallower rhomboids already found, and every level-j
              vertex I is a corner of some shallower rhomboid.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import GeneralPositionViolation, OrderOutOfRange, TooFewPoints, UnknownVertex
from .geometry import TAU_GP, TAU_ON, PointCloud, Sphere, _circumspheres, _combinations_array, subset_key

EDGE_RULES = ("nerve", "mosaic")


@dataclass(frozen=True)
class Rhomboid:
    id: int
    in_set: tuple[int, ...]
    on_set: tuple[int, ...]
    sphere: Sphere

    @property
    def depth(self) -> int:
        return len(self.on_set)

    @property
    def levels(self) -> range:
        return range(len(self.in_set), len(self.in_set) + len(self.on_set) + 1)

    def contains(self, q: Sequence[int]) -> bool:
        q = set(q)
        return set(self.in_set) <= q <= set(self.in_set) | set(self.on_set)

    def vertices(self, k: int) -> list[tuple[int, ...]]:
        """Level-k subsets Q with in_set <= Q <= in_set + on_set."""
        extra = k - len(self.in_set)
        if extra < 0 or extra > len(self.on_set):
            return []
        return [subset_key(self.in_set + c) for c in itertools.combinations(self.on_set, extra)]


@dataclass(frozen=True)
class DelaunaySlice:
    k: int
    vertices: tuple[tuple[int, ...], ...]
    edges: frozenset  # of (i, j) index pairs with i < j

    def index(self) -> dict:
        return {q: i for i, q in enumerate(self.vertices)}


@dataclass(frozen=True, eq=False)
class RhomboidTiling:
    cloud: PointCloud
    max_order: int
    rhomboids: tuple[Rhomboid, ...]
    registries: dict = field(repr=False)  # k -> {subset: vertex id}

    def vertices(self, k: int) -> list[tuple[int, ...]]:
        self._check_order(k)
        return list(self.registries[k])

    def vertex_id(self, q: Sequence[int]) -> int:
        key = subset_key(q)
        reg = self.registries.get(len(key))
        if reg is None or key not in reg:
            raise UnknownVertex(f"subset {key} is not a registered vertex")
        return reg[key]

    def _check_order(self, k: int):
        if not 1 <= k <= self.max_order:
            raise OrderOutOfRange(f"order {k} outside 1..{self.max_order}")


def _classify_spheres(cloud: PointCloud, simplices: np.ndarray):
    """Circumspheres of ``simplices`` with their strict-inside masks; rejects degenerate input."""
    d = cloud.dimension
    centers, radii, dets = _circumspheres(cloud, simplices)
    singular = np.abs(dets) <= TAU_GP
    if singular.any():
        raise GeneralPositionViolation("affinely dependent simplex", map(tuple, simplices[singular].tolist()))
    tol = TAU_ON * cloud.diameter
    gap = np.linalg.norm(cloud.points[None, :, :] - centers[:, None, :], axis=2) - radii[:, None]
    on = np.abs(gap) <= tol
    on_count = on.sum(axis=1)
    if np.any(on_count != d + 1):
        bad = np.flatnonzero(on_count != d + 1)
        raise GeneralPositionViolation("co-spherical points", [tuple(np.flatnonzero(on[b]).tolist()) for b in bad])
    return centers, radii, (gap < -tol) & ~on


def _brute_spheres(cloud: PointCloud, max_order: int):
    kept = {}
    for simplices in _combinations_array(cloud.n, cloud.dimension + 1, chunk=20_000):
        centers, radii, inside = _classify_spheres(cloud, simplices)
        for r in np.flatnonzero(inside.sum(axis=1) <= max_order):
            kept[tuple(simplices[r].tolist())] = (tuple(np.flatnonzero(inside[r]).tolist()), centers[r], radii[r])
    return kept


def _triangulate(points: np.ndarray) -> np.ndarray:
    """Delaunay simplices (global row indices into ``points``) or all subsets when too few points."""
    m, d = points.shape
    if m < d + 1:
        return np.empty((0, d + 1), dtype=np.intp)
    if m == d + 1:
        return np.arange(d + 1, dtype=np.intp)[None, :]
    from scipy.spatial import Delaunay, QhullError
    try:
        tri = Delaunay(points)
    except QhullError as exc:
        raise GeneralPositionViolation(f"triangulation failed: {exc}".splitlines()[0]) from exc
    return np.sort(tri.simplices.astype(np.intp), axis=1)


def _delaunay_spheres(cloud: PointCloud, max_order: int):
    n = cloud.n
    unit = cloud.normalized()
    kept = {}
    by_point: dict[int, list] = {i: [] for i in range(n)}

    def admit(simplices, in_set):
        if not len(simplices):
            return
        centers, radii, inside = _classify_spheres(cloud, simplices)
        want = np.zeros(n, dtype=bool)
        want[list(in_set)] = True
        for r in np.flatnonzero((inside == want).all(axis=1)):
            on_set = tuple(simplices[r].tolist())
            if on_set not in kept:
                kept[on_set] = (in_set, centers[r], radii[r])
                for i in on_set:
                    by_point[i].append(on_set)

    admit(_triangulate(unit), ())
    for depth in range(1, max_order + 1):
        bottoms = set()
        for on_set, (in_set, _, _) in kept.items():
            extra = depth - len(in_set)
            if 0 <= extra <= len(on_set):
                bottoms.update(subset_key(in_set + c) for c in itertools.combinations(on_set, extra))
        for in_set in sorted(bottoms):
            # the hole left by deleting p from Del(X - I + p) is bounded by p's star there
            p, rest = in_set[-1], set(in_set[:-1])
            star = set()
            for on_set in by_point[p]:
                if rest.isdisjoint(on_set) and set(kept[on_set][0]) <= rest:
                    star.update(on_set)
            star.discard(p)
            nbrs = np.array(sorted(star), dtype=np.intp)
            admit(nbrs[_triangulate(unit[nbrs])] if len(nbrs) else np.empty((0, 0), dtype=np.intp), in_set)
    return kept


def build_tiling(cloud: PointCloud, max_order: int, method: str = "delaunay") -> RhomboidTiling:
    """All maximal rhomboids whose sphere holds at most ``max_order`` points inside."""
    n, d = cloud.n, cloud.dimension
    if max_order < 1:
        raise OrderOutOfRange(f"max order must be >= 1, got {max_order}")
    if n < d + 2:
        raise TooFewPoints(f"need at least {d + 2} points in R^{d}, got {n}")
    if method == "brute":
        kept = _brute_spheres(cloud, max_order)
    elif method == "delaunay":
        kept = _delaunay_spheres(cloud, max_order)
    else:
        raise ValueError(f"unknown construction method {method!r}")

    rhomboids = tuple(
        Rhomboid(i, in_set, on_set, Sphere(tuple(float(c) for c in center), float(radius)))
        for i, (on_set, (in_set, center, radius)) in enumerate(sorted(kept.items(), key=lambda kv: kv[0]))
    )
    levels: dict[int, set] = {k: set() for k in range(1, max_order + 1)}
    for rho in rhomboids:
        for k in rho.levels:
            if 1 <= k <= max_order:
                levels[k].update(rho.vertices(k))
    registries = {k: {q: i for i, q in enumerate(sorted(qs))} for k, qs in levels.items()}
    return RhomboidTiling(cloud, max_order, rhomboids, registries)


def slice_tiling(tiling: RhomboidTiling, k: int, edge_rule: str = "nerve") -> DelaunaySlice:
    """Order-k Delaunay complex read off the tiling at level k.

    ``edge_rule="nerve"`` joins every two level-k vertices of a common maximal
    rhomboid, which is the 1-skeleton of the nerve of the order-k Voronoi
    cells.  ``"mosaic"`` keeps only pairs sharing k-1 points (the edges of the
    hypersimplex slices); the two agree in the plane and differ in space by the
    diagonals of octahedral slices.
    """
    tiling._check_order(k)
    if edge_rule not in EDGE_RULES:
        raise ValueError(f"unknown edge rule {edge_rule!r}")
    reg = tiling.registries[k]
    verts = list(reg)
    edges = set()
    for rho in tiling.rhomboids:
        ids = sorted(reg[q] for q in rho.vertices(k))
        for a, b in itertools.combinations(ids, 2):
            if edge_rule == "mosaic" and len(set(verts[a]) & set(verts[b])) != k - 1:
                continue
            edges.add((a, b))
    return DelaunaySlice(k, tuple(verts), frozenset(edges))


def embed_vertex(cloud: PointCloud, q: Sequence[int]) -> tuple[float, ...]:
    """Lift a subset to (sum of its points, -|Q|) in R^(d+1)."""
    key = subset_key(q)
    if not key:
        raise ValueError("cannot lift the empty subset")
    total = cloud.points[list(key)].sum(axis=0)
    return tuple(float(c) for c in total) + (float(-len(key)),)


def rhomboid_lifted_vertices(cloud: PointCloud, rho: Rhomboid) -> list[tuple[tuple[int, ...], tuple[float, ...]]]:
    """All 2^(d+1) lifted corners of a rhomboid, including the empty subset at the origin."""
    corners = []
    for k in rho.levels:
        for q in rho.vertices(k):
            if q:
                corners.append((q, embed_vertex(cloud, q)))
            else:
                corners.append((q, (0.0,) * (cloud.dimension + 1)))
    return corners


def incidence_matrix(tiling: RhomboidTiling, k: int) -> np.ndarray:
    """Binary (rhomboids x level-k vertices) membership matrix."""
    tiling._check_order(k)
    reg = tiling.registries[k]
    mat = np.zeros((len(tiling.rhomboids), len(reg)), dtype=np.int64)
    for rho in tiling.rhomboids:
        for q in rho.vertices(k):
            mat[rho.id, reg[q]] = 1
    return mat


def co_membership_weight(tiling: RhomboidTiling, q: Sequence[int], q2: Sequence[int]) -> int:
    """Number of maximal rhomboids holding both subsets as vertices."""
    a, b = subset_key(q), subset_key(q2)
    tiling.vertex_id(a)
    tiling.vertex_id(b)
    return sum(1 for rho in tiling.rhomboids if rho.contains(a) and rho.contains(b))
