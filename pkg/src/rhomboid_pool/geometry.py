"""Point clouds, circumspheres and the general-position machinery.

Everything here works in 64-bit floats.  Tolerances are relative to the
bounding-box diagonal of the cloud (``PointCloud.diameter``).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import DegenerateSimplex, GeometryError, JitterFailed

TAU_ON = 1e-9
TAU_GP = 1e-9
JITTER_ROUNDS = 8

SubsetKey = tuple  # strictly increasing tuple of point indices


def subset_key(indices: Iterable[int]) -> tuple[int, ...]:
    key = tuple(sorted(int(i) for i in indices))
    if len(set(key)) != len(key):
        raise ValueError(f"duplicate index in subset {key}")
    return key


@dataclass(frozen=True, eq=False)
class PointCloud:
    points: np.ndarray
    diameter: float = field(init=False)

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] not in (2, 3):
            raise GeometryError(f"expected an n x d array with d in {{2, 3}}, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise GeometryError("point coordinates must be finite")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        if len(pts):
            diam = float(np.linalg.norm(pts.max(axis=0) - pts.min(axis=0)))
        else:
            diam = 0.0
        object.__setattr__(self, "diameter", diam)

    @property
    def dimension(self) -> int:
        return self.points.shape[1]

    @property
    def n(self) -> int:
        return self.points.shape[0]

    def __len__(self):
        return self.n

    def __eq__(self, other):
        return isinstance(other, PointCloud) and np.array_equal(self.points, other.points)

    def __hash__(self):
        return hash(self.points.tobytes())

    def normalized(self) -> np.ndarray:
        """Points centred on the bounding-box midpoint and scaled to unit diameter."""
        if self.n == 0:
            return self.points.copy()
        mid = 0.5 * (self.points.max(axis=0) + self.points.min(axis=0))
        scale = self.diameter if self.diameter > 0 else 1.0
        return (self.points - mid) / scale


@dataclass(frozen=True)
class Sphere:
    center: tuple[float, ...]
    radius: float

    def __post_init__(self):
        if not np.isfinite(self.radius) or self.radius < 0:
            raise GeometryError(f"invalid radius {self.radius}")


class SpherePartition(NamedTuple):
    inside: tuple[int, ...]
    on: tuple[int, ...]
    outside: tuple[int, ...]


def circumsphere(cloud: PointCloud, simplex: Sequence[int]) -> Sphere:
    """Sphere through the d+1 points indexed by ``simplex``.

    The centre solves ``2 (x_i - x_0) . c = |x_i|^2 - |x_0|^2`` in coordinates
    normalised to unit diameter, so the singularity test is scale free.
    """
    key = subset_key(simplex)
    d = cloud.dimension
    if len(key) != d + 1:
        raise DegenerateSimplex(f"a circumsphere in R^{d} needs {d + 1} points, got {len(key)}")
    centers, radii, dets = _circumspheres(cloud, np.array([key]))
    if abs(dets[0]) <= TAU_GP:
        raise DegenerateSimplex(f"points {key} are affinely dependent")
    return Sphere(tuple(float(c) for c in centers[0]), float(radii[0]))


def _circumspheres(cloud: PointCloud, simplices: np.ndarray):
    """Vectorised circumspheres for an (m, d+1) index array.

    Returns centres and radii in original coordinates plus the affine
    determinant of each simplex measured in unit-diameter coordinates.
    Singular rows get NaN centres.
    """
    pts = cloud.points
    scale = cloud.diameter if cloud.diameter > 0 else 1.0
    mid = 0.5 * (pts.max(axis=0) + pts.min(axis=0))
    unit = (pts - mid) / scale
    simp = unit[simplices]  # (m, d+1, d)
    base = simp[:, :1, :]
    diff = simp[:, 1:, :] - base  # (m, d, d)
    rhs = 0.5 * (np.sum(simp[:, 1:, :] ** 2, axis=2) - np.sum(base ** 2, axis=2))
    dets = np.linalg.det(diff)
    ok = np.abs(dets) > TAU_GP
    centers = np.full((len(simplices), cloud.dimension), np.nan)
    if ok.any():
        centers[ok] = np.linalg.solve(diff[ok], rhs[ok][..., None])[..., 0]
    radii_unit = np.linalg.norm(simp - centers[:, None, :], axis=2).mean(axis=1)
    return centers * scale + mid, radii_unit * scale, dets


def classify(cloud: PointCloud, sphere: Sphere) -> SpherePartition:
    dist = np.linalg.norm(cloud.points - np.asarray(sphere.center), axis=1)
    tol = TAU_ON * cloud.diameter
    on_mask = np.abs(dist - sphere.radius) <= tol
    in_mask = (dist < sphere.radius - tol) & ~on_mask
    out_mask = ~(on_mask | in_mask)
    return SpherePartition(
        tuple(np.flatnonzero(in_mask).tolist()),
        tuple(np.flatnonzero(on_mask).tolist()),
        tuple(np.flatnonzero(out_mask).tolist()),
    )


def _combinations_array(n: int, r: int, chunk: int = 200_000):
    it = itertools.combinations(range(n), r)
    while True:
        block = list(itertools.islice(it, chunk))
        if not block:
            return
        yield np.array(block, dtype=np.intp)


def validate_general_position(cloud: PointCloud) -> list[tuple[int, ...]]:
    """List every subset that breaks general position (empty list when valid).

    Reports duplicate pairs, affinely dependent (d+1)-subsets and co-spherical
    (d+2)-subsets, each measured in unit-diameter coordinates against TAU_GP.
    """
    n, d = cloud.n, cloud.dimension
    unit = cloud.normalized()
    report: list[tuple[int, ...]] = []

    if n >= 2:
        for idx in _combinations_array(n, 2):
            gap = np.linalg.norm(unit[idx[:, 0]] - unit[idx[:, 1]], axis=1)
            report.extend(map(tuple, idx[gap <= TAU_GP].tolist()))

    if n >= d + 1:
        for idx in _combinations_array(n, d + 1):
            simp = unit[idx]
            det = np.linalg.det(simp[:, 1:, :] - simp[:, :1, :])
            report.extend(map(tuple, idx[np.abs(det) <= TAU_GP].tolist()))

    if n >= d + 2:
        lifted = np.hstack([unit, np.sum(unit ** 2, axis=1, keepdims=True)])
        for idx in _combinations_array(n, d + 2):
            simp = lifted[idx]
            det = np.linalg.det(simp[:, 1:, :] - simp[:, :1, :])
            report.extend(map(tuple, idx[np.abs(det) <= TAU_GP].tolist()))
    return report


def jitter(cloud: PointCloud, seed: int, magnitude: float) -> PointCloud:
    """Perturb every coordinate until the cloud is in general position.

    Offsets in [-1, 1] are drawn once per (seed, index, axis); round ``r``
    scales them by ``magnitude * 2**r`` and adds them to the original points.
    """
    if not magnitude > 0:
        raise ValueError("jitter magnitude must be positive")
    n, d = cloud.n, cloud.dimension
    offsets = np.empty((n, d))
    for i in range(n):
        for axis in range(d):
            rng = np.random.default_rng([int(seed), i, axis])
            offsets[i, axis] = rng.uniform(-1.0, 1.0)
    scale = float(magnitude)
    for _ in range(JITTER_ROUNDS):
        candidate = PointCloud(cloud.points + scale * offsets)
        if not validate_general_position(candidate):
            return candidate
        scale *= 2.0
    raise JitterFailed(f"cloud still degenerate after {JITTER_ROUNDS} jitter rounds (last magnitude {scale / 2:g})")
