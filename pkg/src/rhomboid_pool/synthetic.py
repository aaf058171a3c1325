"""Seeded synthetic inputs: random clouds, a planar formaldehyde cloud, blob-shape datasets."""
from __future__ import annotations

import numpy as np

from .formats import DatasetRecord
from .geometry import PointCloud

# planar H2CO, angstrom-like units; C sits inside the O-H-H triangle
FORMALDEHYDE = np.array([
    [0.00, 0.00],   # C
    [1.21, 0.00],   # O
    [-0.55, 0.94],  # H
    [-0.52, -0.97],  # H (slightly asymmetric to keep the four points off a common circle)
])


def random_cloud(seed: int, n: int, d: int) -> PointCloud:
    rng = np.random.default_rng(seed)
    return PointCloud(rng.uniform(0.0, 1.0, size=(n, d)))


def formaldehyde_cloud() -> PointCloud:
    return PointCloud(FORMALDEHYDE)


def knn_edges(points: np.ndarray, k: int = 3) -> list[tuple[int, int]]:
    """Symmetrised k-nearest-neighbour edge list."""
    pts = np.asarray(points)
    dist = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=2)
    np.fill_diagonal(dist, np.inf)
    edges = set()
    for i in range(len(pts)):
        for j in np.argsort(dist[i], kind="stable")[:k]:
            edges.add((min(i, int(j)), max(i, int(j))))
    return sorted(edges)


def blob_record(seed: int, label: int, n_range=(10, 16)) -> DatasetRecord:
    """One point cloud: isotropic Gaussian (label 0) or a randomly rotated cigar (label 1).

    Node features are a constant column followed by the centred coordinates.
    """
    rng = np.random.default_rng([seed, label])
    n = int(rng.integers(n_range[0], n_range[1]))
    sigma = np.array([1.0, 1.0, 1.0]) if label == 0 else np.array([2.0, 0.5, 0.5])
    rot, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    pts = (rng.normal(size=(n, 3)) * sigma) @ rot.T
    pts -= pts.mean(axis=0)
    feats = np.hstack([np.ones((n, 1)), pts])
    return DatasetRecord(pts, knn_edges(pts), feats, label)


def blob_dataset(num_graphs: int = 60, seed: int = 0) -> list[DatasetRecord]:
    """Balanced two-class dataset of blob shapes."""
    return [blob_record(seed * 100_003 + i, i % 2) for i in range(num_graphs)]
