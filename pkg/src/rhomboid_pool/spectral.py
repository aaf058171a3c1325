"""Coordinates for graphs without geometry: normalized-Laplacian eigenvectors."""
from __future__ import annotations

import numpy as np

from .errors import DisconnectedGraph, TooFewEigenvectors

ZERO_EIGENVALUE_TOL = 1e-8


def normalized_laplacian(adj: np.ndarray) -> np.ndarray:
    """I - D^-1/2 A D^-1/2; isolated vertices get a zero row and column."""
    adj = np.asarray(adj, dtype=np.float64)
    deg = adj.sum(axis=1)
    inv_sqrt = np.zeros_like(deg)
    nz = deg > 0
    inv_sqrt[nz] = 1.0 / np.sqrt(deg[nz])
    lap = -inv_sqrt[:, None] * adj * inv_sqrt[None, :]
    lap[np.diag_indices_from(lap)] += nz.astype(np.float64)
    return lap


def jacobi_eigh(a: np.ndarray, tol: float = 1e-14, max_sweeps: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi rotations for a symmetric matrix.

    Returns eigenvalues in ascending order and eigenvectors as columns.
    """
    a = np.array(a, dtype=np.float64)
    n = a.shape[0]
    v = np.eye(n)
    scale = max(np.abs(a).max(), 1.0) if n else 1.0
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.triu(a, 1) ** 2))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0)) if theta != 0 else 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rot_p, rot_q = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * rot_p - s * rot_q
                a[:, q] = s * rot_p + c * rot_q
                rot_p, rot_q = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * rot_p - s * rot_q
                a[q, :] = s * rot_p + c * rot_q
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    vals = np.diag(a).copy()
    order = np.argsort(vals, kind="stable")
    return vals[order], v[:, order]


def _fix_signs(vecs: np.ndarray) -> np.ndarray:
    out = vecs.copy()
    for j in range(out.shape[1]):
        nz = np.flatnonzero(np.abs(out[:, j]) > ZERO_EIGENVALUE_TOL)
        if len(nz) and out[nz[0], j] < 0:
            out[:, j] = -out[:, j]
    return out


def spectral_embed(adj: np.ndarray, dim: int = 3, pad: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Embed a connected graph with the eigenvectors of its ``dim`` smallest non-zero eigenvalues.

    Returns ``(coords, eigenvalues)``.  Small graphs with fewer than ``dim``
    non-zero eigenvalues get zero columns (and zero eigenvalues) when ``pad``.
    """
    adj = np.asarray(adj, dtype=np.float64)
    n = adj.shape[0]
    vals, vecs = jacobi_eigh(normalized_laplacian(adj))
    zero = np.abs(vals) <= ZERO_EIGENVALUE_TOL
    if zero.sum() > 1:
        raise DisconnectedGraph(f"normalized Laplacian has {int(zero.sum())} zero eigenvalues")
    keep = np.flatnonzero(~zero)[:dim]
    if len(keep) < dim and not pad:
        raise TooFewEigenvectors(f"only {len(keep)} non-zero eigenvalues for a {n}-vertex graph")
    coords = np.zeros((n, dim))
    values = np.zeros(dim)
    coords[:, :len(keep)] = _fix_signs(vecs[:, keep])
    values[:len(keep)] = vals[keep]
    return coords, values
