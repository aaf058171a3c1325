"""Dense tableau simplex for the witness-point margin LP.

The LP is::

    maximize t   subject to   2 (y - x) . p + t <= |y|^2 - |x|^2

over a free witness ``p`` in R^d and a free margin ``t``.  Writing
``p = p+ - p-`` and ``t = t0 + s+ - s-`` with ``t0`` the smallest right-hand
side makes the origin feasible, so a single phase with slack bases suffices.
Bland's rule keeps the (heavily degenerate) pivots from cycling.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import IterationCapExceeded, LPNumericalFailure

PIVOT_TOL = 1e-12


@dataclass(frozen=True)
class WitnessLP:
    """Constraint rows ``normals . p + t <= bounds`` in R^d."""

    normals: np.ndarray  # (m, d)
    bounds: np.ndarray  # (m,)

    def __post_init__(self):
        normals = np.asarray(self.normals, dtype=np.float64)
        bounds = np.asarray(self.bounds, dtype=np.float64).reshape(-1)
        if normals.ndim != 2 or normals.shape[0] != bounds.shape[0]:
            raise LPNumericalFailure(f"constraint shapes disagree: {normals.shape} vs {bounds.shape}")
        if not (np.all(np.isfinite(normals)) and np.all(np.isfinite(bounds))):
            raise LPNumericalFailure("non-finite LP data")
        object.__setattr__(self, "normals", normals)
        object.__setattr__(self, "bounds", bounds)

    @property
    def dimension(self) -> int:
        return self.normals.shape[1]

    @classmethod
    def from_subsets(cls, points: np.ndarray, *memberships) -> "WitnessLP":
        """Stack the separation constraints of one or more subsets.

        Each membership is a boolean mask over ``points``; for every member
        ``x`` and non-member ``y`` one row demands ``|p-x|^2 + t <= |p-y|^2``.
        """
        points = np.asarray(points, dtype=np.float64)
        sq = np.sum(points ** 2, axis=1)
        normals, bounds = [], []
        for mask in memberships:
            mask = np.asarray(mask, dtype=bool)
            xs, ys = np.flatnonzero(mask), np.flatnonzero(~mask)
            if len(xs) == 0 or len(ys) == 0:
                continue
            xi, yi = np.repeat(xs, len(ys)), np.tile(ys, len(xs))
            normals.append(2.0 * (points[yi] - points[xi]))
            bounds.append(sq[yi] - sq[xi])
        d = points.shape[1]
        if not normals:
            return cls(np.zeros((0, d)), np.zeros(0))
        return cls(np.vstack(normals), np.concatenate(bounds))


def lp_maximize_margin(lp: WitnessLP) -> tuple[float, np.ndarray | None]:
    """Return ``(t*, p*)``; ``t* = inf`` (and ``p* = None``) when unbounded."""
    m, d = lp.normals.shape
    if m == 0:
        return np.inf, None

    t0 = float(lp.bounds.min())
    nvar = 2 * d + 2
    # columns: p+ (d), p- (d), s+, s-, slacks (m), rhs
    tab = np.zeros((m + 1, nvar + m + 1))
    tab[:m, :d] = lp.normals
    tab[:m, d:2 * d] = -lp.normals
    tab[:m, 2 * d] = 1.0
    tab[:m, 2 * d + 1] = -1.0
    tab[:m, nvar:nvar + m] = np.eye(m)
    tab[:m, -1] = lp.bounds - t0
    # objective row holds reduced costs of "maximize s+ - s-" as -c
    tab[m, 2 * d] = -1.0
    tab[m, 2 * d + 1] = 1.0
    basis = np.arange(nvar, nvar + m)

    cap = 10 * (m + nvar)
    for _ in range(cap):
        obj = tab[m, :-1]
        candidates = np.flatnonzero(obj < -PIVOT_TOL)
        if len(candidates) == 0:
            break
        col = candidates[0]
        column = tab[:m, col]
        positive = column > PIVOT_TOL
        if not positive.any():
            return np.inf, None
        ratios = np.full(m, np.inf)
        ratios[positive] = tab[:m, -1][positive] / column[positive]
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + PIVOT_TOL * max(1.0, abs(best)))
        row = ties[np.argmin(basis[ties])]
        pivot_row = tab[row] / tab[row, col]
        tab -= np.outer(tab[:, col], pivot_row)
        tab[row] = pivot_row
        basis[row] = col
    else:
        raise IterationCapExceeded(f"simplex did not converge in {cap} pivots")

    values = np.zeros(nvar + m)
    values[basis] = tab[:m, -1]
    witness = values[:d] - values[d:2 * d]
    margin = t0 + values[2 * d] - values[2 * d + 1]
    if not np.isfinite(margin):
        raise LPNumericalFailure("simplex produced a non-finite optimum")
    return float(margin), witness
