"""Brute-force ground truth for the tiling and the clustering properties.

Nothing in here reads the tiling to decide vertex- or edge-hood: subsets are
tested directly with the witness LP over the raw coordinates.  The property
checkers do consume a tiling (they are statements about it) but verify each
claim by independent means where one exists.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .geometry import PointCloud, Sphere, classify, subset_key
from .lp import WitnessLP, lp_maximize_margin
from .tiling import RhomboidTiling, co_membership_weight, incidence_matrix

EPS_LP = 1e-9


@dataclass
class PropertyReport:
    name: str
    instance: dict
    counterexamples: list = field(default_factory=list)
    informational: list = field(default_factory=list)

    @property
    def verdict(self) -> str:
        return "pass" if not self.counterexamples else "counterexample"

    @property
    def passed(self) -> bool:
        return not self.counterexamples

    def to_dict(self) -> dict[str, Any]:
        return {
            "property": self.name,
            "instance": self.instance,
            "verdict": self.verdict,
            "counterexamples": self.counterexamples,
            "informational": self.informational,
        }


def _mask(n: int, q: Sequence[int]) -> np.ndarray:
    mask = np.zeros(n, dtype=bool)
    mask[list(q)] = True
    return mask


def margin(cloud: PointCloud, *subsets: Sequence[int]) -> float:
    """Optimal squared-distance margin of the joint witness LP, in cloud units."""
    unit = cloud.normalized()
    scale = cloud.diameter if cloud.diameter > 0 else 1.0
    lp = WitnessLP.from_subsets(unit, *(_mask(cloud.n, q) for q in subsets))
    t, _ = lp_maximize_margin(lp)
    return t * scale ** 2


def separable(cloud: PointCloud, q: Sequence[int]) -> bool:
    """True when some sphere strictly separates ``q`` from the rest of the cloud."""
    key = subset_key(q)
    if not 1 <= len(key) <= cloud.n:
        raise ValueError(f"subset size {len(key)} outside 1..{cloud.n}")
    return margin(cloud, key) > EPS_LP * cloud.diameter ** 2


def cells_intersect(cloud: PointCloud, q1: Sequence[int], q2: Sequence[int]) -> bool:
    """True when the closed order-k cells of ``q1`` and ``q2`` share a point."""
    a, b = subset_key(q1), subset_key(q2)
    if len(a) != len(b):
        raise ValueError("cells_intersect needs subsets of equal size")
    return margin(cloud, a, b) > -EPS_LP * cloud.diameter ** 2


def oracle_vertices(cloud: PointCloud, k: int) -> list[tuple[int, ...]]:
    return [q for q in itertools.combinations(range(cloud.n), k) if separable(cloud, q)]


def oracle_edges(cloud: PointCloud, vertices: Sequence[Sequence[int]], prefilter: bool = True) -> set:
    """Index pairs (into ``vertices``) whose cells intersect.

    With ``prefilter`` pairs whose symmetric difference exceeds d+1 are
    skipped: a common point of both cells is the centre of a sphere carrying
    the whole symmetric difference, and general position caps that at d+1.
    """
    d = cloud.dimension
    sets = [frozenset(q) for q in vertices]
    edges = set()
    for i, j in itertools.combinations(range(len(vertices)), 2):
        if prefilter and len(sets[i] ^ sets[j]) > d + 1:
            continue
        if cells_intersect(cloud, vertices[i], vertices[j]):
            edges.add((i, j))
    return edges


def brute_force_delaunay_edges(cloud: PointCloud) -> set:
    """Classical Delaunay edges by exhaustive empty-circumsphere testing."""
    from .geometry import circumsphere

    edges = set()
    d = cloud.dimension
    for simplex in itertools.combinations(range(cloud.n), d + 1):
        part = classify(cloud, circumsphere(cloud, simplex))
        if not part.inside:
            edges.update(itertools.combinations(simplex, 2))
    return edges


def _witness_spheres(cloud: PointCloud):
    from .geometry import circumsphere

    for simplex in itertools.combinations(range(cloud.n), cloud.dimension + 1):
        sphere = circumsphere(cloud, simplex)
        yield sphere, classify(cloud, sphere)


def check_witness_sphere(cloud: PointCloud, q: Sequence[int], q2: Sequence[int], tiling: RhomboidTiling) -> PropertyReport:
    """Co-membership in a maximal rhomboid iff a witness sphere exists.

    The witness side scans every circumsphere of d+1 points afresh and checks
    In(S) <= Q & Q' and Q | Q' <= In(S) + On(S).
    """
    a, b = subset_key(q), subset_key(q2)
    report = PropertyReport("witness_sphere", {"Q": list(a), "Q2": list(b)})
    if not len(a) < len(b):
        raise ValueError("the witness check compares a finer subset with a strictly larger one")
    weight = co_membership_weight(tiling, a, b)
    sa, sb = set(a), set(b)
    witness = None
    for sphere, part in _witness_spheres(cloud):
        inside, on = set(part.inside), set(part.on)
        if inside <= (sa & sb) and (sa | sb) <= inside | on:
            witness = sphere
            break
    if (weight > 0) != (witness is not None):
        report.counterexamples.append({
            "weight": weight,
            "witness": None if witness is None else {"center": list(witness.center), "radius": witness.radius},
        })
    return report


def _cluster(tiling: RhomboidTiling, k1: int, k2: int):
    fine, coarse = tiling.vertices(k1), tiling.vertices(k2)
    mat = incidence_matrix(tiling, k2).T @ incidence_matrix(tiling, k1)
    return fine, coarse, mat


def check_cluster_coverage(tiling: RhomboidTiling, k1: int, k2: int) -> PropertyReport:
    """Step-size cases for clouds in R^3."""
    if tiling.cloud.dimension != 3:
        raise ValueError("cluster coverage is only established for clouds in R^3")
    if not 1 <= k1 < k2 <= tiling.max_order:
        raise ValueError(f"need 1 <= k1 < k2 <= {tiling.max_order}")
    delta = k2 - k1
    report = PropertyReport("cluster_coverage", {"k1": k1, "k2": k2, "n": tiling.cloud.n})
    fine, coarse, mat = _cluster(tiling, k1, k2)
    if delta > 4:
        for i, j in zip(*np.nonzero(mat)):
            report.counterexamples.append({"case": 1, "Q": list(fine[j]), "Q2": list(coarse[i]), "weight": int(mat[i, j])})
        return report
    empty_columns = [list(fine[j]) for j in np.flatnonzero(mat.sum(axis=0) == 0)]
    if delta <= 2:
        # the statement quantifies over k2 <= |X|
        if k2 <= tiling.cloud.n:
            report.counterexamples.extend({"case": 2, "Q": q} for q in empty_columns)
        if delta == 1:
            for i, q2 in enumerate(coarse):
                for j, q in enumerate(fine):
                    if set(q) < set(q2) and mat[i, j] <= 0:
                        report.counterexamples.append({"case": 3, "Q": list(q), "Q2": list(q2)})
    else:
        report.informational.extend({"unclustered": q} for q in empty_columns)
    return report


def check_weight_bounds(tiling: RhomboidTiling, k1: int, k2: int) -> PropertyReport:
    """Weight bounds for clouds in R^3."""
    if tiling.cloud.dimension != 3:
        raise ValueError("weight bounds are only established for clouds in R^3")
    if not 1 <= k1 < k2 <= tiling.max_order:
        raise ValueError(f"need 1 <= k1 < k2 <= {tiling.max_order}")
    delta = k2 - k1
    report = PropertyReport("weight_bounds", {"k1": k1, "k2": k2, "n": tiling.cloud.n})
    fine, coarse, mat = _cluster(tiling, k1, k2)
    fine_sets = [set(q) for q in fine]
    for i, q2 in enumerate(coarse):
        s2 = set(q2)
        members = np.flatnonzero(mat[i])
        for j in members:
            w = int(mat[i, j])
            subset = fine_sets[j] <= s2
            if 3 <= delta <= 4 and not (subset and w <= 5 - delta):
                report.counterexamples.append({"item": 1, "Q": list(fine[j]), "Q2": list(q2), "weight": w})
            if not subset and w > 3 - delta:
                report.counterexamples.append({"item": 2, "Q": list(fine[j]), "Q2": list(q2), "weight": w})
        for j1 in members:
            for j2 in members:
                inter1, inter2 = fine_sets[j1] & s2, fine_sets[j2] & s2
                if inter1 < inter2 and mat[i, j1] > mat[i, j2]:
                    report.counterexamples.append({
                        "item": 3, "Q1": list(fine[j1]), "Q2": list(fine[j2]), "Qc": list(q2),
                        "weights": [int(mat[i, j1]), int(mat[i, j2])],
                    })
    return report
