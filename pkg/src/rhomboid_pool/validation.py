"""Cross-checks of the tiling against the LP oracle, packaged as verdict records."""
from __future__ import annotations

import itertools

import numpy as np

from . import oracle
from .clustering import cluster_matrix
from .errors import GeneralPositionViolation, LPNumericalFailure
from .geometry import PointCloud, validate_general_position
from .tiling import RhomboidTiling, build_tiling, co_membership_weight, slice_tiling

MAX_EXHAUSTIVE_POINTS = 12


def slice_mismatches(cloud: PointCloud, tiling: RhomboidTiling, k: int, edge_rule: str = "nerve") -> dict:
    """Symmetric differences between slice(k) and the LP oracle, as subset lists."""
    sl = slice_tiling(tiling, k, edge_rule)
    oracle_verts = oracle.oracle_vertices(cloud, k)
    result = {
        "missing_vertices": sorted(set(oracle_verts) - set(sl.vertices)),
        "extra_vertices": sorted(set(sl.vertices) - set(oracle_verts)),
    }
    o_edges = {(oracle_verts[i], oracle_verts[j]) for i, j in oracle.oracle_edges(cloud, oracle_verts)}
    s_edges = {(sl.vertices[i], sl.vertices[j]) for i, j in sl.edges}
    result["missing_edges"] = sorted(o_edges - s_edges)
    result["extra_edges"] = sorted(s_edges - o_edges)
    return result


def order1_mismatches(cloud: PointCloud, tiling: RhomboidTiling) -> dict:
    sl = slice_tiling(tiling, 1)
    s_edges = {(sl.vertices[i][0], sl.vertices[j][0]) for i, j in sl.edges}
    brute = oracle.brute_force_delaunay_edges(cloud)
    return {"missing_edges": sorted(brute - s_edges), "extra_edges": sorted(s_edges - brute)}


def recount_mismatches(tiling: RhomboidTiling, k1: int, k2: int) -> list:
    """Entries of the cluster matrix that disagree with a per-pair rhomboid recount."""
    mat = cluster_matrix(tiling, k1, k2).entries
    fine, coarse = tiling.vertices(k1), tiling.vertices(k2)
    bad = []
    for (i, q2), (j, q) in itertools.product(enumerate(coarse), enumerate(fine)):
        w = co_membership_weight(tiling, q, q2)
        if w != mat[i, j]:
            bad.append({"Q": list(q), "Q2": list(q2), "matrix": int(mat[i, j]), "recount": w})
    return bad


def _verdict(check: str, instance: dict, failures, informational=None) -> dict:
    out = {"check": check, "instance": instance, "verdict": "pass" if not failures else "counterexample",
           "details": failures}
    if informational:
        out["informational"] = informational
    return out


def check_cloud(cloud: PointCloud, instance: dict, max_k: int = 5, properties: bool = True) -> list[dict]:
    """Run every applicable check on one cloud and return one verdict per check.

    General-position failures yield a single ``rejected`` verdict instead of
    counterexamples.
    """
    violations = validate_general_position(cloud)
    if violations:
        return [{"check": "general_position", "instance": instance, "verdict": "rejected",
                 "details": [list(v) for v in violations[:20]]}]
    n, d = cloud.n, cloud.dimension
    if n > MAX_EXHAUSTIVE_POINTS:
        return [{"check": "size", "instance": instance, "verdict": "skipped",
                 "details": f"exhaustive checks limited to n <= {MAX_EXHAUSTIVE_POINTS}"}]
    top = n if properties else min(n, max_k)
    try:
        tiling = build_tiling(cloud, top)
    except GeneralPositionViolation as exc:
        return [{"check": "general_position", "instance": instance, "verdict": "rejected",
                 "details": [list(v) for v in exc.violations[:20]]}]
    verdicts = []
    try:
        for k in range(1, min(n, max_k) + 1):
            mm = slice_mismatches(cloud, tiling, k)
            failures = {key: val for key, val in mm.items() if val}
            verdicts.append(_verdict("slice_equivalence", {**instance, "k": k}, failures))
    except LPNumericalFailure as exc:
        verdicts.append({"check": "slice_equivalence", "instance": instance, "verdict": "numerical_failure",
                         "details": str(exc)})
    mm = order1_mismatches(cloud, tiling)
    verdicts.append(_verdict("order1_delaunay", instance, {k: v for k, v in mm.items() if v}))
    if top >= 2:
        verdicts.append(_verdict("matrix_recount", {**instance, "k1": 1, "k2": 2}, recount_mismatches(tiling, 1, 2)))
        failures = []
        for q in tiling.vertices(1):
            for q2 in tiling.vertices(2):
                rep = oracle.check_witness_sphere(cloud, q, q2, tiling)
                failures.extend(rep.counterexamples)
        verdicts.append(_verdict("witness_sphere", {**instance, "k1": 1, "k2": 2}, failures))
    if properties and d == 3:
        for k1, k2 in itertools.combinations(range(1, top + 1), 2):
            rep2 = oracle.check_cluster_coverage(tiling, k1, k2)
            verdicts.append(_verdict("cluster_coverage", {**instance, "k1": k1, "k2": k2},
                                     rep2.counterexamples, rep2.informational))
            if k2 - k1 <= 4:
                rep3 = oracle.check_weight_bounds(tiling, k1, k2)
                verdicts.append(_verdict("weight_bounds", {**instance, "k1": k1, "k2": k2}, rep3.counterexamples))
    return verdicts


def synthetic_clouds(count: int, seed: int, dims=(2, 3), n_range=(6, 10)):
    """Seeded random clouds with n in ``n_range`` (inclusive) and alternating dimension."""
    rng = np.random.default_rng(seed)
    for i in range(count):
        d = dims[i % len(dims)]
        n = int(rng.integers(n_range[0], n_range[1] + 1))
        cloud_seed = int(rng.integers(0, 2**31))
        cloud = PointCloud(np.random.default_rng(cloud_seed).uniform(0.0, 1.0, size=(n, d)))
        yield {"cloud_seed": cloud_seed, "n": n, "d": d}, cloud
