"""End-to-end acceptance criteria, one test each.

Every test records a one-line verdict; ``conftest.py`` prints them in the
terminal summary so a plain ``pytest`` run shows the scoreboard.
"""
import itertools
import time
import warnings

import numpy as np
import pytest

from rhomboid_pool import oracle
from rhomboid_pool.clustering import HierarchySchedule, LevelGraph, build_hierarchy
from rhomboid_pool.geometry import PointCloud
from rhomboid_pool.model import init_params, loss_and_grad
from rhomboid_pool.spectral import jacobi_eigh, normalized_laplacian, spectral_embed
from rhomboid_pool.synthetic import FORMALDEHYDE, blob_dataset, formaldehyde_cloud, random_cloud
from rhomboid_pool.tiling import build_tiling, rhomboid_lifted_vertices
from rhomboid_pool.training import ModelConfig, evaluate, split_indices, train
from rhomboid_pool.validation import order1_mismatches, recount_mismatches, slice_mismatches, synthetic_clouds

RESULTS: dict[int, str] = {}

CLOUD_SEED = 2024
SPACE_SEED = 7


def record(number, ok, detail, warn_only=False):
    state = "PASS" if ok else ("WARN" if warn_only else "FAIL")
    RESULTS[number] = f"criterion {number:2d}: {state}  {detail}"


@pytest.fixture(scope="module")
def clouds50():
    """The 50 seeded clouds with tilings up to order min(n, 5)."""
    out = []
    for inst, cloud in synthetic_clouds(50, CLOUD_SEED, dims=(2, 3), n_range=(6, 10)):
        out.append((inst, cloud, build_tiling(cloud, min(cloud.n, 5))))
    return out


@pytest.fixture(scope="module")
def clouds3d():
    """20 clouds in R^3 with complete tilings (K = n)."""
    return [(inst, cloud, build_tiling(cloud, cloud.n))
            for inst, cloud in synthetic_clouds(20, SPACE_SEED, dims=(3,), n_range=(6, 10))]


def test_criterion_01_slice_oracle_equivalence():
    start = time.perf_counter()
    mismatched, checked = [], 0
    for inst, cloud in synthetic_clouds(50, CLOUD_SEED, dims=(2, 3), n_range=(6, 10)):
        tiling = build_tiling(cloud, min(cloud.n, 5))
        for k in range(1, min(cloud.n, 5) + 1):
            checked += 1
            mm = slice_mismatches(cloud, tiling, k)
            if any(mm.values()):
                mismatched.append((inst, k, {key: len(v) for key, v in mm.items()}))
    elapsed = time.perf_counter() - start
    ok = not mismatched and elapsed < 120
    record(1, ok, f"{checked} slices on 50 clouds, {len(mismatched)} mismatched, {elapsed:.1f}s (limit 120s)")
    assert not mismatched, mismatched[:3]
    assert elapsed < 120


def test_criterion_02_order1_delaunay(clouds50):
    bad = []
    for inst, cloud, tiling in clouds50:
        mm = order1_mismatches(cloud, tiling)
        if mm["missing_edges"] or mm["extra_edges"]:
            bad.append((inst, mm))
    record(2, not bad, f"{len(clouds50)} clouds, {len(bad)} with order-1 edge differences")
    assert not bad, bad[:3]


def test_criterion_03_cluster_coverage(clouds3d):
    violations = {1: 0, 2: 0, 5: 0}
    pairs = {1: 0, 2: 0, 5: 0}
    examples = []
    for inst, cloud, tiling in clouds3d:
        for k1, k2 in itertools.combinations(range(1, cloud.n + 1), 2):
            delta = k2 - k1
            if delta not in (1, 2, 5):
                continue
            rep = oracle.check_cluster_coverage(tiling, k1, k2)
            pairs[delta] += 1
            violations[delta] += len(rep.counterexamples)
            if rep.counterexamples and len(examples) < 3:
                examples.append((inst["cloud_seed"], k1, k2, rep.counterexamples[0]))
    total = sum(violations.values())
    detail = ", ".join(f"delta={d}: {violations[d]} violations over {pairs[d]} pairs" for d in (1, 2, 5))
    record(3, total == 0, detail)
    assert total == 0, f"{detail}; first: {examples}"


def test_criterion_04_weight_bounds(clouds3d):
    count, checked = 0, 0
    first = None
    for inst, cloud, tiling in clouds3d:
        for k1, k2 in itertools.combinations(range(1, cloud.n + 1), 2):
            if k2 - k1 > 4:
                continue
            checked += 1
            rep = oracle.check_weight_bounds(tiling, k1, k2)
            count += len(rep.counterexamples)
            if rep.counterexamples and first is None:
                first = (inst, k1, k2, rep.counterexamples[0])
    record(4, count == 0, f"{checked} level pairs on {len(clouds3d)} clouds, {count} violations")
    assert count == 0, first


def test_criterion_05_matrix_product_identity(clouds50, clouds3d):
    pairs, bad = 0, []
    for inst, cloud, tiling in clouds50 + clouds3d[:5]:
        top = min(tiling.max_order, 5)
        for k1, k2 in itertools.combinations(range(1, top + 1), 2):
            pairs += 1
            mm = recount_mismatches(tiling, k1, k2)
            if mm:
                bad.append((inst, k1, k2, mm[0]))
    record(5, not bad, f"{pairs} matrices checked entrywise, {len(bad)} mismatched")
    assert not bad, bad[:3]


def test_criterion_06_formaldehyde_fixture():
    cloud = formaldehyde_cloud()
    tiling = build_tiling(cloud, 4)
    problems = []
    if len(tiling.rhomboids) != 4:
        problems.append(f"{len(tiling.rhomboids)} rhomboids")
    for rho in tiling.rhomboids:
        if [len(rho.vertices(k)) for k in rho.levels] != [1, 3, 3, 1]:
            problems.append(f"rhomboid {rho.id} level counts")
        for q, y in rhomboid_lifted_vertices(cloud, rho):
            expected = tuple(FORMALDEHYDE[list(q)].sum(axis=0)) + (-float(len(q)),) if q else (0.0, 0.0, 0.0)
            if y != tuple(float(v) for v in expected):
                problems.append(f"corner {q}")
    # the two-point corner written out coordinate by coordinate
    (a1, b1), (a2, b2) = FORMALDEHYDE[0], FORMALDEHYDE[1]
    corner = dict(rhomboid_lifted_vertices(cloud, tiling.rhomboids[0]))[(0, 1)]
    if corner != (a1 + a2, b1 + b2, -2.0):
        problems.append("y_{v1,v2}")
    record(6, not problems, "4 rhomboids, 1/3/3/1 levels, exact lifted corners" if not problems else "; ".join(problems))
    assert not problems


def _relative_errors(batch, params, wd, dropout):
    _, grads = loss_and_grad(batch, params, wd, dropout, 0, 0)
    worst = {}
    for name, value in params.items():
        flat = value.reshape(-1)
        num = np.zeros_like(flat)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + 1e-5
            up = loss_and_grad(batch, params, wd, dropout, 0, 0)[0]
            flat[i] = orig - 1e-5
            down = loss_and_grad(batch, params, wd, dropout, 0, 0)[0]
            flat[i] = orig
            num[i] = (up - down) / 2e-5
        ana = grads[name].reshape(-1)
        # relative error of each named parameter tensor, max-norm
        scale = max(np.abs(num).max(), np.abs(ana).max(), 1e-12)
        worst[name] = float(np.abs(num - ana).max() / scale)
    return worst


def test_criterion_07_gradients():
    worst_overall, where = 0.0, None
    for inst in range(10):
        rng = np.random.default_rng([inst, 77])
        d = 2 + inst % 2
        n = int(rng.integers(6, 10))
        layers, step = (1 + inst % 3), (1 + inst % 2)
        cloud = random_cloud(1000 + inst, n, d)
        hier = build_hierarchy(cloud, None, HierarchySchedule(step, layers))
        in_dim, classes = 3, 2 + inst % 2
        params = init_params(in_dim, 6, layers, classes, inst)
        for key in params:
            if key.endswith(".eps"):
                params[key] = np.asarray(rng.uniform(-0.4, 0.4))
        batch = [(hier, rng.normal(size=(n, in_dim)), int(rng.integers(classes))) for _ in range(2)]
        for name, err in _relative_errors(batch, params, 1e-3, 0.5).items():
            if err > worst_overall:
                worst_overall, where = err, (inst, name)
    ok = worst_overall <= 1e-4
    record(7, ok, f"10 instances, max relative error {worst_overall:.2e} at {where} (limit 1e-4)")
    assert ok


def _blob_samples():
    samples = []
    for rec in blob_dataset(60, seed=0):
        g = LevelGraph.from_edges(rec.num_nodes, rec.edges)
        samples.append((build_hierarchy(PointCloud(rec.coords), g, HierarchySchedule()), rec.features, rec.label))
    return samples


def test_criterion_08_end_to_end_training():
    start = time.perf_counter()
    samples = _blob_samples()
    cfg = ModelConfig(epochs=300)
    tr, te = split_indices(len(samples), cfg.test_fraction, cfg.seed)
    train_set, test_set = [samples[i] for i in tr], [samples[i] for i in te]
    params, history = train(train_set, cfg)
    train_acc, test_acc = evaluate(train_set, params), evaluate(test_set, params)
    elapsed = time.perf_counter() - start
    params2, history2 = train(train_set, cfg)
    deterministic = [h.loss for h in history] == [h.loss for h in history2] and \
        all(np.array_equal(params[k], params2[k]) for k in params)
    ok = train_acc >= 0.95 and test_acc >= 0.9 and deterministic and elapsed < 300
    record(8, ok, f"train {train_acc:.3f} (>=0.95), held-out {test_acc:.3f} (>=0.9), "
                  f"deterministic={deterministic}, {elapsed:.1f}s per run (limit 300s)")
    assert ok


def _median_build_time(n, reps=3):
    times = []
    for r in range(reps):
        cloud = random_cloud(500 + r, n, 3)
        start = time.perf_counter()
        build_tiling(cloud, 3)
        times.append(time.perf_counter() - start)
    return float(np.median(times))


def test_criterion_09_scaling_soft():
    small, large = _median_build_time(40), _median_build_time(80)
    ratio = large / small
    ok = ratio <= 6
    record(9, ok, f"K=3 d=3 median build n=40 {small:.3f}s, n=80 {large:.3f}s, ratio {ratio:.2f} (<= 6, warn-only)",
           warn_only=True)
    if not ok:
        warnings.warn(f"build-time ratio {ratio:.2f} exceeds 6")


def test_criterion_10_spectral():
    vals, _ = jacobi_eigh(normalized_laplacian(np.array([[0.0, 1.0], [1.0, 0.0]])))
    k2_ok = np.allclose(vals, [0.0, 2.0], atol=1e-10, rtol=0)
    worst_res, worst_orth = 0.0, 0.0
    rng = np.random.default_rng(10)
    for trial in range(10):
        n = int(rng.integers(4, 16))
        adj = np.zeros((n, n))
        for i in range(1, n):  # random spanning tree keeps the graph connected
            j = int(rng.integers(i))
            adj[i, j] = adj[j, i] = 1
        for _ in range(n):
            i, j = rng.integers(n, size=2)
            if i != j:
                adj[i, j] = adj[j, i] = 1
        lap = normalized_laplacian(adj)
        vals, vecs = jacobi_eigh(lap)
        worst_res = max(worst_res, float(np.abs(lap @ vecs - vecs * vals).max()))
        worst_orth = max(worst_orth, float(np.abs(vecs.T @ vecs - np.eye(n)).max()))
        coords, evals = spectral_embed(adj)
        worst_res = max(worst_res, float(np.abs(lap @ coords - coords * evals).max()))
        worst_orth = max(worst_orth, float(np.abs(coords.T @ coords - np.eye(3)).max()))
    ok = k2_ok and worst_res <= 1e-8 and worst_orth <= 1e-8
    record(10, ok, f"K2 spectrum {{0, 2}} ok={k2_ok}, "
                   f"max residual {worst_res:.1e}, max orthonormality error {worst_orth:.1e} (limits 1e-8)")
    assert ok
