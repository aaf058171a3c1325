"""Build / validate / train / eval / export orchestration over dataset files.

A build directory looks like::

    manifest.json
    records/0000/tiling.jsonl
    records/0000/hierarchy.npz
    ...
"""
from __future__ import annotations

import json
import logging
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from . import __version__
from .clustering import HierarchySchedule, LevelGraph, PoolingHierarchy, build_hierarchy, cluster_matrix
from .errors import (GeneralPositionViolation, RhomboidPoolError, TooFewPoints, UnknownArtifact)
from .formats import (DatasetRecord, file_digest, load_dataset, read_checkpoint, read_tiling, write_checkpoint,
                      write_embedding, write_graph, write_matrix, write_report, write_tiling)
from .geometry import PointCloud, jitter, validate_general_position
from .spectral import spectral_embed
from .tiling import build_tiling
from .training import ModelConfig, evaluate, repeated_runs, split_indices
from .validation import check_cloud, synthetic_clouds

log = logging.getLogger(__name__)

JITTER_FRACTION = 1e-6
EXPORT_KINDS = ("tiling", "matrices", "graphs", "embedding")


@dataclass
class BuiltRecord:
    index: int
    coords: np.ndarray
    hierarchy: PoolingHierarchy
    features: np.ndarray
    label: int
    tiling: object = None
    timings: dict = field(default_factory=dict)
    jittered: bool = False
    embedded: bool = False


def adjacency_of(record: DatasetRecord) -> np.ndarray:
    return LevelGraph.from_edges(record.num_nodes, record.edges).adjacency


def prepare_cloud(record: DatasetRecord, allow_jitter: bool = False, seed: int = 0) -> tuple[PointCloud, bool, bool]:
    """Coordinates for a record, embedded spectrally if absent and optionally jittered.

    Returns ``(cloud, embedded, jittered)``.
    """
    embedded = record.coords is None
    coords = spectral_embed(adjacency_of(record))[0] if embedded else record.coords
    cloud = PointCloud(coords)
    violations = validate_general_position(cloud)
    if not violations:
        return cloud, embedded, False
    if not allow_jitter:
        raise GeneralPositionViolation(f"{len(violations)} general-position violations", violations)
    magnitude = JITTER_FRACTION * (cloud.diameter if cloud.diameter > 0 else 1.0)
    return jitter(cloud, seed, magnitude), embedded, True


def build_record(index: int, record: DatasetRecord, config: ModelConfig, allow_jitter: bool = False) -> BuiltRecord:
    timings = {}
    start = time.perf_counter()
    cloud, embedded, jittered = prepare_cloud(record, allow_jitter, seed=config.seed + index)
    timings["prepare"] = time.perf_counter() - start
    schedule = HierarchySchedule(config.step, config.num_pooling_layers)
    g_ini = LevelGraph.from_edges(record.num_nodes, record.edges)
    start = time.perf_counter()
    try:
        tiling = build_tiling(cloud, schedule.max_order)
    except TooFewPoints:
        tiling = None
    timings["tiling"] = time.perf_counter() - start
    start = time.perf_counter()
    hierarchy = build_hierarchy(cloud, g_ini, schedule, config.graph_kind, config.connect_overlaps,
                                config.edge_rule, tiling=tiling)
    timings["hierarchy"] = time.perf_counter() - start
    return BuiltRecord(index, cloud.points, hierarchy, record.features, record.label, tiling, timings,
                       jittered, embedded)


def save_hierarchy(hierarchy: PoolingHierarchy, path, features, label, coords):
    arrays = {"features": np.asarray(features, dtype=np.float64), "coords": np.asarray(coords)}
    for l, mat in enumerate(hierarchy.matrices):
        arrays[f"matrix_{l}"] = mat
    for l, g in enumerate(hierarchy.graphs):
        arrays[f"adjacency_{l}"] = g.adjacency
    meta = {
        "label": int(label), "step": hierarchy.schedule.step, "layers": hierarchy.schedule.layers,
        "orders": [g.order for g in hierarchy.graphs], "kinds": [g.kind for g in hierarchy.graphs],
        "vertices": [[list(q) for q in level] for level in hierarchy.vertices],
    }
    arrays["meta"] = np.array(json.dumps(meta))
    np.savez(path, **arrays)


def load_hierarchy(path) -> tuple[PoolingHierarchy, np.ndarray, int, np.ndarray]:
    with np.load(path) as data:
        meta = json.loads(str(data["meta"]))
        layers = len(meta["orders"]) - 1
        matrices = tuple(data[f"matrix_{l}"] for l in range(layers))
        graphs = tuple(LevelGraph(meta["orders"][l], data[f"adjacency_{l}"], meta["kinds"][l])
                       for l in range(layers + 1))
        vertices = tuple(tuple(tuple(q) for q in level) for level in meta["vertices"])
        hier = PoolingHierarchy(HierarchySchedule(meta["step"], meta["layers"]), matrices, graphs, vertices)
        return hier, data["features"], meta["label"], data["coords"]


def _build_job(args):
    index, record, config, allow_jitter = args
    try:
        return build_record(index, record, config, allow_jitter), None
    except RhomboidPoolError as exc:
        return None, f"{type(exc).__name__}: {exc}"


def run_build(dataset_path, out_dir, config: ModelConfig, allow_jitter: bool = False, workers: int = 1) -> dict:
    """Build and persist a hierarchy per record; failures are collected, not fatal."""
    out_dir = Path(out_dir)
    (out_dir / "records").mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    records = load_dataset(dataset_path)
    load_time = time.perf_counter() - t0
    jobs = [(i, rec, config, allow_jitter) for i, rec in enumerate(records)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_build_job, jobs))
    else:
        results = [_build_job(job) for job in jobs]

    entries, failures = [], []
    for (index, *_), (built, error) in zip(jobs, results):
        if built is None:
            failures.append({"record": index, "error": error})
            log.warning("record %d failed: %s", index, error)
            continue
        rec_dir = out_dir / "records" / f"{index:04d}"
        rec_dir.mkdir(parents=True, exist_ok=True)
        save_hierarchy(built.hierarchy, rec_dir / "hierarchy.npz", built.features, built.label, built.coords)
        paths = {"hierarchy": str((rec_dir / "hierarchy.npz").relative_to(out_dir))}
        if built.tiling is not None:
            write_tiling(built.tiling, rec_dir / "tiling.jsonl")
            paths["tiling"] = str((rec_dir / "tiling.jsonl").relative_to(out_dir))
        entries.append({"record": index, "n": int(len(built.coords)), "jittered": built.jittered,
                        "embedded": built.embedded, "timings": built.timings, "paths": paths})
    manifest = {
        "command": "build",
        "version": __version__,
        "python": platform.python_version(),
        "dataset": str(dataset_path),
        "dataset_sha256": file_digest(dataset_path),
        "config": config.to_dict(),
        "allow_jitter": allow_jitter,
        "seeds": {"config": config.seed, "jitter": "config.seed + record index"},
        "max_order": config.max_order,
        "timings": {"load": load_time, "total": time.perf_counter() - t0},
        "records": entries,
        "failures": failures,
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=1) + "\n", encoding="utf-8")
    return manifest


def load_build(build_dir) -> tuple[list, dict]:
    build_dir = Path(build_dir)
    manifest_path = build_dir / "manifest.json"
    if not manifest_path.exists():
        raise UnknownArtifact(f"no build manifest in {build_dir}")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    samples = []
    for entry in manifest["records"]:
        hier, feats, label, _ = load_hierarchy(build_dir / entry["paths"]["hierarchy"])
        samples.append((hier, feats, label))
    return samples, manifest


def run_validate(clouds: Iterable[tuple[dict, PointCloud]], report_path=None, max_k: int = 5) -> tuple[list, int]:
    """Run the exhaustive checks; exit status 1 on any counterexample, 2 on rejected input."""
    verdicts = []
    for instance, cloud in clouds:
        verdicts.extend(check_cloud(cloud, instance, max_k=max_k))
    if report_path is not None:
        write_report(verdicts, report_path)
    states = {v["verdict"] for v in verdicts}
    if "counterexample" in states:
        status = 1
    elif "numerical_failure" in states:
        status = 3
    elif "rejected" in states:
        status = 2
    else:
        status = 0
    return verdicts, status


def dataset_clouds(dataset_path, allow_jitter: bool = False):
    for i, rec in enumerate(load_dataset(dataset_path)):
        coords = spectral_embed(adjacency_of(rec))[0] if rec.coords is None else rec.coords
        cloud = PointCloud(coords)
        if allow_jitter and validate_general_position(cloud):
            cloud = jitter(cloud, i, JITTER_FRACTION * (cloud.diameter or 1.0))
        yield {"record": i, "n": cloud.n, "d": cloud.dimension}, cloud


def run_train(build_dir, out_dir, config: ModelConfig) -> dict:
    samples, build_manifest = load_build(build_dir)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    num_classes = int(max(s[2] for s in samples)) + 1
    t0 = time.perf_counter()
    result = repeated_runs(samples, config, num_classes)
    elapsed = time.perf_counter() - t0
    runs = []
    for run in result["runs"]:
        ckpt = out_dir / f"checkpoint_seed{run['seed']}.json"
        write_checkpoint(run["params"], {**config.to_dict(), "seed": run["seed"]}, ckpt,
                         {"num_classes": num_classes})
        runs.append({k: v for k, v in run.items() if k != "params"} | {"checkpoint": ckpt.name})
    metrics = {
        "command": "train",
        "build_dir": str(build_dir),
        "build_dataset_sha256": build_manifest.get("dataset_sha256"),
        "config": config.to_dict(),
        "runs": runs,
        "test_mean": result["test_mean"],
        "test_std": result["test_std"],
        "timings": {"train": elapsed},
    }
    (out_dir / "metrics.json").write_text(json.dumps(metrics, indent=1) + "\n", encoding="utf-8")
    return metrics


def run_eval(build_dir, checkpoint, split: str = "all") -> dict:
    samples, _ = load_build(build_dir)
    params, cfg = read_checkpoint(checkpoint)
    config = ModelConfig.from_dict(cfg)
    if split == "all":
        chosen = samples
    else:
        tr, te = split_indices(len(samples), config.test_fraction, config.seed)
        chosen = [samples[i] for i in (te if split == "test" else tr)]
    return {"split": split, "count": len(chosen), "accuracy": evaluate(chosen, params)}


def run_export(build_dir, record: int, kind: str, out_dir) -> list[Path]:
    """Write one artifact of a built record in its documented format; returns written paths."""
    build_dir, out_dir = Path(build_dir), Path(out_dir)
    if kind not in EXPORT_KINDS:
        raise UnknownArtifact(f"unknown export kind {kind!r}")
    rec_dir = build_dir / "records" / f"{record:04d}"
    if not (rec_dir / "hierarchy.npz").exists():
        raise UnknownArtifact(f"record {record} was not built in {build_dir}")
    out_dir.mkdir(parents=True, exist_ok=True)
    hier, _, _, coords = load_hierarchy(rec_dir / "hierarchy.npz")
    written = []
    if kind == "embedding":
        path = out_dir / "embedding.tsv"
        write_embedding(coords, path)
        return [path]
    if kind == "graphs":
        for l, g in enumerate(hier.graphs):
            path = out_dir / f"graph_level{l}_order{g.order}.json"
            verts = hier.vertices[l] if hier.vertices else ()
            write_graph(g, path, verts)
            written.append(path)
        return written
    tiling_path = rec_dir / "tiling.jsonl"
    if not tiling_path.exists():
        raise UnknownArtifact(f"record {record} has no tiling (degenerate cloud)")
    tiling = read_tiling(tiling_path)
    if kind == "tiling":
        path = out_dir / "tiling.jsonl"
        write_tiling(tiling, path)
        return [path]
    orders = hier.schedule.orders
    for l in range(hier.num_layers):
        k1, k2 = orders[l], orders[l + 1]
        raw = cluster_matrix(tiling, k1, k2)
        for name, mat in ((f"cluster_{k1}_{k2}", raw.entries), (f"normalized_{k1}_{k2}", hier.matrices[l])):
            path = out_dir / f"{name}.tsv"
            write_matrix(mat, path, fine_level=k1, coarse_level=k2,
                         row_subsets=tiling.vertices(k2), col_subsets=tiling.vertices(k1))
            written += [path, path.with_suffix(".json")]
    return written


__all__ = [
    "build_record", "prepare_cloud", "run_build", "load_build", "run_validate", "dataset_clouds",
    "run_train", "run_eval", "run_export", "synthetic_clouds",
]
