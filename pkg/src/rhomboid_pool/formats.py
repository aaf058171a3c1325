"""On-disk formats.

Dataset (``*.jsonl``, UTF-8, one JSON object per line)::

    {"coords": [[x, y, z], ...] | null, "edges": [[i, j], ...],
     "features": [[...], ...], "label": 0}

``coords`` may be omitted or null; such records are embedded spectrally.
Blank lines and lines starting with ``#`` are skipped.

Tiling export (``*.jsonl``): a ``header`` line carrying the points and max
order, one ``rhomboid`` line per maximal rhomboid (in/on sets, sphere and all
lifted corners including the empty subset) and one ``vertex`` line per
registered slice vertex (level, subset, lifted coordinates).

Matrix export: dense tab-separated rows in ``<name>.tsv`` plus a
``<name>.json`` sidecar with the levels and the vertex subsets of rows and
columns.  Floats are written with ``repr`` so they re-import exactly.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .clustering import LevelGraph
from .errors import InvariantViolation, ParseError
from .geometry import PointCloud, Sphere
from .tiling import Rhomboid, RhomboidTiling, embed_vertex, rhomboid_lifted_vertices


@dataclass
class DatasetRecord:
    coords: np.ndarray | None
    edges: list[tuple[int, int]]
    features: np.ndarray
    label: int

    @property
    def num_nodes(self) -> int:
        return self.features.shape[0]

    @property
    def needs_embedding(self) -> bool:
        return self.coords is None

    def to_json(self) -> dict:
        return {
            "coords": None if self.coords is None else self.coords.tolist(),
            "edges": [list(e) for e in self.edges],
            "features": self.features.tolist(),
            "label": int(self.label),
        }


def _check_record(rec: DatasetRecord, index: int):
    n = rec.num_nodes
    if rec.features.ndim != 2:
        raise InvariantViolation("features must be a 2-D table", index)
    if rec.coords is not None:
        if rec.coords.ndim != 2 or rec.coords.shape[1] not in (2, 3):
            raise InvariantViolation(f"coords must be n x 2 or n x 3, got {rec.coords.shape}", index)
        if rec.coords.shape[0] != n:
            raise InvariantViolation(f"{rec.coords.shape[0]} coordinate rows for {n} feature rows", index)
    for a, b in rec.edges:
        if not (0 <= a < n and 0 <= b < n):
            raise InvariantViolation(f"edge ({a}, {b}) has an endpoint outside 0..{n - 1}", index)


def parse_record(obj: dict, index: int) -> DatasetRecord:
    try:
        coords = obj.get("coords")
        rec = DatasetRecord(
            coords=None if coords is None else np.asarray(coords, dtype=np.float64),
            edges=[(int(a), int(b)) for a, b in obj.get("edges", [])],
            features=np.asarray(obj["features"], dtype=np.float64),
            label=int(obj["label"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InvariantViolation(f"malformed record: {exc}", index) from exc
    if rec.features.ndim == 1 and rec.features.size == 0:
        rec.features = rec.features.reshape(0, 0)
    _check_record(rec, index)
    return rec


def load_dataset(path) -> list[DatasetRecord]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            try:
                obj = json.loads(text)
            except json.JSONDecodeError as exc:
                raise ParseError(str(exc), lineno) from exc
            if not isinstance(obj, dict):
                raise ParseError("each line must hold a JSON object", lineno)
            records.append(parse_record(obj, len(records)))
    return records


def save_dataset(records: Iterable[DatasetRecord], path):
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_json()) + "\n")


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def convert_tudataset(root, name: str) -> list[DatasetRecord]:
    """Read raw TUDataset text files (``{name}_A.txt`` etc.) into coordinate-free records.

    Node labels become one-hot features (a constant column when absent);
    graph labels are remapped to 0..C-1 in sorted order.
    """
    root = Path(root)

    def read_ints(fname):
        rows = []
        for line in (root / fname).read_text().splitlines():
            if line.strip():
                rows.append([int(float(tok)) for tok in line.replace(",", " ").split()])
        return rows

    indicator = np.array([r[0] for r in read_ints(f"{name}_graph_indicator.txt")])
    raw_labels = [r[0] for r in read_ints(f"{name}_graph_labels.txt")]
    label_map = {v: i for i, v in enumerate(sorted(set(raw_labels)))}
    node_label_file = root / f"{name}_node_labels.txt"
    node_labels = np.array([r[0] for r in read_ints(node_label_file.name)]) if node_label_file.exists() else None
    edges_all = read_ints(f"{name}_A.txt")

    num_graphs = len(raw_labels)
    offsets = np.zeros(num_graphs + 1, dtype=int)
    for g in indicator:
        offsets[g] += 1
    offsets = np.cumsum(offsets)
    per_graph: list[set] = [set() for _ in range(num_graphs)]
    for a, b in edges_all:
        g = indicator[a - 1] - 1
        i, j = a - 1 - offsets[g], b - 1 - offsets[g]
        if i != j:
            per_graph[g].add((min(i, j), max(i, j)))

    if node_labels is not None:
        values = sorted(set(node_labels.tolist()))
        col = {v: i for i, v in enumerate(values)}
    records = []
    for g in range(num_graphs):
        n = offsets[g + 1] - offsets[g]
        if node_labels is not None:
            feats = np.zeros((n, len(col)))
            for i, v in enumerate(node_labels[offsets[g]:offsets[g + 1]]):
                feats[i, col[v]] = 1.0
        else:
            feats = np.ones((n, 1))
        rec = DatasetRecord(None, sorted(per_graph[g]), feats, label_map[raw_labels[g]])
        _check_record(rec, g)
        records.append(rec)
    return records


# -- tiling ---------------------------------------------------------------

def _lifted_json(cloud, q):
    return [0.0] * (cloud.dimension + 1) if not q else list(embed_vertex(cloud, q))


def write_tiling(tiling: RhomboidTiling, path):
    cloud = tiling.cloud
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"type": "header", "dimension": cloud.dimension, "max_order": tiling.max_order,
                             "points": cloud.points.tolist()}) + "\n")
        for rho in tiling.rhomboids:
            fh.write(json.dumps({
                "type": "rhomboid", "id": rho.id, "in": list(rho.in_set), "on": list(rho.on_set),
                "center": list(rho.sphere.center), "radius": rho.sphere.radius,
                "corners": [{"subset": list(q), "lifted": list(y)} for q, y in rhomboid_lifted_vertices(cloud, rho)],
            }) + "\n")
        for k, reg in tiling.registries.items():
            for q, vid in reg.items():
                fh.write(json.dumps({"type": "vertex", "level": k, "id": vid, "subset": list(q),
                                     "lifted": _lifted_json(cloud, q)}) + "\n")


def read_tiling(path) -> RhomboidTiling:
    header, rhomboids, registries = None, [], {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(str(exc), lineno) from exc
            kind = obj.get("type")
            if kind == "header":
                header = obj
            elif kind == "rhomboid":
                rhomboids.append(Rhomboid(obj["id"], tuple(obj["in"]), tuple(obj["on"]),
                                          Sphere(tuple(obj["center"]), obj["radius"])))
            elif kind == "vertex":
                registries.setdefault(obj["level"], {})[tuple(obj["subset"])] = obj["id"]
            else:
                raise ParseError(f"unknown record type {kind!r}", lineno)
    if header is None:
        raise ParseError("tiling file has no header")
    for k in range(1, header["max_order"] + 1):
        registries.setdefault(k, {})
    registries = {k: dict(sorted(reg.items(), key=lambda kv: kv[1])) for k, reg in sorted(registries.items())}
    cloud = PointCloud(np.array(header["points"], dtype=np.float64).reshape(-1, header["dimension"]))
    return RhomboidTiling(cloud, header["max_order"], tuple(rhomboids), registries)


# -- matrices -------------------------------------------------------------

def write_matrix(matrix: np.ndarray, path, *, fine_level=None, coarse_level=None,
                 row_subsets: Sequence = (), col_subsets: Sequence = ()):
    """Dense TSV at ``path`` plus a JSON sidecar next to it (``.json`` suffix)."""
    path = Path(path)
    matrix = np.asarray(matrix)
    integer = np.issubdtype(matrix.dtype, np.integer)
    with open(path, "w", encoding="utf-8") as fh:
        for row in matrix:
            fh.write("\t".join(str(int(v)) if integer else repr(float(v)) for v in row) + "\n")
    sidecar = {
        "shape": list(matrix.shape), "dtype": "int" if integer else "float",
        "fine_level": fine_level, "coarse_level": coarse_level,
        "row_subsets": [list(q) for q in row_subsets], "col_subsets": [list(q) for q in col_subsets],
    }
    path.with_suffix(".json").write_text(json.dumps(sidecar, indent=1) + "\n", encoding="utf-8")


def read_matrix(path) -> tuple[np.ndarray, dict]:
    path = Path(path)
    meta = json.loads(path.with_suffix(".json").read_text(encoding="utf-8"))
    rows, cols = meta["shape"]
    dtype = np.int64 if meta["dtype"] == "int" else np.float64
    mat = np.zeros((rows, cols), dtype=dtype)
    lines = [l for l in path.read_text(encoding="utf-8").splitlines() if l != ""]
    if len(lines) != rows:
        raise ParseError(f"expected {rows} rows, found {len(lines)}")
    for i, line in enumerate(lines):
        vals = line.split("\t") if cols else []
        if len(vals) != cols:
            raise ParseError(f"expected {cols} entries", i + 1)
        mat[i] = [dtype(v) if dtype is np.int64 else float(v) for v in vals]
    return mat, meta


# -- graphs, embeddings, reports, checkpoints ------------------------------

def write_graph(graph: LevelGraph, path, vertices: Sequence = ()):
    Path(path).write_text(json.dumps({
        "order": graph.order, "kind": graph.kind, "num_vertices": graph.num_vertices,
        "vertices": [list(q) for q in vertices], "edges": [list(e) for e in graph.edges()],
    }) + "\n", encoding="utf-8")


def read_graph(path) -> tuple[LevelGraph, list]:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    graph = LevelGraph.from_edges(obj["num_vertices"], obj["edges"], obj["order"], obj["kind"])
    return graph, [tuple(q) for q in obj["vertices"]]


def write_embedding(coords: np.ndarray, path):
    write_matrix(np.asarray(coords, dtype=np.float64), path)


def write_report(verdicts: Iterable[dict], path):
    with open(path, "w", encoding="utf-8") as fh:
        for v in verdicts:
            fh.write(json.dumps(v, sort_keys=True) + "\n")


def read_report(path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def write_checkpoint(params: dict, config: dict, path, extra: dict | None = None):
    tensors = {name: {"shape": list(np.shape(v)), "data": np.asarray(v, dtype=np.float64).ravel().tolist()}
               for name, v in params.items()}
    Path(path).write_text(json.dumps({"config": config, "params": tensors, **(extra or {})}) + "\n",
                          encoding="utf-8")


def read_checkpoint(path) -> tuple[dict, dict]:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    params = {name: np.array(t["data"], dtype=np.float64).reshape(t["shape"]) for name, t in obj["params"].items()}
    return params, obj["config"]
