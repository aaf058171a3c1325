"""Command-line entry point: ``rtpool <command> ...``.

Exit codes: 0 success, 1 validation counterexample, 2 input error,
3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import pipeline
from .errors import (GeometryError, InvariantViolation, LPNumericalFailure, NonFiniteActivation, NonFiniteLoss,
                     ParseError, RhomboidPoolError, UnknownArtifact)
from .formats import save_dataset, convert_tudataset
from .synthetic import blob_dataset
from .training import ModelConfig
from .validation import synthetic_clouds

EXIT_OK, EXIT_COUNTEREXAMPLE, EXIT_INPUT, EXIT_NUMERICAL = 0, 1, 2, 3


def _parse_override(text: str) -> tuple[str, object]:
    key, sep, raw = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip(), value


def load_config(path, overrides=()) -> ModelConfig:
    """Defaults, then the JSON config file, then ``key=value`` overrides."""
    data = ModelConfig().to_dict()
    if path:
        data.update(json.loads(Path(path).read_text(encoding="utf-8")))
    data.update(dict(overrides))
    return ModelConfig.from_dict(data)


def _add_config_args(p):
    p.add_argument("--config", help="JSON file with model/pipeline settings")
    p.add_argument("--set", dest="overrides", action="append", default=[], type=_parse_override,
                   metavar="KEY=VALUE", help="override one config field (repeatable)")


def _cmd_build(args) -> int:
    config = load_config(args.config, args.overrides)
    manifest = pipeline.run_build(args.dataset, args.out, config, allow_jitter=args.jitter, workers=args.workers)
    print(f"built {len(manifest['records'])} records, {len(manifest['failures'])} failed -> {args.out}")
    for f in manifest["failures"]:
        print(f"  record {f['record']}: {f['error']}", file=sys.stderr)
    return EXIT_INPUT if manifest["failures"] else EXIT_OK


def _cmd_validate(args) -> int:
    if args.dataset:
        clouds = pipeline.dataset_clouds(args.dataset, allow_jitter=args.jitter)
    else:
        dims = tuple(int(x) for x in args.dims.split(","))
        clouds = synthetic_clouds(args.synthetic, args.seed, dims, (args.n_min, args.n_max))
    verdicts, status = pipeline.run_validate(clouds, args.report, max_k=args.max_k)
    counts = {}
    for v in verdicts:
        counts[v["verdict"]] = counts.get(v["verdict"], 0) + 1
    print(" ".join(f"{k}={v}" for k, v in sorted(counts.items())))
    bad = sorted({v["check"] for v in verdicts if v["verdict"] != "pass"})
    if bad:
        print("non-passing checks: " + ", ".join(bad))
    return status


def _cmd_train(args) -> int:
    config = load_config(args.config, args.overrides)
    metrics = pipeline.run_train(args.build, args.out, config)
    for run in metrics["runs"]:
        print(f"seed {run['seed']}: train {run['train_accuracy']:.3f} test {run['test_accuracy']:.3f}")
    print(f"test accuracy {metrics['test_mean']:.4f} +/- {metrics['test_std']:.4f}")
    return EXIT_OK


def _cmd_eval(args) -> int:
    result = pipeline.run_eval(args.build, args.checkpoint, args.split)
    print(json.dumps(result))
    return EXIT_OK


def _cmd_export(args) -> int:
    for path in pipeline.run_export(args.build, args.record, args.kind, args.out):
        print(path)
    return EXIT_OK


def _cmd_synth(args) -> int:
    save_dataset(blob_dataset(args.graphs, args.seed), args.out)
    print(f"wrote {args.graphs} records to {args.out}")
    return EXIT_OK


def _cmd_convert(args) -> int:
    records = convert_tudataset(args.root, args.name)
    save_dataset(records, args.out)
    print(f"wrote {len(records)} records to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rtpool", description="Rhomboid-tiling graph pooling pipeline")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="tilings and pooling hierarchies for every record")
    p.add_argument("dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--jitter", action="store_true", help="repair general-position violations by jitter")
    p.add_argument("--workers", type=int, default=1)
    _add_config_args(p)
    p.set_defaults(func=_cmd_build)

    p = sub.add_parser("validate", help="exhaustive oracle checks on small clouds")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--dataset")
    src.add_argument("--synthetic", type=int, metavar="COUNT")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dims", default="2,3")
    p.add_argument("--n-min", type=int, default=6)
    p.add_argument("--n-max", type=int, default=10)
    p.add_argument("--max-k", type=int, default=5)
    p.add_argument("--jitter", action="store_true")
    p.add_argument("--report", help="verdict report path (JSON lines)")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("train", help="repeated 90/10 training runs on a build directory")
    p.add_argument("build")
    p.add_argument("--out", required=True)
    _add_config_args(p)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="accuracy of a checkpoint on a build directory")
    p.add_argument("build")
    p.add_argument("checkpoint")
    p.add_argument("--split", choices=("all", "train", "test"), default="all")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("export", help="write one artifact of a built record")
    p.add_argument("build")
    p.add_argument("--record", type=int, default=0)
    p.add_argument("--kind", required=True, help="tiling | matrices | graphs | embedding")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_export)

    p = sub.add_parser("synth", help="write the two-class blob dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--graphs", type=int, default=60)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("convert-tu", help="convert raw TUDataset text files")
    p.add_argument("root")
    p.add_argument("name")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_convert)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (LPNumericalFailure, NonFiniteActivation, NonFiniteLoss) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ParseError, InvariantViolation, GeometryError, UnknownArtifact, OSError, ValueError) as exc:
        print(f"input error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except RhomboidPoolError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
