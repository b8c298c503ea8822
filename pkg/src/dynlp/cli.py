"""Command-line entry point: generate datasets, run methods over batch
streams, compare methods, and dump intra-batch component labelings.

Exit codes: 0 success, 2 usage, 3 validation, 4 I/O or file format.
Every run writes its fully resolved configuration next to its results.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import components as comp_mod
from . import kernels
from .builder import (
    SyntheticSpec,
    erdos_renyi,
    knn_graph,
    read_features_csv,
    select_ground_truth,
)
from .engine import (
    MODE_GAUSS_SEIDEL,
    MODE_JACOBI,
    EngineConfig,
    apply_batch_structure,
)
from .errors import FileFormatError, ValidationError
from .graph import (
    BatchUpdate,
    DynamicGraph,
    EdgeList,
    read_batches_jsonl,
    write_batches_jsonl,
)
from .harness import METHODS, compare_methods, config_echo, run_method
from .labels import LabelState, ground_truth_to_csv, labels_to_csv, read_ground_truth_csv
from .stream import StreamSpec, make_stream, single_batch_stream

log = logging.getLogger("dynlp")

MODE_FLAGS = {"jacobi": MODE_JACOBI, "gauss-seidel": MODE_GAUSS_SEIDEL}


class UsageError(Exception):
    """Missing or mutually inconsistent command-line flags."""


def _fractions(text: str) -> tuple[float, float, float]:
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("fractions must be ins:gt:del")
    return tuple(float(p) for p in parts)  # type: ignore[return-value]


def _tau(text: str):
    return text if text == "auto" else float(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dynlp")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    gen = sub.add_parser("generate", help="generate a graph, ground truth, and batch stream")
    gen.add_argument("--model", choices=("er", "knn"), required=True)
    gen.add_argument("--n", type=int, help="vertex count (er model)")
    gen.add_argument("--avg-degree", type=float, default=5.0)
    gen.add_argument("--features", type=Path, help="feature CSV (knn model)")
    gen.add_argument("--k", type=int, default=5, help="neighbors per vertex (knn model)")
    gen.add_argument("--labeled", type=float, default=0.01, help="ground-truth fraction")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--batch-size", type=int, default=1000)
    gen.add_argument("--fractions", type=_fractions, default=(0.90, 0.01, 0.09),
                     help="insert:gt:delete fractions, e.g. 0.9:0.01:0.09")
    gen.add_argument("--initial-gt", type=int, default=None,
                     help="ground-truth seeds revealed at t=0 (default: half of them)")
    gen.add_argument("--output-dir", type=Path, required=True)

    run = sub.add_parser("run", help="run one method over a batch stream or full graph")
    run.add_argument("--method", choices=METHODS, required=True)
    run.add_argument("--batches", type=Path, help="batch stream to replay (JSONL)")
    run.add_argument("--graph", type=Path, help="graph file for a single full-graph solve")
    run.add_argument("--ground-truth", type=Path, help="ground-truth CSV for --graph")
    run.add_argument("--delta", type=float, default=1e-4)
    run.add_argument("--tau", type=_tau, default="auto")
    run.add_argument("--mode", choices=tuple(MODE_FLAGS), default="jacobi")
    run.add_argument("--threads", type=int, default=None)
    run.add_argument("--max-iterations", type=int, default=None)
    run.add_argument("--snapshots", action="store_true", help="write labels after every batch")
    run.add_argument("--output-dir", type=Path, required=True)

    cmp = sub.add_parser("compare", help="run several methods over one stream and compare")
    cmp.add_argument("--methods", required=True, help="comma-separated method names")
    cmp.add_argument("--batches", type=Path, required=True)
    cmp.add_argument("--reference", choices=METHODS, default="stlp")
    cmp.add_argument("--epsilon-margin", type=float, default=0.0)
    cmp.add_argument("--delta", type=float, default=1e-4)
    cmp.add_argument("--tau", type=_tau, default="auto")
    cmp.add_argument("--mode", choices=tuple(MODE_FLAGS), default="jacobi")
    cmp.add_argument("--threads", type=int, default=None)
    cmp.add_argument("--max-iterations", type=int, default=None)
    cmp.add_argument("--output-dir", type=Path, required=True)

    comp = sub.add_parser("components", help="dump one batch's intra-batch component labeling")
    comp.add_argument("--batches", type=Path, required=True)
    comp.add_argument("--t", type=int, required=True, help="batch index to inspect")
    comp.add_argument("--tau", type=_tau, default="auto")
    comp.add_argument("--output", type=Path, required=True)

    return parser


def _engine_config(args) -> EngineConfig:
    cfg = EngineConfig(
        delta=args.delta,
        tau=args.tau,
        max_iterations=args.max_iterations,
        mode=MODE_FLAGS[args.mode],
        threads=args.threads,
    )
    cfg.validate()
    return cfg


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    log.info("wrote %s", path)


def _write_config(outdir: Path, subcommand: str, payload: dict) -> None:
    payload = {"subcommand": subcommand, **payload}
    _write(outdir / "config.json", json.dumps(payload, indent=2, sort_keys=True) + "\n")


_CONFIG_INFO_KEYS = {"subcommand", "substitutions", "kernel_backend"}


def argv_from_config(config: dict) -> list[str]:
    """Rebuild a CLI argument vector from an emitted config.json payload."""
    argv = [config["subcommand"]]
    for key, value in config.items():
        if key in _CONFIG_INFO_KEYS or value is None or value is False:
            continue
        flag = "--" + key.replace("_", "-")
        if value is True:
            argv.append(flag)
        elif isinstance(value, (list, tuple)):
            argv.extend([flag, ":".join(str(v) for v in value)])
        else:
            argv.extend([flag, str(value)])
    return argv


def cmd_generate(args) -> int:
    builder_seed, stream_seed = _spawn_seeds(args.seed, 2)
    if args.model == "er":
        if args.n is None:
            raise UsageError("--n is required for the er model")
        spec = SyntheticSpec(
            n=args.n, avg_degree=args.avg_degree, seed=builder_seed,
            labeled_fraction=args.labeled,
        )
        data = erdos_renyi(spec)
        n, edges, gt_ids, gt_classes = data.n, data.edges, data.gt_ids, data.gt_classes
    else:
        if args.features is None:
            raise UsageError("--features is required for the knn model")
        feats = read_features_csv(args.features.read_text())
        if feats.true_labels is None:
            raise ValidationError("feature file must carry labels to designate ground truth")
        edges = knn_graph(feats, args.k)
        n = feats.n
        gt_ids, gt_classes = select_ground_truth(feats.true_labels, args.labeled, builder_seed)

    ins_f, gt_f, del_f = args.fractions
    initial_gt = args.initial_gt if args.initial_gt is not None else max(2, len(gt_ids) // 2)
    spec = StreamSpec(
        batch_size=args.batch_size, seed=stream_seed,
        insert_fraction=ins_f, gt_fraction=gt_f, delete_fraction=del_f,
        initial_gt_count=initial_gt,
    )
    stream = make_stream(n, edges, gt_ids, gt_classes, spec)

    # Everything downstream speaks stream ids, so remap the artifacts too.
    stream_of = np.full(n, -1, dtype=np.int64)
    stream_of[stream.source_of] = np.arange(n)
    remapped = EdgeList(stream_of[edges.u], stream_of[edges.v], edges.w)
    graph = DynamicGraph.from_edge_list(n, remapped)
    sgt = stream_of[gt_ids]
    order = np.argsort(sgt)

    outdir = args.output_dir
    _write(outdir / "graph.txt", graph.to_text())
    _write(outdir / "ground_truth.csv", ground_truth_to_csv(sgt[order], gt_classes[order]))
    _write(outdir / "batches.jsonl", write_batches_jsonl(stream.batches))
    _write_config(outdir, "generate", {
        "model": args.model,
        "n": args.n,
        "avg_degree": args.avg_degree,
        "features": str(args.features) if args.features else None,
        "k": args.k,
        "labeled": args.labeled,
        "seed": args.seed,
        "batch_size": args.batch_size,
        "fractions": list(args.fractions),
        "initial_gt": initial_gt,
        "output_dir": str(outdir),
        "substitutions": stream.substitutions,
    })
    return 0


def _load_batches(args) -> list[BatchUpdate]:
    if args.batches is not None:
        if args.graph is not None:
            raise UsageError("give either --batches or --graph, not both")
        return read_batches_jsonl(args.batches.read_text())
    if args.graph is None or args.ground_truth is None:
        raise UsageError("need --batches, or --graph together with --ground-truth")
    graph = DynamicGraph.from_text(args.graph.read_text())
    gt_ids, gt_classes = read_ground_truth_csv(args.ground_truth.read_text())
    return single_batch_stream(graph.num_slots, graph.live_edges(), gt_ids, gt_classes)


def cmd_run(args) -> int:
    cfg = _engine_config(args)
    batches = _load_batches(args)
    outdir = args.output_dir
    snapshots = []
    if args.snapshots:
        def on_batch(graph, labels, rep):
            snapshots.append((rep.t, labels_to_csv(graph, labels)))
    else:
        on_batch = None
    graph, labels, report = run_method(args.method, batches, cfg, on_batch=on_batch)
    for t, csv_text in snapshots:
        _write(outdir / f"labels_t{t}.csv", csv_text)
    _write(outdir / "labels.csv", labels_to_csv(graph, labels))
    _write(outdir / "report.json", json.dumps(report.to_json_dict(), indent=2) + "\n")
    _write_config(outdir, "run", {
        "method": args.method,
        "batches": str(args.batches) if args.batches else None,
        "graph": str(args.graph) if args.graph else None,
        "ground_truth": str(args.ground_truth) if args.ground_truth else None,
        "delta": cfg.delta,
        "tau": cfg.tau,
        "mode": args.mode,
        "threads": cfg.threads,
        "max_iterations": cfg.max_iterations,
        "snapshots": bool(args.snapshots),
        "output_dir": str(outdir),
        "kernel_backend": kernels.BACKEND,
    })
    if not report.totals["converged"]:
        log.warning("run did not converge within the iteration cap")
    return 0


def cmd_compare(args) -> int:
    cfg = _engine_config(args)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    batches = read_batches_jsonl(args.batches.read_text())
    result = compare_methods(
        batches, methods, cfg,
        reference=args.reference, epsilon_margin=args.epsilon_margin,
    )
    outdir = args.output_dir
    _write(outdir / "comparison.json", json.dumps(result.to_json_dict(), indent=2) + "\n")
    _write(outdir / "comparison.csv", result.per_batch_csv())
    _write_config(outdir, "compare", {
        "methods": ",".join(methods),
        "batches": str(args.batches),
        "reference": args.reference,
        "epsilon_margin": args.epsilon_margin,
        "delta": cfg.delta,
        "tau": cfg.tau,
        "mode": args.mode,
        "threads": cfg.threads,
        "max_iterations": cfg.max_iterations,
        "output_dir": str(outdir),
        "kernel_backend": kernels.BACKEND,
    })
    return 0


def cmd_components(args) -> int:
    batches = read_batches_jsonl(args.batches.read_text())
    index = {b.t: i for i, b in enumerate(batches)}
    if args.t not in index:
        raise ValidationError(f"no batch with t={args.t} in the stream")
    graph = DynamicGraph()
    labels = LabelState()
    target = index[args.t]
    for b in batches[: target + 1]:
        apply_batch_structure(graph, labels, b)
    batch = batches[target]
    if args.tau == "auto":
        edges = graph.live_edges()
        tau = float(edges.w.mean()) if len(edges) else 0.0
    else:
        tau = float(args.tau)
    intra = comp_mod.IntraBatchGraph.build(batch.insert_ids, batch.insert_edges(), tau)
    labeling = comp_mod.find_components(intra)
    _write(args.output, comp_mod.labeling_to_csv(labeling))
    return 0


def _spawn_seeds(seed: int, count: int) -> list[int]:
    children = np.random.SeedSequence(seed).spawn(count)
    return [int(c.generate_state(1)[0]) for c in children]


def main(argv=None) -> int:
    level = os.environ.get("DYNLP_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.subcommand == "generate":
            return cmd_generate(args)
        if args.subcommand == "run":
            return cmd_run(args)
        if args.subcommand == "compare":
            return cmd_compare(args)
        return cmd_components(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except FileFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
