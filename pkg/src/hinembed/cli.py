"""Command-line surface: proximity, train, eval, knn."""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from . import __version__
from .evalkit import (
    auc_link_recovery,
    cluster_nmi,
    footrule_distance,
    kendall_distance,
    knn_classify,
    knn_query,
    load_labels,
)
from .graph import GraphParseError, NodeRef, TypedGraph, add_inverse_edges, load_graph
from .proximity import (
    MetaPath,
    ProximityMeasure,
    exact_k_step,
    truncated_proximity,
    write_proximity,
)
from .trainer import EmbeddingMatrix, TrainConfig, train

EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_NUMERIC = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2; usage errors are 1
        raise UsageError(message)


def _write_manifest(path: Path, entries: dict) -> None:
    with open(path, "w") as f:
        for key, value in entries.items():
            f.write(f"{key}\t{value}\n")


def _read_graph(path: str, augment: bool) -> TypedGraph:
    try:
        with open(path) as f:
            g = load_graph(f)
    except OSError as exc:
        raise FileNotFoundError(f"cannot read graph file {path}: {exc}")
    return add_inverse_edges(g) if augment else g


def _manifest_base(args: argparse.Namespace) -> dict:
    entries = {"tool_version": __version__}
    for key, value in sorted(vars(args).items()):
        if key in ("func",):
            continue
        entries[f"config.{key}"] = value
    return entries


def cmd_proximity(args: argparse.Namespace) -> int:
    if args.l < 1:
        raise UsageError("--l must be >= 1")
    measure = ProximityMeasure.parse(args.measure)
    t0 = time.perf_counter()
    g = _read_graph(args.graph, augment=not args.no_inverse)
    t1 = time.perf_counter()
    if args.cumulative:
        m = truncated_proximity(g, measure, args.l, args.epsilon)
    else:
        m = exact_k_step(g, measure, args.l)
    t2 = time.perf_counter()
    out = Path(args.out)
    with open(out, "w") as f:
        write_proximity(m, f)
    manifest = _manifest_base(args)
    manifest.update(
        {
            "phase.load_seconds": f"{t1 - t0:.6f}",
            "phase.proximity_seconds": f"{t2 - t1:.6f}",
            "entries": len(m),
        }
    )
    _write_manifest(out.with_suffix(out.suffix + ".manifest"), manifest)
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    cfg = TrainConfig(
        l=args.l,
        d=args.d,
        measure=ProximityMeasure.parse(args.measure),
        negatives=args.negatives,
        rho0=args.rho0,
        total_samples=args.samples,
        threads=args.threads,
        seed=args.seed,
        sampling_mode=args.mode,
        epsilon=args.epsilon,
    )
    try:
        cfg.validate()
    except ValueError as exc:
        raise UsageError(str(exc))
    t0 = time.perf_counter()
    g = _read_graph(args.graph, augment=not args.no_inverse)
    t1 = time.perf_counter()
    proximity = truncated_proximity(g, cfg.measure, cfg.l, cfg.epsilon)
    t2 = time.perf_counter()
    e = train(g, cfg, proximity=proximity)
    t3 = time.perf_counter()
    out = Path(args.out)
    with open(out, "w") as f:
        e.save(f)
    manifest = _manifest_base(args)
    manifest.update(
        {
            "phase.load_seconds": f"{t1 - t0:.6f}",
            "phase.proximity_seconds": f"{t2 - t1:.6f}",
            "phase.train_seconds": f"{t3 - t2:.6f}",
            "nodes": len(g),
            "positive_pairs": len(proximity),
        }
    )
    _write_manifest(out.with_suffix(out.suffix + ".manifest"), manifest)
    return 0


def _load_embeddings(path: str) -> EmbeddingMatrix:
    try:
        with open(path) as f:
            return EmbeddingMatrix.load(f)
    except OSError as exc:
        raise FileNotFoundError(f"cannot read embedding file {path}: {exc}")


def _read_ranked_list(path: str) -> list[NodeRef]:
    with open(path) as f:
        return [NodeRef.parse(line.strip()) for line in f if line.strip()]


def cmd_eval(args: argparse.Namespace) -> int:
    e = _load_embeddings(args.embedding)
    report: list[tuple[str, str]] = []
    if args.task == "recovery":
        g = _read_graph(args.graph, augment=False)
        signatures = sorted(
            (s for s in g.schema().edge_type_signatures if not s[1].is_inverse),
            key=lambda s: (s[0], str(s[1]), s[2]),
        )
        values = []
        for sig in signatures:
            auc = auc_link_recovery(g, e, sig)
            report.append((f"auc.{sig[0]}-{sig[1]}-{sig[2]}", f"{auc:.6f}"))
            values.append(auc)
        report.append(("auc.average", f"{sum(values) / len(values):.6f}"))
    elif args.task in ("classify", "cluster"):
        if not args.labels:
            raise UsageError(f"--task {args.task} requires --labels")
        with open(args.labels) as f:
            labels = load_labels(f)
        unknown = [v for v in labels if v not in e]
        if unknown:
            raise ValueError(f"labeled node {unknown[0]} has no embedding vector")
        if args.task == "classify":
            macro, micro = knn_classify(e, labels, k=args.k, seed=args.seed)
            report.append(("macro_f1", f"{macro:.6f}"))
            report.append(("micro_f1", f"{micro:.6f}"))
        else:
            report.append(("nmi", f"{cluster_nmi(e, labels, seed=args.seed):.6f}"))
    elif args.task == "knn":
        if not args.query:
            raise UsageError("--task knn requires --query")
        query = NodeRef.parse(args.query)
        ranked = knn_query(e, query, args.k, args.type_filter)
        for rank, node in enumerate(ranked, start=1):
            report.append((f"rank.{rank}", f"{node}"))
    elif args.task == "topk":
        if not (args.topk_a and args.topk_b):
            raise UsageError("--task topk requires --topk-a and --topk-b")
        a = _read_ranked_list(args.topk_a)
        b = _read_ranked_list(args.topk_b)
        report.append(("footrule", f"{footrule_distance(a, b):g}"))
        report.append(("kendall", f"{kendall_distance(a, b):g}"))
    else:
        raise UsageError(f"unknown task {args.task!r}")
    sink = open(args.out, "w") if args.out else sys.stdout
    try:
        for key, value in report:
            sink.write(f"{key}\t{value}\n")
    finally:
        if args.out:
            sink.close()
    return 0


def cmd_knn(args: argparse.Namespace) -> int:
    e = _load_embeddings(args.embedding)
    query = NodeRef.parse(args.query)
    ranked = knn_query(e, query, args.k, args.type_filter)
    q = e[query]
    for rank, node in enumerate(ranked, start=1):
        sys.stdout.write(f"{rank}\t{node}\t{float(q @ e[node]):.6f}\n")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="hinembed", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("proximity", help="compute truncated proximities to a TSV dump")
    p.add_argument("graph")
    p.add_argument("--measure", default="pcrw", choices=["pc", "pcrw"])
    p.add_argument("--l", type=int, default=2)
    p.add_argument("--cumulative", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--epsilon", type=float, default=0.0)
    p.add_argument("--no-inverse", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_proximity)

    p = sub.add_parser("train", help="train node embeddings")
    p.add_argument("graph")
    p.add_argument("--measure", default="pcrw", choices=["pc", "pcrw"])
    p.add_argument("--l", type=int, default=2)
    p.add_argument("--d", type=int, default=10)
    p.add_argument("--negatives", type=int, default=5)
    p.add_argument("--rho0", type=float, default=0.025)
    p.add_argument("--samples", type=int, default=10_000_000)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--mode", default="alias_proportional",
                   choices=["alias_proportional", "uniform_weighted"])
    p.add_argument("--epsilon", type=float, default=0.0)
    p.add_argument("--no-inverse", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate an embedding file")
    p.add_argument("embedding")
    p.add_argument("graph", nargs="?")
    p.add_argument("--labels")
    p.add_argument("--task", required=True,
                   choices=["recovery", "classify", "cluster", "knn", "topk"])
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--query")
    p.add_argument("--type-filter")
    p.add_argument("--topk-a")
    p.add_argument("--topk-b")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("knn", help="top-k nearest nodes by dot product")
    p.add_argument("embedding")
    p.add_argument("--query", required=True)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--type-filter")
    p.set_defaults(func=cmd_knn)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        if args.command == "eval" and args.task == "recovery" and not args.graph:
            raise UsageError("--task recovery requires a graph path")
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FileNotFoundError, GraphParseError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (FloatingPointError, OverflowError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
