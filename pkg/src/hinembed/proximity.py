"""Truncated meta-path proximities: dynamic program, per-path rows, enumeration oracle."""

from __future__ import annotations

import enum
from collections import defaultdict
from dataclasses import dataclass, field
from typing import IO, Iterable

from .graph import EdgeTypeLabel, NodeRef, SchemaView, TypedGraph


class ProximityMeasure(enum.Enum):
    PC = "pc"
    PCRW = "pcrw"

    @classmethod
    def parse(cls, text: str) -> "ProximityMeasure":
        try:
            return cls(text.lower())
        except ValueError:
            raise ValueError(f"unknown proximity measure {text!r}, expected pc or pcrw")


@dataclass(frozen=True)
class MetaPath:
    edge_types: tuple[EdgeTypeLabel, ...]

    def __post_init__(self):
        if not self.edge_types:
            raise ValueError("meta path must contain at least one edge type")

    def __len__(self) -> int:
        return len(self.edge_types)

    def __str__(self) -> str:
        return ",".join(str(t) for t in self.edge_types)

    @classmethod
    def parse(cls, text: str) -> "MetaPath":
        return cls(tuple(EdgeTypeLabel.parse(p.strip()) for p in text.split(",")))

    def is_composable(self, schema: SchemaView, start_type: str) -> bool:
        """True if some chain of schema signatures realizes this path from start_type."""
        current = {start_type}
        for etype in self.edge_types:
            current = {t for s in current for t in schema.targets(s, etype)}
            if not current:
                return False
        return True


@dataclass
class ProximityMatrix:
    """Sparse nonnegative pair scores; zero entries are absent."""

    entries: dict[tuple[NodeRef, NodeRef], float]
    horizon: int
    measure: ProximityMeasure
    cumulative: bool
    sources: tuple[NodeRef, ...] = field(default=())

    def row(self, src: NodeRef) -> dict[NodeRef, float]:
        return {dst: v for (s, dst), v in self.entries.items() if s == src}

    def __len__(self) -> int:
        return len(self.entries)


def _step_weights(
    g: TypedGraph, measure: ProximityMeasure
) -> dict[NodeRef, list[tuple[NodeRef, float]]]:
    """Aggregated one-step weights per source node.

    PCRW: multiplicity / per-type out-degree (the per-type random walk
    step probability). PC: raw multiplicity.
    """
    weights: dict[NodeRef, list[tuple[NodeRef, float]]] = {}
    for node in g.nodes:
        acc: dict[NodeRef, float] = defaultdict(float)
        for etype in g.edge_types_from(node):
            targets = g.out_neighbors(node, etype)
            n = len(targets)
            for dst in targets:
                acc[dst] += 1.0 / n if measure is ProximityMeasure.PCRW else 1.0
        if acc:
            weights[node] = list(acc.items())
    return weights


def _push(
    frontier: dict[NodeRef, float],
    weights: dict[NodeRef, list[tuple[NodeRef, float]]],
    epsilon: float,
) -> dict[NodeRef, float]:
    nxt: dict[NodeRef, float] = defaultdict(float)
    for node, mass in frontier.items():
        for dst, w in weights.get(node, ()):
            nxt[dst] += mass * w
    if epsilon > 0.0:
        return {t: v for t, v in nxt.items() if v >= epsilon}
    return dict(nxt)


def exact_k_step(g: TypedGraph, measure: ProximityMeasure, k: int) -> ProximityMatrix:
    """Scores summed over all walks of exactly k edges (identity seed at k=0 is internal)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    weights = _step_weights(g, measure)
    entries: dict[tuple[NodeRef, NodeRef], float] = {}
    for src in g.nodes:
        frontier = {src: 1.0}
        for _ in range(k):
            frontier = _push(frontier, weights, 0.0)
            if not frontier:
                break
        for dst, v in frontier.items():
            if v > 0.0:
                entries[(src, dst)] = v
    return ProximityMatrix(entries, k, measure, cumulative=False, sources=g.nodes)


def truncated_proximity(
    g: TypedGraph, measure: ProximityMeasure, l: int, epsilon: float = 0.0
) -> ProximityMatrix:
    """Cumulative scores over all walks of length 1..l.

    Length-0 self proximity is never included; diagonal entries from
    closed walks of length >= 2 are kept. epsilon > 0 prunes PCRW
    partial masses below the threshold to bound memory.
    """
    if l < 1:
        raise ValueError("l must be >= 1")
    prune = epsilon if measure is ProximityMeasure.PCRW else 0.0
    weights = _step_weights(g, measure)
    entries: dict[tuple[NodeRef, NodeRef], float] = {}
    for src in g.nodes:
        total: dict[NodeRef, float] = defaultdict(float)
        frontier = {src: 1.0}
        for _ in range(l):
            frontier = _push(frontier, weights, prune)
            if not frontier:
                break
            for dst, v in frontier.items():
                total[dst] += v
        for dst, v in total.items():
            if v > 0.0:
                entries[(src, dst)] = v
    return ProximityMatrix(entries, l, measure, cumulative=True, sources=g.nodes)


def metapath_proximity(
    g: TypedGraph, mp: MetaPath, measure: ProximityMeasure, src: NodeRef
) -> dict[NodeRef, float]:
    """Row of per-meta-path scores from src: sum over instances of the path.

    Returns an empty row when the path cannot start from src's type.
    """
    frontier: dict[NodeRef, float] = {src: 1.0}
    for etype in mp.edge_types:
        nxt: dict[NodeRef, float] = defaultdict(float)
        for node, mass in frontier.items():
            targets = g.out_neighbors(node, etype)
            n = len(targets)
            for dst in targets:
                nxt[dst] += mass * (1.0 / n) if measure is ProximityMeasure.PCRW else mass
        frontier = dict(nxt)
        if not frontier:
            return {}
    return frontier


_ORACLE_WALK_LIMIT = 10**7


def brute_force_oracle(
    g: TypedGraph, measure: ProximityMeasure, l: int, src: NodeRef
) -> dict[NodeRef, float]:
    """Depth-first enumeration of every walk of length 1..l from src.

    Independent check for the dynamic program: no recurrence, one
    score contribution per enumerated walk. Refuses when the walk
    count estimate exceeds the enumeration guard.
    """
    if l < 1:
        raise ValueError("l must be >= 1")
    max_deg = max((g.out_degree(v) for v in g.nodes), default=0)
    estimate = sum(max_deg**k for k in range(1, l + 1))
    if estimate > _ORACLE_WALK_LIMIT:
        raise ValueError(f"walk count estimate {estimate} exceeds {_ORACLE_WALK_LIMIT}")

    row: dict[NodeRef, float] = defaultdict(float)

    def walk(node: NodeRef, depth: int, score: float) -> None:
        for etype in g.edge_types_from(node):
            targets = g.out_neighbors(node, etype)
            n = len(targets)
            for dst in targets:
                step = score * (1.0 / n) if measure is ProximityMeasure.PCRW else score
                row[dst] += step
                if depth + 1 < l:
                    walk(dst, depth + 1, step)

    walk(src, 0, 1.0)
    return dict(row)


def empirical_distribution(m: ProximityMatrix, src: NodeRef) -> dict[NodeRef, float]:
    """Proximity row of src normalized to a probability distribution."""
    row = m.row(src)
    total = sum(row.values())
    if total <= 0.0:
        raise ValueError(f"node {src} has no nonzero proximity entries")
    return {dst: v / total for dst, v in row.items()}


def write_proximity(m: ProximityMatrix, sink: IO[str]) -> None:
    """TSV dump `src<TAB>dst<TAB>score` at 9 decimal places, sorted by (src, dst)."""
    for (src, dst), v in sorted(m.entries.items()):
        sink.write(f"{src}\t{dst}\t{v:.9f}\n")


def read_proximity(
    source: Iterable[str], horizon: int, measure: ProximityMeasure, cumulative: bool
) -> ProximityMatrix:
    entries: dict[tuple[NodeRef, NodeRef], float] = {}
    for line in source:
        line = line.rstrip("\n")
        if not line:
            continue
        src_s, dst_s, score_s = line.split("\t")
        entries[(NodeRef.parse(src_s), NodeRef.parse(dst_s))] = float(score_s)
    return ProximityMatrix(entries, horizon, measure, cumulative)
