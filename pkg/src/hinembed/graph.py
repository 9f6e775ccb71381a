"""Typed directed multigraph: ingestion, inverse augmentation, transition probabilities."""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Iterable, Iterator

INVERSE_SUFFIX = "^-1"


class GraphParseError(ValueError):
    """Malformed edge record; carries the 1-based line number when known."""

    def __init__(self, message: str, line_no: int | None = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


@dataclass(frozen=True, order=True)
class NodeRef:
    type_label: str
    id: str

    def __post_init__(self):
        if not self.type_label:
            raise ValueError("node type label must be non-empty")

    def __str__(self) -> str:
        return f"{self.type_label}:{self.id}"

    @classmethod
    def parse(cls, text: str) -> "NodeRef":
        type_label, sep, node_id = text.partition(":")
        if not sep or not type_label or not node_id:
            raise ValueError(f"expected 'type:id', got {text!r}")
        return cls(type_label, node_id)


@dataclass(frozen=True, order=True)
class EdgeTypeLabel:
    name: str
    is_inverse: bool = False

    def __post_init__(self):
        if not self.name or self.name.endswith(INVERSE_SUFFIX):
            raise ValueError(f"bad edge type name {self.name!r}")

    def inverse(self) -> "EdgeTypeLabel":
        return EdgeTypeLabel(self.name, not self.is_inverse)

    def __str__(self) -> str:
        return self.name + INVERSE_SUFFIX if self.is_inverse else self.name

    @classmethod
    def parse(cls, text: str) -> "EdgeTypeLabel":
        if text.endswith(INVERSE_SUFFIX):
            return cls(text[: -len(INVERSE_SUFFIX)], True)
        return cls(text)


Edge = tuple[NodeRef, EdgeTypeLabel, NodeRef]


@dataclass(frozen=True)
class SchemaView:
    node_types: frozenset[str]
    edge_type_signatures: frozenset[tuple[str, EdgeTypeLabel, str]]

    def targets(self, src_type: str, edge_type: EdgeTypeLabel) -> set[str]:
        return {d for s, r, d in self.edge_type_signatures if s == src_type and r == edge_type}


class TypedGraph:
    """Immutable directed multigraph with typed nodes and edges.

    Parallel edges are kept; the adjacency index groups out-edges by
    (source, edge type) and the per-source structures used by the
    proximity recurrence are precomputed at construction.
    """

    def __init__(self, nodes: Iterable[NodeRef], edges: Iterable[Edge]):
        self.nodes: tuple[NodeRef, ...] = tuple(sorted(set(nodes)))
        self.edges: tuple[Edge, ...] = tuple(edges)
        node_set = set(self.nodes)
        for src, _, dst in self.edges:
            if src not in node_set or dst not in node_set:
                raise ValueError(f"edge endpoint not in node set: {src} -> {dst}")

        adjacency: dict[NodeRef, dict[EdgeTypeLabel, list[NodeRef]]] = defaultdict(
            lambda: defaultdict(list)
        )
        out_degree: Counter[NodeRef] = Counter()
        for src, etype, dst in self.edges:
            adjacency[src][etype].append(dst)
            out_degree[src] += 1
        self._adjacency = {src: dict(by_type) for src, by_type in adjacency.items()}
        self._out_degree = out_degree
        self.node_index = {v: i for i, v in enumerate(self.nodes)}

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def out_degree(self, node: NodeRef) -> int:
        return self._out_degree.get(node, 0)

    def out_edges(self, node: NodeRef) -> Iterator[tuple[EdgeTypeLabel, NodeRef]]:
        for etype, dsts in self._adjacency.get(node, {}).items():
            for dst in dsts:
                yield etype, dst

    def out_neighbors(self, node: NodeRef, edge_type: EdgeTypeLabel) -> list[NodeRef]:
        return self._adjacency.get(node, {}).get(edge_type, [])

    def edge_types_from(self, node: NodeRef) -> list[EdgeTypeLabel]:
        return list(self._adjacency.get(node, {}))

    @property
    def has_inverse_edges(self) -> bool:
        return any(etype.is_inverse for _, etype, _ in self.edges)

    def schema(self) -> SchemaView:
        return SchemaView(
            node_types=frozenset(v.type_label for v in self.nodes),
            edge_type_signatures=frozenset(
                (src.type_label, etype, dst.type_label) for src, etype, dst in self.edges
            ),
        )

    def transition_prob(self, src: NodeRef, dst: NodeRef, edge_type: EdgeTypeLabel) -> float:
        """Probability of stepping src -> dst among src's out-edges of this type.

        Parallel edges weight the step by their multiplicity, so the
        per-type step distribution stays stochastic.
        """
        targets = self._adjacency.get(src, {}).get(edge_type)
        if not targets or dst not in targets:
            raise ValueError(f"no edge {src} -[{edge_type}]-> {dst}")
        return targets.count(dst) / len(targets)


def load_graph(edge_stream: Iterable[str]) -> TypedGraph:
    """Build a TypedGraph from tab-separated 5-field records.

    Record layout: src_id, src_type, edge_type, dst_id, dst_type.
    Lines starting with '#' and blank lines are skipped. Duplicate
    records become parallel edges.
    """
    nodes: set[NodeRef] = set()
    edges: list[Edge] = []
    for line_no, raw in enumerate(edge_stream, start=1):
        line = raw.rstrip("\n")
        if not line.strip() or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 5:
            raise GraphParseError(f"expected 5 tab-separated fields, got {len(fields)}", line_no)
        if any(not f for f in fields):
            raise GraphParseError("empty field", line_no)
        src_id, src_type, etype_name, dst_id, dst_type = fields
        if etype_name.endswith(INVERSE_SUFFIX):
            raise GraphParseError(
                f"edge type {etype_name!r} uses the reserved inverse suffix", line_no
            )
        src = NodeRef(src_type, src_id)
        dst = NodeRef(dst_type, dst_id)
        nodes.add(src)
        nodes.add(dst)
        edges.append((src, EdgeTypeLabel(etype_name), dst))
    return TypedGraph(nodes, edges)


def serialize_edges(g: TypedGraph) -> list[str]:
    """Forward records in the input file layout (inverse edges are skipped)."""
    return [
        f"{src.id}\t{src.type_label}\t{etype.name}\t{dst.id}\t{dst.type_label}"
        for src, etype, dst in g.edges
        if not etype.is_inverse
    ]


def add_inverse_edges(g: TypedGraph) -> TypedGraph:
    """Return a new graph with a reversed r^-1 edge for every edge.

    Meta paths traverse relations in both directions, so the trained
    graph is always the augmented one. Rejects graphs that already
    contain inverse-typed edges (re-augmenting would double them).
    """
    if g.has_inverse_edges:
        raise ValueError("graph already contains inverse-typed edges")
    edges = list(g.edges)
    edges.extend((dst, etype.inverse(), src) for src, etype, dst in g.edges)
    return TypedGraph(g.nodes, edges)
