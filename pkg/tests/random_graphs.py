"""Random typed multigraph generator for property and oracle-equivalence tests."""

from __future__ import annotations

import numpy as np

from hinembed.graph import NodeRef, TypedGraph, load_graph


def random_typed_graph(
    rng: np.random.Generator,
    max_nodes: int = 40,
    max_node_types: int = 4,
    max_edge_types: int = 4,
    avg_degree: float = 4.0,
) -> TypedGraph:
    """Random schema-consistent multigraph; may contain parallel edges and cycles."""
    n_nodes = int(rng.integers(2, max_nodes + 1))
    n_ntypes = int(rng.integers(1, max_node_types + 1))
    n_etypes = int(rng.integers(1, max_edge_types + 1))
    node_types = [f"T{rng.integers(n_ntypes)}" for _ in range(n_nodes)]
    nodes = [NodeRef(node_types[i], f"n{i}") for i in range(n_nodes)]
    # each edge type gets one (src_type, dst_type) signature
    signatures = [
        (f"T{rng.integers(n_ntypes)}", f"T{rng.integers(n_ntypes)}") for _ in range(n_etypes)
    ]
    by_type: dict[str, list[NodeRef]] = {}
    for v in nodes:
        by_type.setdefault(v.type_label, []).append(v)
    n_edges = max(1, int(n_nodes * avg_degree / 2))
    records = []
    for _ in range(n_edges):
        e = int(rng.integers(n_etypes))
        s_type, d_type = signatures[e]
        srcs, dsts = by_type.get(s_type, []), by_type.get(d_type, [])
        if not srcs or not dsts:
            continue
        src = srcs[int(rng.integers(len(srcs)))]
        dst = dsts[int(rng.integers(len(dsts)))]
        records.append(f"{src.id}\t{src.type_label}\te{e}\t{dst.id}\t{dst.type_label}")
    if not records:
        records.append(f"{nodes[0].id}\t{nodes[0].type_label}\te0\t{nodes[-1].id}\t{nodes[-1].type_label}")
    return load_graph(records)
