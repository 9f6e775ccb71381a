"""Typed-graph embeddings trained on truncated meta-path proximities."""

__version__ = "0.1.0"

from .graph import (
    EdgeTypeLabel,
    GraphParseError,
    NodeRef,
    SchemaView,
    TypedGraph,
    add_inverse_edges,
    load_graph,
)
from .proximity import (
    MetaPath,
    ProximityMatrix,
    ProximityMeasure,
    brute_force_oracle,
    empirical_distribution,
    exact_k_step,
    metapath_proximity,
    truncated_proximity,
)
from .trainer import (
    EmbeddingMatrix,
    NoiseTable,
    PairSampler,
    TrainConfig,
    init_embeddings,
    joint_probability,
    kl_objective,
    negative_objective,
    sgd_step,
    train,
)

__all__ = [
    "EdgeTypeLabel",
    "EmbeddingMatrix",
    "GraphParseError",
    "MetaPath",
    "NodeRef",
    "NoiseTable",
    "PairSampler",
    "ProximityMatrix",
    "ProximityMeasure",
    "SchemaView",
    "TrainConfig",
    "TypedGraph",
    "add_inverse_edges",
    "brute_force_oracle",
    "empirical_distribution",
    "exact_k_step",
    "init_embeddings",
    "joint_probability",
    "kl_objective",
    "load_graph",
    "metapath_proximity",
    "negative_objective",
    "sgd_step",
    "train",
    "truncated_proximity",
]
