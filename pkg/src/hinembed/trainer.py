"""Embedding model and negative-sampled asynchronous SGD."""

from __future__ import annotations

import threading
import zlib
from dataclasses import dataclass
from typing import IO, Iterable, Sequence

import numpy as np

from . import _kernels
from .graph import NodeRef, TypedGraph
from .proximity import ProximityMatrix, ProximityMeasure, truncated_proximity

SamplingMode = str  # "alias_proportional" | "uniform_weighted"
_MASK64 = (1 << 64) - 1


def substream_seed(master_seed: int, name: str) -> int:
    """Named 64-bit sub-stream seed; adding a consumer never perturbs others."""
    x = (master_seed ^ (zlib.crc32(name.encode()) * 0x9E3779B97F4A7C15)) & _MASK64
    for _ in range(2):
        x = (x + 0x9E3779B97F4A7C15) & _MASK64
        z = x
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        x = z ^ (z >> 31)
    return x


class EmbeddingMatrix:
    """Dense d-dimensional vector per node, backed by one (N, d) array."""

    def __init__(self, nodes: Sequence[NodeRef], array: np.ndarray):
        if array.ndim != 2 or array.shape[0] != len(nodes):
            raise ValueError("array shape does not match node list")
        self.nodes: tuple[NodeRef, ...] = tuple(nodes)
        self.array = np.ascontiguousarray(array, dtype=np.float64)
        self.node_index = {v: i for i, v in enumerate(self.nodes)}

    @property
    def dim(self) -> int:
        return self.array.shape[1]

    def __len__(self) -> int:
        return len(self.nodes)

    def __contains__(self, node: NodeRef) -> bool:
        return node in self.node_index

    def __getitem__(self, node: NodeRef) -> np.ndarray:
        return self.array[self.node_index[node]]

    @property
    def vectors(self) -> dict[NodeRef, np.ndarray]:
        return {v: self.array[i] for v, i in self.node_index.items()}

    def save(self, sink: IO[str]) -> None:
        """Header `N d`, then `type:id c1 ... cd` with round-trippable components."""
        sink.write(f"{len(self.nodes)} {self.dim}\n")
        for node, row in zip(self.nodes, self.array):
            sink.write(f"{node} " + " ".join(repr(float(c)) for c in row) + "\n")

    @classmethod
    def load(cls, source: Iterable[str]) -> "EmbeddingMatrix":
        it = iter(source)
        try:
            header = next(it).split()
            n, d = int(header[0]), int(header[1])
        except (StopIteration, IndexError, ValueError) as exc:
            raise ValueError(f"bad embedding header: {exc}")
        nodes: list[NodeRef] = []
        rows: list[list[float]] = []
        for line in it:
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split(" ")
            if len(parts) != d + 1:
                raise ValueError(f"expected {d} components, got {len(parts) - 1}")
            nodes.append(NodeRef.parse(parts[0]))
            try:
                rows.append([float(c) for c in parts[1:]])
            except ValueError as exc:
                raise ValueError(f"non-numeric component: {exc}")
        if len(nodes) != n:
            raise ValueError(f"header claims {n} rows, file has {len(nodes)}")
        array = np.array(rows, dtype=np.float64).reshape(n, d)
        return cls(nodes, array)


@dataclass
class TrainConfig:
    l: int = 2
    d: int = 10
    measure: ProximityMeasure = ProximityMeasure.PCRW
    negatives: int = 5
    rho0: float = 0.025
    total_samples: int = 10_000_000
    threads: int = 1
    seed: int = 1
    sampling_mode: SamplingMode = "alias_proportional"
    epsilon: float = 0.0

    def validate(self) -> None:
        if self.l < 1 or self.d < 1 or self.negatives < 1:
            raise ValueError("l, d and negatives must all be >= 1")
        if self.rho0 <= 0.0 or self.total_samples < 0 or self.threads < 1:
            raise ValueError("rho0 must be positive, total_samples >= 0, threads >= 1")
        if self.sampling_mode not in ("alias_proportional", "uniform_weighted"):
            raise ValueError(f"unknown sampling mode {self.sampling_mode!r}")


def build_alias(weights: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vose alias tables for O(1) draws proportional to `weights`."""
    w = np.asarray(weights, dtype=np.float64)
    if w.size == 0 or w.min() < 0 or w.sum() <= 0:
        raise ValueError("weights must be nonnegative with positive sum")
    n = w.size
    scaled = w * (n / w.sum())
    prob = np.ones(n)
    alias = np.arange(n, dtype=np.int64)
    small = [i for i in range(n) if scaled[i] < 1.0]
    large = [i for i in range(n) if scaled[i] >= 1.0]
    while small and large:
        s = small.pop()
        g = large.pop()
        prob[s] = scaled[s]
        alias[s] = g
        scaled[g] = scaled[g] - (1.0 - scaled[s])
        if scaled[g] < 1.0:
            small.append(g)
        else:
            large.append(g)
    for rest in (large, small):
        for i in rest:
            prob[i] = 1.0
    return prob, alias


class NoiseTable:
    """Noise distribution over nodes, P(v) proportional to d_out(v)^(3/4).

    Out-degrees are taken from the graph as trained, i.e. after any
    inverse augmentation. Zero-degree nodes are never drawn.
    """

    def __init__(self, g: TypedGraph, node_index: dict[NodeRef, int]):
        support = [v for v in g.nodes if g.out_degree(v) > 0]
        if not support:
            raise ValueError("graph has no out-edges; noise distribution undefined")
        self.support = tuple(support)
        self.weights = np.array([g.out_degree(v) ** 0.75 for v in support])
        self.node_ids = np.array([node_index[v] for v in support], dtype=np.int64)
        self.prob, self.alias = build_alias(self.weights)

    def sample(self, rng: np.random.Generator) -> NodeRef:
        i = int(rng.integers(len(self.support)))
        if rng.random() >= self.prob[i]:
            i = int(self.alias[i])
        return self.support[i]


class PairSampler:
    """Positive pairs: nonzero off-diagonal entries of the cumulative matrix.

    alias_proportional draws pairs proportional to their score with
    unit gradient weight; uniform_weighted draws uniformly and scales
    the gradient by the score. Both have the same expected update.
    """

    def __init__(self, m: ProximityMatrix, node_index: dict[NodeRef, int], mode: SamplingMode):
        pairs = sorted((src, dst, v) for (src, dst), v in m.entries.items() if src != dst and v > 0)
        if not pairs:
            raise ValueError("proximity matrix has no off-diagonal nonzero entries")
        self.pairs = tuple((src, dst) for src, dst, _ in pairs)
        self.pos_i = np.array([node_index[src] for src, _, _ in pairs], dtype=np.int64)
        self.pos_j = np.array([node_index[dst] for _, dst, _ in pairs], dtype=np.int64)
        self.pos_w = np.array([v for _, _, v in pairs])
        self.mode = mode
        self.prob, self.alias = build_alias(self.pos_w)

    def sample(self, rng: np.random.Generator) -> tuple[NodeRef, NodeRef, float]:
        if self.mode == "alias_proportional":
            i = int(rng.integers(len(self.pairs)))
            if rng.random() >= self.prob[i]:
                i = int(self.alias[i])
            src, dst = self.pairs[i]
            return src, dst, 1.0
        i = int(rng.integers(len(self.pairs)))
        src, dst = self.pairs[i]
        return src, dst, float(self.pos_w[i])


def init_embeddings(nodes: Sequence[NodeRef], d: int, seed: int) -> EmbeddingMatrix:
    """Components i.i.d. uniform in [-0.5/d, 0.5/d]; small enough to avoid saturation."""
    if d < 1:
        raise ValueError("d must be >= 1")
    rng = np.random.default_rng(substream_seed(seed, "init"))
    array = rng.uniform(-0.5 / d, 0.5 / d, size=(len(nodes), d))
    return EmbeddingMatrix(nodes, array)


def _log_sigmoid(x: float) -> float:
    # -log(1 + e^-x), stable for both signs
    if x >= 0:
        return -np.log1p(np.exp(-x))
    return x - np.log1p(np.exp(x))


def joint_probability(v_i: np.ndarray, v_j: np.ndarray) -> float:
    """Sigmoid of the dot product; the model's pair probability."""
    v_i = np.asarray(v_i, dtype=np.float64)
    v_j = np.asarray(v_j, dtype=np.float64)
    if v_i.shape != v_j.shape:
        raise ValueError(f"vector length mismatch: {v_i.shape} vs {v_j.shape}")
    x = float(v_i @ v_j)
    if x >= 0:
        return 1.0 / (1.0 + np.exp(-x))
    z = np.exp(x)
    return z / (1.0 + z)


def kl_objective(m: ProximityMatrix, e: EmbeddingMatrix) -> float:
    """Sum of -s(i,j) * log p(i,j) over off-diagonal nonzero entries."""
    total = 0.0
    for (src, dst), s in m.entries.items():
        if src == dst:
            continue
        if src not in e or dst not in e:
            missing = src if src not in e else dst
            raise ValueError(f"node {missing} has no embedding vector")
        total -= s * _log_sigmoid(float(e[src] @ e[dst]))
    return total


def negative_objective(
    v_i: np.ndarray, v_j: np.ndarray, negatives: Sequence[np.ndarray]
) -> float:
    """Per-pair surrogate: log sigma(vi.vj) + sum_k log sigma(-vi.v'k); always < 0."""
    if len(negatives) < 1:
        raise ValueError("at least one negative vector required")
    v_i = np.asarray(v_i, dtype=np.float64)
    total = _log_sigmoid(float(v_i @ np.asarray(v_j, dtype=np.float64)))
    for v_k in negatives:
        total += _log_sigmoid(-float(v_i @ np.asarray(v_k, dtype=np.float64)))
    return total


def sgd_step(
    e: EmbeddingMatrix,
    pair: tuple[NodeRef, NodeRef],
    weight: float,
    negatives: Sequence[NodeRef],
    lr: float,
) -> bool:
    """In-place gradient-ascent step on the pair surrogate, scaled by `weight`.

    Returns False (and leaves the matrix untouched) if any intermediate
    is non-finite. Components are clamped to +-30 after the update.
    """
    if lr <= 0.0:
        raise ValueError("learning rate must be positive")
    i, j = (e.node_index[pair[0]], e.node_index[pair[1]])
    ks = [e.node_index[v] for v in negatives]
    arr = e.array
    v_i = arr[i].copy()
    g = 1.0 - joint_probability(v_i, arr[j])
    delta_i = g * arr[j].copy()
    delta_j = lr * weight * g * v_i
    delta_ks = []
    for k in ks:
        gk = joint_probability(v_i, arr[k])
        delta_i -= gk * arr[k]
        delta_ks.append(-lr * weight * gk * v_i)
    delta_i *= lr * weight
    updates = [delta_i, delta_j, *delta_ks]
    if not all(np.all(np.isfinite(u)) for u in updates):
        return False
    clamp = _kernels.COMPONENT_CLAMP
    arr[i] = np.clip(arr[i] + delta_i, -clamp, clamp)
    arr[j] = np.clip(arr[j] + delta_j, -clamp, clamp)
    for k, dk in zip(ks, delta_ks):
        arr[k] = np.clip(arr[k] + dk, -clamp, clamp)
    return True


def train(
    g: TypedGraph,
    cfg: TrainConfig,
    proximity: ProximityMatrix | None = None,
) -> EmbeddingMatrix:
    """Full loop: proximity, samplers, then cfg.total_samples hogwild updates.

    Single-threaded runs are bit-deterministic given cfg.seed. With
    threads > 1, workers update the shared matrix lock-free over
    disjoint global-step ranges.
    """
    cfg.validate()
    if len(g) == 0:
        raise ValueError("graph is empty")
    if proximity is None:
        proximity = truncated_proximity(g, cfg.measure, cfg.l, cfg.epsilon)
    e = init_embeddings(g.nodes, cfg.d, cfg.seed)
    if cfg.total_samples == 0:
        return e
    sampler = PairSampler(proximity, e.node_index, cfg.sampling_mode)
    noise = NoiseTable(g, e.node_index)
    proportional = cfg.sampling_mode == "alias_proportional"

    chunks = []
    base = cfg.total_samples // cfg.threads
    start = 0
    for t in range(cfg.threads):
        count = base + (1 if t < cfg.total_samples % cfg.threads else 0)
        if count:
            chunks.append((start, count, substream_seed(cfg.seed, f"sgd-worker-{t}")))
        start += count

    def run(chunk):
        st, cnt, seed = chunk
        _kernels.train_chunk(
            e.array,
            sampler.pos_i,
            sampler.pos_j,
            sampler.pos_w,
            sampler.prob,
            sampler.alias,
            noise.node_ids,
            noise.prob,
            noise.alias,
            cfg.negatives,
            proportional,
            cfg.rho0,
            cfg.total_samples,
            st,
            cnt,
            np.uint64(seed),
        )

    if len(chunks) == 1:
        run(chunks[0])
    else:
        workers = [threading.Thread(target=run, args=(c,)) for c in chunks]
        for w in workers:
            w.start()
        for w in workers:
            w.join()
    return e
