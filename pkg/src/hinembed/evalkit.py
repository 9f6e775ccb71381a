"""Evaluation battery: link-recovery AUC, kNN F1, clustering NMI, top-k rank distances."""

from __future__ import annotations

from collections import Counter
from typing import Iterable, Sequence

import numpy as np
from scipy.stats import rankdata
from sklearn.cluster import KMeans
from sklearn.metrics import f1_score, mutual_info_score

from .graph import EdgeTypeLabel, NodeRef, TypedGraph
from .trainer import EmbeddingMatrix, substream_seed

LabeledNodes = dict[NodeRef, str]


def load_labels(source: Iterable[str]) -> LabeledNodes:
    """TSV `type:id<TAB>label` per line."""
    labels: LabeledNodes = {}
    for line_no, raw in enumerate(source, start=1):
        line = raw.rstrip("\n")
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2 or not parts[1]:
            raise ValueError(f"line {line_no}: expected 'type:id<TAB>label'")
        labels[NodeRef.parse(parts[0])] = parts[1]
    return labels


def auc_link_recovery(
    g: TypedGraph,
    e: EmbeddingMatrix,
    edge_sig: tuple[str, EdgeTypeLabel, str],
) -> float:
    """AUC of dot-product scores over all ordered type-compatible pairs.

    Ground truth is forward-edge presence for the signature; self-pairs
    are excluded. Ties get half credit (exact rank-statistic AUC).
    """
    src_type, etype, dst_type = edge_sig
    if etype.is_inverse:
        raise ValueError("link recovery uses forward (pre-augmentation) edge types")
    sources = [v for v in e.nodes if v.type_label == src_type]
    targets = [v for v in e.nodes if v.type_label == dst_type]
    if not sources or not targets:
        raise ValueError(f"no nodes of type {src_type!r} or {dst_type!r}")
    positives = {
        (s, t)
        for s, r, t in g.edges
        if r == etype and s.type_label == src_type and t.type_label == dst_type
    }
    src_arr = np.stack([e[v] for v in sources])
    dst_arr = np.stack([e[v] for v in targets])
    scores = src_arr @ dst_arr.T
    is_pos = np.zeros(scores.shape, dtype=bool)
    target_index = {v: i for i, v in enumerate(targets)}
    source_index = {v: i for i, v in enumerate(sources)}
    for s, t in positives:
        is_pos[source_index[s], target_index[t]] = True
    keep = np.ones(scores.shape, dtype=bool)
    if src_type == dst_type:
        for i, s in enumerate(sources):
            j = target_index.get(s)
            if j is not None:
                keep[i, j] = False
    flat_scores = scores[keep]
    flat_pos = is_pos[keep]
    n_pos = int(flat_pos.sum())
    n_neg = flat_pos.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError(f"signature {src_type}-{etype}-{dst_type}: AUC undefined "
                         f"({n_pos} positives, {n_neg} negatives)")
    return _auc_from_scores(flat_scores, flat_pos)


def _auc_from_scores(scores: np.ndarray, is_positive: np.ndarray) -> float:
    n_pos = int(is_positive.sum())
    n_neg = is_positive.size - n_pos
    ranks = rankdata(scores)
    return (ranks[is_positive].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg)


def _knn_predict(
    train_x: np.ndarray, train_y: list[str], test_x: np.ndarray, k: int
) -> list[str]:
    # majority label among the k nearest by Euclidean distance;
    # ties: smaller distance sum among the tied labels, then lexicographic
    dists = np.sqrt(((test_x[:, None, :] - train_x[None, :, :]) ** 2).sum(axis=2))
    predictions = []
    for row in dists:
        order = np.argsort(row, kind="stable")[:k]
        counts: Counter[str] = Counter(train_y[i] for i in order)
        best = max(counts.values())
        tied = [lab for lab, c in counts.items() if c == best]
        if len(tied) > 1:
            sums = {
                lab: sum(row[i] for i in order if train_y[i] == lab) for lab in tied
            }
            smallest = min(sums.values())
            tied = sorted(lab for lab, s in sums.items() if s == smallest)
        predictions.append(tied[0])
    return predictions


def knn_classify(
    e: EmbeddingMatrix,
    labels: LabeledNodes,
    k: int = 5,
    test_fraction: float = 0.2,
    repeats: int = 10,
    seed: int = 1,
) -> tuple[float, float]:
    """Repeated 4:1 split kNN classification; returns (macro_f1, micro_f1) averages.

    A repeat whose training split misses a class is resampled, up to
    100 attempts.
    """
    nodes = sorted(labels)
    missing = [v for v in nodes if v not in e]
    if missing:
        raise ValueError(f"node {missing[0]} has no embedding vector")
    x = np.stack([e[v] for v in nodes])
    y = [labels[v] for v in nodes]
    classes = set(y)
    if len(classes) < 2:
        raise ValueError("classification needs at least 2 distinct labels")
    n_test = max(1, int(round(len(nodes) * test_fraction)))
    if len(nodes) - n_test < k:
        raise ValueError(f"training split smaller than k={k}")
    macro, micro = [], []
    for rep in range(repeats):
        rng = np.random.default_rng(substream_seed(seed, f"split-{rep}"))
        for attempt in range(100):
            perm = rng.permutation(len(nodes))
            test_idx, train_idx = perm[:n_test], perm[n_test:]
            train_y = [y[i] for i in train_idx]
            if set(train_y) == classes:
                break
        else:
            raise ValueError("could not sample a split covering every class")
        pred = _knn_predict(x[train_idx], train_y, x[test_idx], k)
        truth = [y[i] for i in test_idx]
        macro.append(f1_score(truth, pred, average="macro", zero_division=0))
        micro.append(f1_score(truth, pred, average="micro", zero_division=0))
    return float(np.mean(macro)), float(np.mean(micro))


def cluster_nmi(e: EmbeddingMatrix, labels: LabeledNodes, seed: int = 1) -> float:
    """k-means (k-means++ seeding, 10 restarts) NMI against the labels.

    NMI = I(C;L) / sqrt(H(C) H(L)), defined as 0 when either entropy
    is 0.
    """
    nodes = sorted(labels)
    missing = [v for v in nodes if v not in e]
    if missing:
        raise ValueError(f"node {missing[0]} has no embedding vector")
    truth = [labels[v] for v in nodes]
    n_clusters = len(set(truth))
    if len(nodes) < n_clusters:
        raise ValueError("fewer labeled nodes than clusters")
    x = np.stack([e[v] for v in nodes])
    km = KMeans(n_clusters=n_clusters, init="k-means++", n_init=10,
                random_state=substream_seed(seed, "kmeans") % (2**32))
    assigned = km.fit_predict(x)
    return nmi(assigned.tolist(), truth)


def _entropy(items: Sequence) -> float:
    counts = np.array(list(Counter(items).values()), dtype=np.float64)
    p = counts / counts.sum()
    return float(-(p * np.log(p)).sum())


def nmi(a: Sequence, b: Sequence) -> float:
    h_a, h_b = _entropy(a), _entropy(b)
    if h_a == 0.0 or h_b == 0.0:
        return 0.0
    return float(mutual_info_score(a, b) / np.sqrt(h_a * h_b))


def knn_query(
    e: EmbeddingMatrix,
    query: NodeRef,
    k: int,
    type_filter: str | None = None,
) -> list[NodeRef]:
    """Top-k nodes by dot product with the query vector, query excluded.

    Deterministic: ties are broken by NodeRef order. Returns fewer
    than k entries when the candidate pool is smaller.
    """
    if query not in e:
        raise ValueError(f"query node {query} has no embedding vector")
    q = e[query]
    candidates = [
        v for v in e.nodes
        if v != query and (type_filter is None or v.type_label == type_filter)
    ]
    scored = sorted(((-float(q @ e[v]), v) for v in candidates))
    return [v for _, v in scored[:k]]


def _check_ranked_list(a: Sequence[NodeRef], b: Sequence[NodeRef]) -> None:
    if len(a) != len(b):
        raise ValueError("ranked lists must have equal length")
    if len(set(a)) != len(a) or len(set(b)) != len(b):
        raise ValueError("ranked lists must not contain duplicates")


def footrule_distance(a: Sequence[NodeRef], b: Sequence[NodeRef]) -> float:
    """Spearman footrule over the union; missing elements sit at position k+1."""
    _check_ranked_list(a, b)
    k = len(a)
    pos_a = {x: i + 1 for i, x in enumerate(a)}
    pos_b = {x: i + 1 for i, x in enumerate(b)}
    return float(
        sum(abs(pos_a.get(x, k + 1) - pos_b.get(x, k + 1)) for x in set(a) | set(b))
    )


def kendall_distance(a: Sequence[NodeRef], b: Sequence[NodeRef]) -> float:
    """Top-k Kendall distance with the optimistic (p = 0) missing-pair convention.

    Pairs present in both lists count when ordered oppositely; an
    element present in only one list ranks below every element of the
    other; pairs seen in neither order determinately contribute 0.
    """
    _check_ranked_list(a, b)
    pos_a = {x: i for i, x in enumerate(a)}
    pos_b = {x: i for i, x in enumerate(b)}
    union = sorted(set(a) | set(b), key=str)
    distance = 0
    for idx, x in enumerate(union):
        for y in union[idx + 1:]:
            in_a = x in pos_a and y in pos_a
            in_b = x in pos_b and y in pos_b
            if in_a and in_b:
                if (pos_a[x] - pos_a[y]) * (pos_b[x] - pos_b[y]) < 0:
                    distance += 1
            elif in_a:
                # the one of {x, y} present in b ranks above the absent one
                present_b = x if x in pos_b else (y if y in pos_b else None)
                if present_b is not None:
                    absent_b = y if present_b is x else x
                    if pos_a[absent_b] < pos_a[present_b]:
                        distance += 1
            elif in_b:
                present_a = x if x in pos_a else (y if y in pos_a else None)
                if present_a is not None:
                    absent_a = y if present_a is x else x
                    if pos_b[absent_a] < pos_b[present_a]:
                        distance += 1
            else:
                # x only in a, y only in b (or vice versa): opposite orders
                distance += 1
    return float(distance)
