import math

import numpy as np
import pytest

from hinembed.evalkit import (
    _auc_from_scores,
    auc_link_recovery,
    cluster_nmi,
    footrule_distance,
    kendall_distance,
    knn_classify,
    knn_query,
    load_labels,
    nmi,
)
from hinembed.graph import EdgeTypeLabel, NodeRef, load_graph
from hinembed.trainer import EmbeddingMatrix


def refs(*ids, type_label="X"):
    return [NodeRef(type_label, i) for i in ids]


def embedding_of(mapping):
    nodes = list(mapping)
    return EmbeddingMatrix(nodes, np.array([mapping[v] for v in nodes], dtype=np.float64))


# ---------------------------------------------------------------- auc


def test_auc_from_scores_hand_cases():
    # perfect separation
    assert _auc_from_scores(np.array([3.0, 2.0, 1.0, 0.0]),
                            np.array([True, True, False, False])) == 1.0
    # all tied: half credit
    assert _auc_from_scores(np.array([1.0, 1.0, 1.0, 1.0]),
                            np.array([True, True, False, False])) == 0.5
    # one inversion among 2x2 pairs
    assert _auc_from_scores(np.array([3.0, 1.0, 2.0, 0.0]),
                            np.array([True, True, False, False])) == 0.75


def test_auc_monotone_transform_invariant():
    rng = np.random.default_rng(4)
    for _ in range(10):
        scores = rng.normal(size=50)
        flags = rng.random(50) < 0.3
        if not flags.any() or flags.all():
            continue
        base = _auc_from_scores(scores, flags)
        squashed = 1.0 / (1.0 + np.exp(-scores))
        assert _auc_from_scores(squashed, flags) == pytest.approx(base, abs=1e-12)


def test_auc_link_recovery_perfect():
    g = load_graph(["a1\tA\tr\tb1\tB", "a2\tA\tr\tb2\tB"])
    e = embedding_of({
        NodeRef("A", "a1"): [1.0, 0.0],
        NodeRef("A", "a2"): [0.0, 1.0],
        NodeRef("B", "b1"): [1.0, 0.0],
        NodeRef("B", "b2"): [0.0, 1.0],
    })
    sig = ("A", EdgeTypeLabel("r"), "B")
    assert auc_link_recovery(g, e, sig) == 1.0


def test_auc_link_recovery_excludes_self_pairs():
    g = load_graph(["x1\tX\tr\tx2\tX"])
    e = embedding_of({
        NodeRef("X", "x1"): [5.0],  # self-dot would dominate if counted
        NodeRef("X", "x2"): [1.0],
    })
    auc = auc_link_recovery(g, e, ("X", EdgeTypeLabel("r"), "X"))
    # pairs: (x1,x2) score 5 positive, (x2,x1) score 5 negative -> tie
    assert auc == 0.5


def test_auc_link_recovery_rejects_inverse_and_degenerate():
    g = load_graph(["a1\tA\tr\tb1\tB"])
    e = embedding_of({NodeRef("A", "a1"): [1.0], NodeRef("B", "b1"): [1.0]})
    with pytest.raises(ValueError, match="forward"):
        auc_link_recovery(g, e, ("B", EdgeTypeLabel("r", is_inverse=True), "A"))
    with pytest.raises(ValueError, match="undefined"):
        # single (a, b) pair is positive, so there are no negatives
        auc_link_recovery(g, e, ("A", EdgeTypeLabel("r"), "B"))


# ---------------------------------------------------------------- knn classify


def two_cloud_embedding(n_per_class, spread, seed):
    rng = np.random.default_rng(seed)
    mapping, labels = {}, {}
    for c, center in enumerate(([0.0, 0.0], [10.0, 10.0])):
        for i in range(n_per_class):
            v = NodeRef("X", f"c{c}_{i}")
            mapping[v] = np.asarray(center) + rng.normal(scale=spread, size=2)
            labels[v] = f"class{c}"
    return embedding_of(mapping), labels


def test_knn_classify_separated_clouds():
    e, labels = two_cloud_embedding(25, spread=0.5, seed=0)
    macro, micro = knn_classify(e, labels, k=5, seed=3)
    assert macro == 1.0 and micro == 1.0


def test_knn_classify_random_labels_near_chance():
    rng = np.random.default_rng(8)
    mapping = {NodeRef("X", f"n{i}"): rng.normal(size=3) for i in range(200)}
    labels = {v: rng.choice(["a", "b"]) for v in mapping}
    macro, micro = knn_classify(embedding_of(mapping), labels, k=5, seed=1)
    assert 0.3 < micro < 0.7


def test_knn_classify_deterministic():
    e, labels = two_cloud_embedding(20, spread=3.0, seed=2)
    assert knn_classify(e, labels, seed=5) == knn_classify(e, labels, seed=5)


def test_knn_classify_missing_vector():
    e, labels = two_cloud_embedding(10, spread=0.5, seed=0)
    labels[NodeRef("X", "ghost")] = "class0"
    with pytest.raises(ValueError, match="no embedding"):
        knn_classify(e, labels)


def test_knn_majority_vote():
    from hinembed.evalkit import _knn_predict

    train_x = np.array([[0.0], [0.1], [0.2], [5.0], [5.1]])
    train_y = ["a", "a", "a", "b", "b"]
    assert _knn_predict(train_x, train_y, np.array([[0.05]]), k=5) == ["a"]


def test_knn_tie_breaks_by_distance_then_label():
    from hinembed.evalkit import _knn_predict

    # 1 vote each; "a" neighbor is closer
    train_x = np.array([[0.0], [1.0]])
    assert _knn_predict(train_x, ["a", "b"], np.array([[0.2]]), k=2) == ["a"]
    # equidistant: lexicographically smaller label wins
    assert _knn_predict(train_x, ["b", "a"], np.array([[0.5]]), k=2) == ["a"]


# ---------------------------------------------------------------- nmi


def test_nmi_identical_partitions():
    assert nmi([0, 0, 1, 1, 2], [5, 5, 6, 6, 7]) == pytest.approx(1.0)


def test_nmi_degenerate_partition():
    assert nmi([0, 0, 0, 0], [1, 2, 1, 2]) == 0.0
    assert nmi([1, 2, 1, 2], [0, 0, 0, 0]) == 0.0


def test_nmi_independent_blocks():
    # each cluster of a splits evenly across b: zero mutual information
    assert nmi(["a", "a", "b", "b"], [1, 2, 1, 2]) == pytest.approx(0.0, abs=1e-12)


def test_nmi_label_permutation_invariant():
    rng = np.random.default_rng(6)
    a = rng.integers(0, 4, size=100).tolist()
    b = rng.integers(0, 3, size=100).tolist()
    remap = {0: 9, 1: 4, 2: 7, 3: 1}
    assert nmi([remap[x] for x in a], b) == pytest.approx(nmi(a, b), abs=1e-12)


def test_cluster_nmi_separated_clouds():
    e, labels = two_cloud_embedding(30, spread=0.3, seed=1)
    assert cluster_nmi(e, labels, seed=2) == pytest.approx(1.0)


# ---------------------------------------------------------------- knn query


def test_knn_query_order_and_exclusion():
    q = NodeRef("X", "q")
    e = embedding_of({
        q: [1.0, 0.0],
        NodeRef("X", "a"): [3.0, 0.0],
        NodeRef("X", "b"): [2.0, 0.0],
        NodeRef("X", "c"): [-1.0, 0.0],
    })
    assert knn_query(e, q, 3) == refs("a", "b", "c")
    assert knn_query(e, q, 2) == refs("a", "b")


def test_knn_query_tie_break_by_node_order():
    q = NodeRef("X", "q")
    e = embedding_of({
        q: [1.0],
        NodeRef("X", "b"): [2.0],
        NodeRef("X", "a"): [2.0],
    })
    assert knn_query(e, q, 2) == refs("a", "b")


def test_knn_query_type_filter():
    q = NodeRef("X", "q")
    e = embedding_of({
        q: [1.0],
        NodeRef("Y", "y"): [9.0],
        NodeRef("X", "a"): [2.0],
    })
    assert knn_query(e, q, 5, type_filter="Y") == [NodeRef("Y", "y")]
    assert knn_query(e, q, 5, type_filter="Z") == []


def test_knn_query_unknown_node():
    e = embedding_of({NodeRef("X", "a"): [1.0]})
    with pytest.raises(ValueError, match="no embedding"):
        knn_query(e, NodeRef("X", "zzz"), 1)


# ---------------------------------------------------------------- rank distances


def test_footrule_hand_cases():
    a = refs("x", "y", "z")
    assert footrule_distance(a, a) == 0.0
    assert footrule_distance(a, list(reversed(a))) == 4.0
    # disjoint top-2 lists: every element moves from its slot to k+1=3
    assert footrule_distance(refs("x", "y"), refs("u", "v")) == 6.0


def test_kendall_hand_cases():
    a = refs("x", "y", "z")
    assert kendall_distance(a, a) == 0.0
    assert kendall_distance(a, list(reversed(a))) == 3.0
    assert kendall_distance(refs("x", "y"), refs("x", "z")) == 1.0
    # fully disjoint: each cross pair is definitely discordant
    assert kendall_distance(refs("x", "y"), refs("u", "v")) == 4.0


def test_rank_distances_validate_inputs():
    for fn in (footrule_distance, kendall_distance):
        with pytest.raises(ValueError, match="equal length"):
            fn(refs("x"), refs("x", "y"))
        with pytest.raises(ValueError, match="duplicates"):
            fn(refs("x", "x"), refs("x", "y"))


def random_topk(rng, universe, k):
    idx = rng.choice(len(universe), size=k, replace=False)
    return [universe[i] for i in idx]


@pytest.mark.parametrize("fn", [footrule_distance, kendall_distance])
def test_rank_distance_symmetry_and_identity(fn):
    rng = np.random.default_rng(13)
    universe = refs(*[f"u{i}" for i in range(20)])
    for _ in range(200):
        k = int(rng.integers(1, 11))
        a, b = random_topk(rng, universe, k), random_topk(rng, universe, k)
        assert fn(a, b) == fn(b, a)
        assert fn(a, a) == 0.0
        if a != b:
            assert fn(a, b) > 0.0


@pytest.mark.parametrize("fn", [footrule_distance, kendall_distance])
def test_rank_distance_triangle_spot_check(fn):
    rng = np.random.default_rng(17)
    universe = refs(*[f"u{i}" for i in range(14)])
    for _ in range(1000):
        k = 10
        a = random_topk(rng, universe, k)
        b = random_topk(rng, universe, k)
        c = random_topk(rng, universe, k)
        assert fn(a, c) <= fn(a, b) + fn(b, c) + 1e-9


def kendall_positional_oracle(a, b):
    """Place missing elements at position k+1 and count strictly opposite pairs."""
    k = len(a)
    pos_a = {x: i for i, x in enumerate(a)}
    pos_b = {x: i for i, x in enumerate(b)}
    union = list(set(a) | set(b))
    d = 0
    for i, x in enumerate(union):
        for y in union[i + 1:]:
            da = pos_a.get(x, k) - pos_a.get(y, k)
            db = pos_b.get(x, k) - pos_b.get(y, k)
            if da * db < 0:
                d += 1
    return float(d)


def test_kendall_matches_positional_oracle():
    rng = np.random.default_rng(21)
    universe = refs(*[f"u{i}" for i in range(25)])
    for _ in range(300):
        k = int(rng.integers(1, 11))
        a, b = random_topk(rng, universe, k), random_topk(rng, universe, k)
        assert kendall_distance(a, b) == kendall_positional_oracle(a, b)


# ---------------------------------------------------------------- labels io


def test_load_labels():
    labels = load_labels(["# comment", "A:a1\tmath", "", "A:a2\tbio"])
    assert labels == {NodeRef("A", "a1"): "math", NodeRef("A", "a2"): "bio"}


def test_load_labels_rejects_bad_lines():
    with pytest.raises(ValueError):
        load_labels(["A:a1"])
    with pytest.raises(ValueError):
        load_labels(["A:a1\tmath\textra"])
