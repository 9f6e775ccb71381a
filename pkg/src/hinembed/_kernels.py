"""Numba kernels for the training inner loop (GIL-free for hogwild threads)."""

from __future__ import annotations

import numpy as np
from numba import njit

COMPONENT_CLAMP = 30.0


@njit(cache=True, nogil=True, inline="always")
def _splitmix64(state):
    # state: uint64[1], mutated in place
    state[0] = state[0] + np.uint64(0x9E3779B97F4A7C15)
    z = state[0]
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@njit(cache=True, nogil=True, inline="always")
def _rand_f64(state):
    return float(_splitmix64(state) >> np.uint64(11)) * (1.0 / 9007199254740992.0)


@njit(cache=True, nogil=True, inline="always")
def _alias_draw(prob, alias, state):
    i = int(_rand_f64(state) * prob.shape[0])
    if i >= prob.shape[0]:
        i = prob.shape[0] - 1
    if _rand_f64(state) < prob[i]:
        return i
    return alias[i]


@njit(cache=True, nogil=True, inline="always")
def _sigmoid(x):
    if x >= 0.0:
        return 1.0 / (1.0 + np.exp(-x))
    z = np.exp(x)
    return z / (1.0 + z)


@njit(cache=True, nogil=True)
def apply_update(emb, i, j, negatives, n_neg, weight, lr):
    """One gradient-ascent step on the negative-sampled pair objective.

    v_i accumulates into a buffer first so the negative terms see a
    consistent v_i; all touched components are clamped afterwards.
    """
    d = emb.shape[1]
    buf = np.zeros(d)
    dot = 0.0
    for c in range(d):
        dot += emb[i, c] * emb[j, c]
    g = _sigmoid(-dot)
    for c in range(d):
        buf[c] += g * emb[j, c]
        emb[j, c] += lr * weight * g * emb[i, c]
    for t in range(n_neg):
        k = negatives[t]
        dk = 0.0
        for c in range(d):
            dk += emb[i, c] * emb[k, c]
        gk = _sigmoid(dk)
        for c in range(d):
            buf[c] -= gk * emb[k, c]
            emb[k, c] -= lr * weight * gk * emb[i, c]
        for c in range(d):
            if emb[k, c] > COMPONENT_CLAMP:
                emb[k, c] = COMPONENT_CLAMP
            elif emb[k, c] < -COMPONENT_CLAMP:
                emb[k, c] = -COMPONENT_CLAMP
    for c in range(d):
        emb[i, c] += lr * weight * buf[c]
        if emb[i, c] > COMPONENT_CLAMP:
            emb[i, c] = COMPONENT_CLAMP
        elif emb[i, c] < -COMPONENT_CLAMP:
            emb[i, c] = -COMPONENT_CLAMP
        if emb[j, c] > COMPONENT_CLAMP:
            emb[j, c] = COMPONENT_CLAMP
        elif emb[j, c] < -COMPONENT_CLAMP:
            emb[j, c] = -COMPONENT_CLAMP


@njit(cache=True, nogil=True)
def train_chunk(
    emb,
    pos_i,
    pos_j,
    pos_w,
    pair_prob,
    pair_alias,
    noise_nodes,
    noise_prob,
    noise_alias,
    n_negatives,
    proportional,
    rho0,
    total,
    start,
    count,
    seed,
):
    """Run `count` positive-pair updates for global steps [start, start+count).

    Learning rate decays linearly in the global step with a 1e-4 floor.
    In proportional mode pairs are drawn by the alias table over scores
    with unit weight; otherwise uniformly with the score as weight.
    """
    state = np.empty(1, dtype=np.uint64)
    state[0] = seed
    negatives = np.empty(n_negatives, dtype=np.int64)
    n_pairs = pos_i.shape[0]
    for t in range(start, start + count):
        lr = rho0 * max(1.0 - t / total, 1e-4)
        if proportional:
            idx = _alias_draw(pair_prob, pair_alias, state)
            weight = 1.0
        else:
            idx = int(_rand_f64(state) * n_pairs)
            if idx >= n_pairs:
                idx = n_pairs - 1
            weight = pos_w[idx]
        i = pos_i[idx]
        j = pos_j[idx]
        n_neg = 0
        for _ in range(n_negatives):
            cand = noise_nodes[_alias_draw(noise_prob, noise_alias, state)]
            if cand == j or cand == i:
                continue
            negatives[n_neg] = cand
            n_neg += 1
        apply_update(emb, i, j, negatives, n_neg, weight, lr)
