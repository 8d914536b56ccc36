"""Compiled kernels for random walks and skip-gram negative sampling.

Everything here is deterministic: walk generation derives one xorshift64
stream per (seed, node, walk-index) so results do not depend on scheduling,
and training runs a single stream in corpus order. Kernels are cached to
keep repeat CLI invocations fast.
"""

from __future__ import annotations

import numpy as np
from numba import njit

U13 = np.uint64(13)
U7 = np.uint64(7)
U17 = np.uint64(17)


@njit(cache=True)
def _splitmix64(x):
    z = x + np.uint64(0x9E3779B97F4A7C15)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@njit(cache=True)
def generate_walks(indptr, indices, cumw, starts, streams, walk_length, seed):
    """Weighted random walks; row wi starts at starts[wi].

    Rows are padded with -1 past a dead end (a start node with no
    neighbors), which is the only way a walk ends early on an undirected
    graph.
    """
    n_walks = starts.shape[0]
    walks = np.full((n_walks, walk_length), -1, dtype=np.int32)
    for wi in range(n_walks):
        state = _splitmix64(np.uint64(seed) ^ _splitmix64(streams[wi] + np.uint64(1)))
        if state == np.uint64(0):
            state = np.uint64(0x9E3779B97F4A7C15)
        cur = starts[wi]
        walks[wi, 0] = cur
        for step in range(1, walk_length):
            lo = indptr[cur]
            hi = indptr[cur + 1]
            if hi == lo:
                break
            state ^= state << U13
            state ^= state >> U7
            state ^= state << U17
            r = (state >> np.uint64(11)) * (1.0 / 9007199254740992.0)
            target = r * cumw[hi - 1]
            a = lo
            b = hi - 1
            while a < b:
                mid = (a + b) // 2
                if cumw[mid] > target:
                    b = mid
                else:
                    a = mid + 1
            cur = indices[a]
            walks[wi, step] = cur
    return walks


@njit(cache=True)
def train_sgns(walks, syn0, syn1, window, negatives, table, initial_lr,
               epochs, seed, total_tokens):
    """Skip-gram with negative sampling over a fixed walk corpus.

    Updates syn0 (input vectors) and syn1 (output vectors) in place; the
    learning rate decays linearly from initial_lr to initial_lr/100 over all
    center positions. An accidental draw of the positive node is skipped,
    not resampled. Returns the mean sampled loss per epoch.
    """
    state = _splitmix64(np.uint64(seed) + np.uint64(0x632BE59BD9B4E019))
    if state == np.uint64(0):
        state = np.uint64(0x9E3779B97F4A7C15)
    n_walks, length = walks.shape
    dim = syn0.shape[1]
    work = np.empty(dim, dtype=np.float32)
    tsize = np.uint64(table.shape[0])
    uwindow = np.uint64(window)
    losses = np.zeros(epochs)
    counts = np.zeros(epochs, dtype=np.int64)
    total = float(epochs) * float(total_tokens)
    min_lr = initial_lr / 100.0
    processed = 0
    for ep in range(epochs):
        for wi in range(n_walks):
            for pos in range(length):
                center = walks[wi, pos]
                if center < 0:
                    break
                alpha = initial_lr * (1.0 - processed / total)
                if alpha < min_lr:
                    alpha = min_lr
                processed += 1
                state ^= state << U13
                state ^= state >> U7
                state ^= state << U17
                shrink = int(state % uwindow)
                reach = window - shrink
                lo = pos - reach
                if lo < 0:
                    lo = 0
                hi = pos + reach + 1
                if hi > length:
                    hi = length
                for cpos in range(lo, hi):
                    if cpos == pos:
                        continue
                    ctx = walks[wi, cpos]
                    if ctx < 0:
                        break
                    for k in range(dim):
                        work[k] = 0.0
                    for neg in range(negatives + 1):
                        if neg == 0:
                            target = ctx
                            label = 1.0
                        else:
                            state ^= state << U13
                            state ^= state >> U7
                            state ^= state << U17
                            target = table[int(state % tsize)]
                            if target == ctx:
                                continue
                            label = 0.0
                        f = 0.0
                        for k in range(dim):
                            f += syn0[center, k] * syn1[target, k]
                        if f >= 0.0:
                            sig = 1.0 / (1.0 + np.exp(-f))
                            loss = np.log1p(np.exp(-f)) if label == 1.0 else f + np.log1p(np.exp(-f))
                        else:
                            e = np.exp(f)
                            sig = e / (1.0 + e)
                            loss = -f + np.log1p(e) if label == 1.0 else np.log1p(e)
                        losses[ep] += loss
                        counts[ep] += 1
                        g = (label - sig) * alpha
                        for k in range(dim):
                            work[k] += g * syn1[target, k]
                            syn1[target, k] += g * syn0[center, k]
                    for k in range(dim):
                        syn0[center, k] += work[k]
    for ep in range(epochs):
        if counts[ep] > 0:
            losses[ep] /= counts[ep]
    return losses
