"""Compiled CBOW / negative-sampling training loop.

Randomness comes from the 64-bit linear congruential generator used by the
original word2vec tool, so a run is fully determined by its seed.
"""

import numpy as np
from numba import njit

_LCG_MUL = np.uint64(25214903917)
_LCG_ADD = np.uint64(11)


@njit(cache=True)
def _next(state):
    return state * _LCG_MUL + _LCG_ADD


@njit(cache=True)
def train_epochs(
    syn0,
    syn1neg,
    tokens,
    offsets,
    cum_table,
    window,
    negative,
    epochs,
    lr_start,
    lr_end,
    seed,
):
    """Run ``epochs`` passes of CBOW over the flattened corpus, updating in place.

    ``tokens`` holds vocabulary indices of every sentence back to back and
    ``offsets[i]:offsets[i+1]`` delimits sentence ``i``.
    """
    dim = syn0.shape[1]
    n_sentences = offsets.shape[0] - 1
    n_tokens = tokens.shape[0]
    total = float(epochs) * float(n_tokens)
    table_max = cum_table[cum_table.shape[0] - 1]
    state = np.uint64(seed) + np.uint64(1)
    neu1 = np.zeros(dim)
    neu1e = np.zeros(dim)
    processed = 0.0
    for _ in range(epochs):
        for s in range(n_sentences):
            start = offsets[s]
            stop = offsets[s + 1]
            for pos in range(start, stop):
                lr = lr_start - (lr_start - lr_end) * (processed / total)
                if lr < lr_end:
                    lr = lr_end
                processed += 1.0
                state = _next(state)
                b = np.int64(state % np.uint64(window))
                lo = pos - window + b
                if lo < start:
                    lo = start
                hi = pos + window - b + 1
                if hi > stop:
                    hi = stop
                for d in range(dim):
                    neu1[d] = 0.0
                    neu1e[d] = 0.0
                cw = 0
                for c in range(lo, hi):
                    if c == pos:
                        continue
                    w = tokens[c]
                    for d in range(dim):
                        neu1[d] += syn0[w, d]
                    cw += 1
                if cw == 0:
                    continue
                for d in range(dim):
                    neu1[d] /= cw
                word = tokens[pos]
                for k in range(negative + 1):
                    if k == 0:
                        target = word
                        label = 1.0
                    else:
                        state = _next(state)
                        r = (state >> np.uint64(16)) % table_max
                        target = np.searchsorted(cum_table, r, side="right")
                        if target == word:
                            continue
                        label = 0.0
                    f = 0.0
                    for d in range(dim):
                        f += neu1[d] * syn1neg[target, d]
                    if f > 30.0:
                        g = (label - 1.0) * lr
                    elif f < -30.0:
                        g = label * lr
                    else:
                        g = (label - 1.0 / (1.0 + np.exp(-f))) * lr
                    for d in range(dim):
                        neu1e[d] += g * syn1neg[target, d]
                        syn1neg[target, d] += g * neu1[d]
                for c in range(lo, hi):
                    if c == pos:
                        continue
                    w = tokens[c]
                    for d in range(dim):
                        syn0[w, d] += neu1e[d]
