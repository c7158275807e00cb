"""Pure-Python reference for the compiled kernels in ``_kernels.pyx``.

Every uniform is drawn with ``Generator.random()`` in the same order as
the compiled code draws ``next_double``, so results are identical.
"""
import numpy as np


def _below(rng, k):
    j = int(rng.random() * k)
    return k - 1 if j >= k else j


def _shuffle_from(base, rng):
    out = list(base)
    for j in range(len(out) - 1, 0, -1):
        k = _below(rng, j + 1)
        out[j], out[k] = out[k], out[j]
    return out


def _score(vidx, vals, nv, a, b):
    cnt = [0] * nv
    for x, y in zip(a, b):
        cnt[vidx[x][y]] += 1
    acc = 0.0
    for j in range(nv):
        if cnt[j] > 0:
            acc += float(cnt[j]) * vals[j]
    return acc


def _distance(d_vidx, d_vals, d_nv, a, b):
    n = len(a)
    best = 0.0
    for t in range(len(d_vidx)):
        v = _score(d_vidx[t], d_vals[t], d_nv[t], a, b) / n
        if t == 0 or v < best:
            best = v
    return best


def _fill_codebook(base, m, d_vidx, d_vals, d_nv, delta_cap, rng, max_stall):
    words = []
    proposals = 0
    for i in range(m):
        stall = 0
        while True:
            cand = _shuffle_from(base, rng)
            proposals += 1
            if all(_distance(d_vidx, d_vals, d_nv, cand, words[j]) > delta_cap for j in range(i)):
                words.append(cand)
                break
            stall += 1
            if stall > max_stall:
                raise RuntimeError(
                    f"candidate set appears empty: more than {max_stall} consecutive rejections")
    return words, proposals


def _lists(d_vidx, d_vals, d_nv):
    return (np.asarray(d_vidx, dtype=np.int64).tolist(),
            np.asarray(d_vals, dtype=float).tolist(),
            [int(v) for v in d_nv])


def generate_rejection(base, m, d_vidx, d_vals, d_nv, delta_cap, bit_generator, max_stall=1000000):
    rng = np.random.Generator(bit_generator)
    dv, dvals, dnv = _lists(d_vidx, d_vals, d_nv)
    words, proposals = _fill_codebook([int(b) for b in base], m, dv, dvals, dnv, delta_cap, rng, max_stall)
    return np.array(words, dtype=np.int64).reshape(m, len(base)), proposals


def mc_trials(base, m, d_vidx, d_vals, d_nv, delta_cap, q_vidx, q_vals, wcdf, trials,
              bit_generator, fixed_codebook=False, max_stall=1000000):
    rng = np.random.Generator(bit_generator)
    dv, dvals, dnv = _lists(d_vidx, d_vals, d_nv)
    qv = np.asarray(q_vidx, dtype=np.int64).tolist()
    qvals = np.asarray(q_vals, dtype=float).tolist()
    q_nv = len(qvals)
    cdf = np.asarray(wcdf, dtype=float).tolist()
    ny = len(cdf[0])
    base = [int(b) for b in base]
    n = len(base)
    beaten = ties = proposals = 0
    words = None
    for t in range(trials):
        if t == 0 or not fixed_codebook:
            words, k = _fill_codebook(base, m, dv, dvals, dnv, delta_cap, rng, max_stall)
            proposals += k
        msg = _below(rng, m)
        y = [0] * n
        sent_word = words[msg]
        for j in range(n):
            u = rng.random()
            row = cdf[sent_word[j]]
            b = 0
            while b < ny - 1 and u >= row[b]:
                b += 1
            y[j] = b
        sent = _score(qv, qvals, q_nv, sent_word, y)
        tie = beat = False
        for c in range(m):
            if c == msg:
                continue
            other = _score(qv, qvals, q_nv, words[c], y)
            if other > sent:
                beat = True
                break
            if other == sent:
                tie = True
        if beat:
            beaten += 1
        elif tie:
            ties += 1
    return beaten, ties, proposals
