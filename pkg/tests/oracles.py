"""Independent reference implementations used as test oracles.

Nothing here imports the code under test's numerical routines: the CRF
oracles enumerate every label sequence, the LSTM oracle is a scalar-loop
re-implementation, and gradients are checked by central differences.
"""
from itertools import product
from math import exp, log, tanh

import numpy as np

LABELS = ("O", "B-Arg1", "I-Arg1", "B-Arg2", "I-Arg2")


def admissible(seq):
    """BIO validity written out longhand, independent of the library's checker."""
    prev = "O"
    for i, lab in enumerate(seq):
        if lab.startswith("I-"):
            role = lab[2:]
            if i == 0 or prev not in ("B-" + role, "I-" + role):
                return False
        prev = lab
    return True


def brute_score(trans, start, end, em, seq):
    s = start[seq[0]] + end[seq[-1]]
    for j, y in enumerate(seq):
        s += em[j, y]
        if j:
            s += trans[seq[j - 1], y]
    return s


def all_sequences(n, n_labels=5):
    return product(range(n_labels), repeat=n)


def brute_log_partition(trans, start, end, em):
    scores = [brute_score(trans, start, end, em, s) for s in all_sequences(len(em), em.shape[1])]
    m = max(scores)
    return m + log(sum(exp(x - m) for x in scores))


def brute_best_admissible(trans, start, end, em):
    best = -np.inf
    for s in all_sequences(len(em), em.shape[1]):
        if admissible([LABELS[i] for i in s]):
            best = max(best, brute_score(trans, start, end, em, s))
    return best


def brute_expected_counts(trans, start, end, em):
    """Posterior-expected emission, transition, start and end indicator counts."""
    n, L = em.shape
    log_z = brute_log_partition(trans, start, end, em)
    e_em = np.zeros_like(em)
    e_tr = np.zeros_like(trans)
    e_st = np.zeros(L)
    e_en = np.zeros(L)
    for s in all_sequences(n, L):
        p = exp(brute_score(trans, start, end, em, s) - log_z)
        for j, y in enumerate(s):
            e_em[j, y] += p
            if j:
                e_tr[s[j - 1], y] += p
        e_st[s[0]] += p
        e_en[s[-1]] += p
    return e_em, e_tr, e_st, e_en


def _sig(x):
    return 1.0 / (1.0 + exp(-x))


def reference_lstm(Wx, Wh, b, xs):
    """Step-by-step LSTM with explicit loops over units; gates ordered i, f, g, o."""
    H = Wh.shape[0]
    h = [0.0] * H
    c = [0.0] * H
    out = []
    for x in xs:
        z = [
            b[k] + sum(x[d] * Wx[d, k] for d in range(len(x))) + sum(h[u] * Wh[u, k] for u in range(H))
            for k in range(4 * H)
        ]
        new_h, new_c = [], []
        for u in range(H):
            i, f, g, o = _sig(z[u]), _sig(z[H + u]), tanh(z[2 * H + u]), _sig(z[3 * H + u])
            cu = f * c[u] + i * g
            new_c.append(cu)
            new_h.append(o * tanh(cu))
        h, c = new_h, new_c
        out.append(list(h))
    return np.array(out)


def reference_bilstm(params, prefix, xs):
    fwd = reference_lstm(params[prefix + ".fwd.Wx"], params[prefix + ".fwd.Wh"], params[prefix + ".fwd.b"], xs)
    bwd = reference_lstm(params[prefix + ".bwd.Wx"], params[prefix + ".bwd.Wh"], params[prefix + ".bwd.b"], xs[::-1])
    return np.concatenate([fwd, bwd[::-1]], axis=1)


def numeric_grad(f, x, step=1e-5):
    """Central differences of scalar ``f()`` w.r.t. array ``x`` (perturbed in place)."""
    g = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        orig = x[idx]
        h = step * max(1.0, abs(orig))
        x[idx] = orig + h
        up = f()
        x[idx] = orig - h
        down = f()
        x[idx] = orig
        g[idx] = (up - down) / (2 * h)
    return g


def rel_error(a, b):
    """Max elementwise relative error with a small absolute floor."""
    a, b = np.asarray(a, float), np.asarray(b, float)
    return float(np.max(np.abs(a - b) / np.maximum(1e-6, np.abs(a) + np.abs(b))))


def model_grad_errors(model, batch, keys=None):
    """Relative error between analytic and central-difference gradients, per parameter tensor."""
    _, grads = model.loss_and_grads(batch)
    f = lambda: model.loss_and_grads(batch)[0]  # noqa: E731
    return {k: rel_error(grads[k], numeric_grad(f, model.params[k])) for k in keys or model.params}


def perturb(params, rng, scale=0.3):
    """Random offsets so that zero-initialised tensors (biases, CRF scores) are exercised too."""
    for k, v in params.items():
        params[k] = v + rng.normal(0, scale, v.shape)
    return params
