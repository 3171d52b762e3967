"""Independent reference implementations the tests compare against.

Everything here is deliberately written with a different algorithm (or at
least a different code path) than the library: full-matrix DP instead of
two rows, a regex recognizer instead of a scanner, explicit sort-and-scan
instead of vectorized masking, and so on.
"""

from __future__ import annotations

import re

import numpy as np


def levenshtein_matrix(a: str, b: str) -> int:
    """Classic full (n+1)x(m+1) dynamic program."""
    n, m = len(a), len(b)
    d = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n + 1):
        d[i][0] = i
    for j in range(m + 1):
        d[0][j] = j
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            cost = 0 if a[i - 1] == b[j - 1] else 1
            d[i][j] = min(d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + cost)
    return d[n][m]


def top_k_top_p_sets(logits, k, p, temperature):
    """Sort-and-scan filter oracle.

    Returns (surviving index set, renormalized probability dict). Ties in
    probability are broken toward the lower index, matching a stable
    descending sort.
    """
    z = np.asarray(logits, dtype=np.float64) / temperature
    z = z - z.max()
    probs = np.exp(z)
    probs /= probs.sum()
    order = sorted(range(len(probs)), key=lambda i: (-probs[i], i))
    kept = order[: min(k, len(order))]
    total = 0.0
    nucleus = []
    for i in kept:
        nucleus.append(i)
        total += probs[i]
        if total >= p:
            break
    mass = sum(probs[i] for i in nucleus)
    return set(nucleus), {i: probs[i] / mass for i in nucleus}


def marker_regex_recognizer(tokens, type_names, prefix_token_lists):
    """Accept iff the token sequence is (word | <START_T> word+ <END_T>)+
    after optionally stripping one task prefix. Implemented by translating
    tokens to single characters and letting the regex engine decide.
    """
    toks = list(tokens)
    for prefix in prefix_token_lists:
        prefix = list(prefix)
        if len(toks) >= len(prefix) and toks[: len(prefix)] == prefix:
            toks = toks[len(prefix) :]
            break
    starts = {f"<START_{t}>": i for i, t in enumerate(type_names)}
    ends = {f"<END_{t}>": i for i, t in enumerate(type_names)}
    chars = []
    for tok in toks:
        if tok in starts:
            chars.append(chr(0x4E00 + starts[tok]))
        elif tok in ends:
            chars.append(chr(0x5E00 + ends[tok]))
        else:
            chars.append("w")
    text = "".join(chars)
    alts = ["w"]
    for i in range(len(type_names)):
        alts.append(f"{chr(0x4E00 + i)}w+{chr(0x5E00 + i)}")
    pattern = "(?:" + "|".join(alts) + ")+"
    return re.fullmatch(pattern, text) is not None


def span_set(tags) -> set:
    """Entity spans as (start, inclusive_end, type) by run-length scanning
    string tags like \"B-ORG\"."""
    spans = set()
    start = None
    current = None
    for i, tag in enumerate(list(tags) + ["O"]):
        kind = tag[0]
        etype = tag[2:] if kind != "O" else None
        if start is not None and (kind in ("O", "B") or etype != current):
            spans.add((start, i - 1, current))
            start, current = None, None
        if kind == "B":
            start, current = i, etype
        elif kind == "I" and start is None:
            # orphan continuation: treat as opening a span, mirroring repair
            start, current = i, etype
    return spans


def micro_f1_sets(gold_corpus, pred_corpus):
    """(tp, fp, fn, f1) by brute-force span-set intersection per sentence."""
    tp = fp = fn = 0
    for g, p in zip(gold_corpus, pred_corpus, strict=True):
        gs, ps = span_set(g), span_set(p)
        tp += len(gs & ps)
        fp += len(ps - gs)
        fn += len(gs - ps)
    if tp == 0 and fp == 0 and fn == 0:
        return tp, fp, fn, 0.0
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return tp, fp, fn, f1


def weighted_argmax(tables, weights):
    """Index of the best row by explicit enumeration; first best wins."""
    best, best_score = 0, None
    for i, row in enumerate(tables):
        score = sum(weights[name] * value for name, value in row.items())
        if best_score is None or score > best_score:
            best, best_score = i, score
    return best


def total_variation(p, q) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


def gru_cell_reference(x, h, Wz, Uz, bz, Wr, Ur, br, Wh, Uh, bh):
    """One GRU step written directly from the update equations."""
    z = 1.0 / (1.0 + np.exp(-(x @ Wz + h @ Uz + bz)))
    r = 1.0 / (1.0 + np.exp(-(x @ Wr + h @ Ur + br)))
    c = np.tanh(x @ Wh + (r * h) @ Uh + bh)
    return (1.0 - z) * h + z * c


def finite_difference(loss_fn, params, names=None, h=1e-4):
    """Central differences for every coordinate of every named tensor.

    ``loss_fn`` must be a pure function of the current tensor values.
    Returns {name: array} of numeric gradients. The step is deliberately
    coarse: at h=1e-5 roundoff noise on near-zero coordinates already
    exceeds the 1e-4 relative tolerance used by the gradient tests.
    """
    grads = {}
    for name in names if names is not None else params.tensors:
        tensor = params[name]
        out = np.zeros_like(tensor)
        flat = tensor.reshape(-1) if tensor.ndim else None
        if tensor.ndim == 0:
            keep = tensor.copy()
            params.tensors[name] = keep + h
            up = loss_fn()
            params.tensors[name] = keep - h
            down = loss_fn()
            params.tensors[name] = keep
            out = np.asarray((up - down) / (2 * h))
        else:
            target = out.reshape(-1)
            for i in range(flat.shape[0]):
                keep = flat[i]
                flat[i] = keep + h
                up = loss_fn()
                flat[i] = keep - h
                down = loss_fn()
                flat[i] = keep
                target[i] = (up - down) / (2 * h)
        grads[name] = out
    return grads


def max_relative_error(analytic: dict, numeric: dict) -> float:
    worst = 0.0
    for name, num in numeric.items():
        ana = analytic[name]
        denom = np.maximum(np.abs(ana) + np.abs(num), 1e-6)
        worst = max(worst, float((np.abs(ana - num) / denom).max()))
    return worst
