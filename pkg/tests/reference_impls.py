"""Independent oracle implementations for the test suite.

Everything here is deliberately written with plain Python loops (or, for the
linear-system oracle, a dense solve) so it shares no code path with the
library being checked.
"""

import math


# ---------------------------------------------------------------------------
# Single-bias rank recursion, coded from scratch
# ---------------------------------------------------------------------------


def _cosine(u, v):
    dot = sum(a * b for a, b in zip(u, v))
    nu = math.sqrt(sum(a * a for a in u))
    nv = math.sqrt(sum(b * b for b in v))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return dot / (nu * nv)


def reference_adjacency(rows, theta):
    """Raw-mode thresholded row-normalized cosine adjacency, loop form."""
    n = len(rows)
    a = [[_cosine(rows[i], rows[j]) for j in range(n)] for i in range(n)]
    for i in range(n):
        for j in range(n):
            if a[i][j] < theta:
                a[i][j] = 0.0
    for i in range(n):
        total = sum(a[i])
        if total != 0.0:
            a[i] = [x / total for x in a[i]]
    return a


def btr_reference(rows, bias, alpha, theta, epsilon=1e-13, max_iterations=5000):
    """Single-bias damped iteration R <- alpha*A~R + (1-alpha)*bias.

    The bias enters unnormalized, matching the original single-bias
    formulation; callers normalize the output if they need a distribution.
    """
    n = len(rows)
    adjacency = reference_adjacency(rows, theta)
    r = [1.0 / n] * n
    for _ in range(max_iterations):
        nxt = [
            alpha * sum(adjacency[i][j] * r[j] for j in range(n)) + (1.0 - alpha) * bias[i]
            for i in range(n)
        ]
        delta = sum(abs(x - y) for x, y in zip(nxt, r))
        if delta < epsilon:
            return r
        r = nxt
    return r


# ---------------------------------------------------------------------------
# ROUGE oracles: brute-force enumeration
# ---------------------------------------------------------------------------


def _prf(overlap, cand_total, ref_total):
    precision = overlap / cand_total if cand_total > 0 else 0.0
    recall = overlap / ref_total if ref_total > 0 else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return precision, recall, f1


def brute_rouge_n(cand_tokens, ref_tokens, n):
    """Clipped n-gram overlap by explicit enumeration."""
    cand = [tuple(cand_tokens[i : i + n]) for i in range(len(cand_tokens) - n + 1)]
    ref = [tuple(ref_tokens[i : i + n]) for i in range(len(ref_tokens) - n + 1)]
    overlap = 0
    remaining = list(ref)
    for gram in cand:
        if gram in remaining:
            remaining.remove(gram)
            overlap += 1
    return _prf(overlap, len(cand), len(ref))


def brute_lcs(a, b):
    """Recursive-with-memo LCS length (distinct from the DP-table path)."""
    memo = {}

    def go(i, j):
        if i == len(a) or j == len(b):
            return 0
        if (i, j) in memo:
            return memo[(i, j)]
        if a[i] == b[j]:
            result = 1 + go(i + 1, j + 1)
        else:
            result = max(go(i + 1, j), go(i, j + 1))
        memo[(i, j)] = result
        return result

    return go(0, 0)


def brute_rouge_l(cand_tokens, ref_tokens):
    lcs = brute_lcs(cand_tokens, ref_tokens)
    return _prf(lcs, len(cand_tokens), len(ref_tokens))


def _su_bag(tokens, max_skip):
    items = [("u", t) for t in tokens]
    for i in range(len(tokens)):
        for j in range(i + 1, len(tokens)):
            if j - i <= max_skip + 1:
                items.append(("s", tokens[i], tokens[j]))
    return items


def brute_rouge_su(cand_tokens, ref_tokens, max_skip=4):
    """Skip-bigram + unigram pooled overlap by pair enumeration."""
    cand = _su_bag(cand_tokens, max_skip)
    ref = _su_bag(ref_tokens, max_skip)
    overlap = 0
    remaining = list(ref)
    for item in cand:
        if item in remaining:
            remaining.remove(item)
            overlap += 1
    return _prf(overlap, len(cand), len(ref))
