"""Pure-Python implementations of the hot kernels.

These are the reference implementations; `revise._ckernels` (Cython) mirrors
them exactly and is preferred at import time when built. Both operate on
plain sequences of hashable tokens (token ids in practice).
"""

from __future__ import annotations


def common_affix(old, new):
    """Longest common prefix and suffix lengths of two sequences.

    The suffix is measured on the remainders after the prefix is removed,
    so ``p + s <= min(len(old), len(new))`` always holds.
    """
    n1 = len(old)
    n2 = len(new)
    m = n1 if n1 < n2 else n2
    p = 0
    while p < m and old[p] == new[p]:
        p += 1
    s = 0
    limit = m - p
    while s < limit and old[n1 - 1 - s] == new[n2 - 1 - s]:
        s += 1
    return p, s


def clipped_ngram_overlap(candidate, reference, n):
    """Clipped n-gram multiset overlap between two token sequences.

    Returns ``(match, candidate_total, reference_total)`` where ``match`` is
    the sum over distinct n-grams of min(count in candidate, count in
    reference), and the totals are the n-gram counts of each side.
    """
    if n < 1:
        raise ValueError("n-gram order must be >= 1")
    cand_total = len(candidate) - n + 1
    ref_total = len(reference) - n + 1
    if cand_total < 0:
        cand_total = 0
    if ref_total < 0:
        ref_total = 0
    if cand_total == 0 or ref_total == 0:
        return 0, cand_total, ref_total

    ref_counts = {}
    if n == 1:
        for tok in reference:
            ref_counts[tok] = ref_counts.get(tok, 0) + 1
        match = 0
        for tok in candidate:
            c = ref_counts.get(tok, 0)
            if c > 0:
                ref_counts[tok] = c - 1
                match += 1
        return match, cand_total, ref_total

    for i in range(ref_total):
        gram = tuple(reference[i : i + n])
        ref_counts[gram] = ref_counts.get(gram, 0) + 1
    match = 0
    for i in range(cand_total):
        gram = tuple(candidate[i : i + n])
        c = ref_counts.get(gram, 0)
        if c > 0:
            ref_counts[gram] = c - 1
            match += 1
    return match, cand_total, ref_total
