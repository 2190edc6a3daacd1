# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled kernels for the token-diff and n-gram hot loops.

Behavior matches revise._kernels_py exactly; see that module for the
reference semantics.
"""


def common_affix(old, new):
    """Longest common prefix and suffix lengths of two sequences."""
    cdef Py_ssize_t n1 = len(old)
    cdef Py_ssize_t n2 = len(new)
    cdef Py_ssize_t m = n1 if n1 < n2 else n2
    cdef Py_ssize_t p = 0
    cdef Py_ssize_t s = 0
    cdef Py_ssize_t limit
    while p < m and old[p] == new[p]:
        p += 1
    limit = m - p
    while s < limit and old[n1 - 1 - s] == new[n2 - 1 - s]:
        s += 1
    return p, s


def clipped_ngram_overlap(candidate, reference, int n):
    """Clipped n-gram multiset overlap: (match, candidate_total, reference_total)."""
    if n < 1:
        raise ValueError("n-gram order must be >= 1")
    cdef Py_ssize_t cand_total = len(candidate) - n + 1
    cdef Py_ssize_t ref_total = len(reference) - n + 1
    if cand_total < 0:
        cand_total = 0
    if ref_total < 0:
        ref_total = 0
    if cand_total == 0 or ref_total == 0:
        return 0, cand_total, ref_total

    cdef dict ref_counts = {}
    cdef Py_ssize_t i
    cdef Py_ssize_t match = 0
    cdef object gram, c

    if n == 1:
        for i in range(ref_total):
            gram = reference[i]
            c = ref_counts.get(gram)
            ref_counts[gram] = 1 if c is None else c + 1
        for i in range(cand_total):
            gram = candidate[i]
            c = ref_counts.get(gram)
            if c is not None and c > 0:
                ref_counts[gram] = c - 1
                match += 1
        return match, cand_total, ref_total

    for i in range(ref_total):
        gram = tuple(reference[i : i + n])
        c = ref_counts.get(gram)
        ref_counts[gram] = 1 if c is None else c + 1
    for i in range(cand_total):
        gram = tuple(candidate[i : i + n])
        c = ref_counts.get(gram)
        if c is not None and c > 0:
            ref_counts[gram] = c - 1
            match += 1
    return match, cand_total, ref_total
