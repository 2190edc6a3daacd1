"""Kernel equivalence: the compiled and pure implementations must agree."""

from __future__ import annotations

import random
from collections import Counter

import pytest

from revise import _kernels_py
from revise.kernels import KERNEL_BACKEND, clipped_ngram_overlap, common_affix

try:
    from revise import _ckernels
except ImportError:
    _ckernels = None


def _oracle_overlap(candidate, reference, n):
    """Independent multiset-intersection oracle built on Counter."""
    def grams(seq):
        return Counter(tuple(seq[i : i + n]) for i in range(len(seq) - n + 1))

    cg, rg = grams(candidate), grams(reference)
    match = sum(min(count, rg[g]) for g, count in cg.items())
    return match, max(len(candidate) - n + 1, 0), max(len(reference) - n + 1, 0)


def test_selected_backend_reported():
    assert KERNEL_BACKEND in ("cython", "python")


def test_common_affix_basics():
    assert common_affix((1, 2, 3), (1, 2, 3)) == (3, 0)
    assert common_affix((), (1,)) == (0, 0)
    assert common_affix((1, 2, 3, 4), (1, 9, 4)) == (1, 1)
    # prefix is maximized first, suffix constrained by the remainder
    assert common_affix((7, 7, 7), (7, 7)) == (2, 0)


def test_overlap_against_oracle_random():
    rng = random.Random(42)
    for _ in range(300):
        cand = [rng.randrange(6) for _ in range(rng.randrange(0, 15))]
        ref = [rng.randrange(6) for _ in range(rng.randrange(0, 15))]
        for n in (1, 2, 3):
            assert clipped_ngram_overlap(cand, ref, n) == _oracle_overlap(cand, ref, n)


def test_overlap_rejects_bad_order():
    with pytest.raises(ValueError):
        clipped_ngram_overlap([1], [1], 0)


@pytest.mark.skipif(_ckernels is None, reason="compiled kernels not built")
def test_compiled_matches_pure():
    rng = random.Random(7)
    for _ in range(500):
        old = [rng.randrange(4) for _ in range(rng.randrange(0, 12))]
        new = [rng.randrange(4) for _ in range(rng.randrange(0, 12))]
        assert _ckernels.common_affix(old, new) == _kernels_py.common_affix(old, new)
        for n in (1, 2, 3):
            assert _ckernels.clipped_ngram_overlap(
                old, new, n
            ) == _kernels_py.clipped_ngram_overlap(old, new, n)
