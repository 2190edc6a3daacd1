"""Benchmark the compiled kernels against the pure-Python fallback.

Times the two hot loops (token-diff common affix, clipped n-gram overlap)
and the fill-region detector built on them. Run from the repo root:

    python benchmarks/bench_kernels.py [--pairs 200000] [--seed 0]
"""

from __future__ import annotations

import argparse
import random
import time

from revise import _kernels_py

try:
    from revise import _ckernels
except ImportError:
    _ckernels = None


def make_pairs(n, rng):
    pairs = []
    for _ in range(n):
        old = [rng.randrange(50) for _ in range(rng.randrange(0, 30))]
        new = list(old)
        # typical edit: replace a small interior span
        if new:
            i = rng.randrange(len(new))
            j = min(len(new), i + rng.randrange(0, 5))
            new[i:j] = [rng.randrange(50) for _ in range(rng.randrange(0, 5))]
        pairs.append((old, new))
    return pairs


def bench(label, fn, *args):
    started = time.perf_counter()
    fn(*args)
    return time.perf_counter() - started


def run_affix(impl, pairs):
    affix = impl.common_affix
    for old, new in pairs:
        affix(old, new)


def run_overlap(impl, pairs, n):
    overlap = impl.clipped_ngram_overlap
    for old, new in pairs:
        overlap(old, new, n)


def run_detect(pairs):
    from revise.editregion import EditEvent, NoEditError, detect_fill_region

    for old, new in pairs:
        try:
            detect_fill_region(EditEvent(tuple(old), tuple(new)))
        except NoEditError:
            pass


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--pairs", type=int, default=200_000)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = random.Random(args.seed)
    pairs = make_pairs(args.pairs, rng)
    from revise.kernels import KERNEL_BACKEND

    print(f"selected kernel backend: {KERNEL_BACKEND}")
    print(f"{args.pairs} synthetic edit pairs\n")

    rows = []
    impls = [("python", _kernels_py)]
    if _ckernels is not None:
        impls.append(("cython", _ckernels))
    else:
        print("compiled kernels not built; timing pure Python only\n")

    for task, runner, extra in (
        ("common_affix", run_affix, ()),
        ("ngram_overlap n=1", run_overlap, (1,)),
        ("ngram_overlap n=2", run_overlap, (2,)),
    ):
        times = {}
        for name, impl in impls:
            times[name] = bench(name, runner, impl, pairs, *extra)
        speedup = (
            f"{times['python'] / times['cython']:.1f}x"
            if "cython" in times
            else "--"
        )
        rows.append((task, times.get("python"), times.get("cython"), speedup))

    detect_time = bench("detect", run_detect, pairs)
    rows.append(("detect_fill_region (selected)", detect_time, None, ""))

    header = f"{'task':32s} {'python (s)':>12s} {'cython (s)':>12s} {'speedup':>8s}"
    print(header)
    print("-" * len(header))
    for task, py, cy, speedup in rows:
        py_s = f"{py:12.3f}" if py is not None else " " * 12
        cy_s = f"{cy:12.3f}" if cy is not None else " " * 12
        print(f"{task:32s} {py_s} {cy_s} {speedup:>8s}")


if __name__ == "__main__":
    main()
