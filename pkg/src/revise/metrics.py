"""Evaluation metrics: clipped n-gram ROUGE, split-protocol generation
quality, and fixed-horizon likelihood coherence.

The split protocol feeds golden context to a backend and scores the top
suggestion against the golden counterpart: middles for three-way splits,
prefixes/suffixes for the corner two-way splits, and the whole summary when
no context is given at all. Coherence scores a continuation's log-likelihood
over a fixed token horizon under a pluggable next-token scorer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

from revise import datagen
from revise.backends import Backend, BackendError, GenerationRequest
from revise.datagen import GenConfig
from revise.fim import FimMode, SplitSummary, split_summary
from revise.kernels import clipped_ngram_overlap
from revise.scorers import LMScorer, ScorerError
from revise.tokenization import TokenSeq

EVAL_MODES = ("middle", "begin", "end", "all")
# Golden targets shorter than this are excluded from split evaluation: a
# one-token target has no bigrams, which would cap ROUGE-2 below 1 even for
# a perfect generator.
MIN_EVAL_TARGET = 2


@dataclass(frozen=True)
class RougeScore:
    precision: float
    recall: float
    f1: float
    n: int


@dataclass(frozen=True)
class MeanRouge:
    """Componentwise corpus means; f1 here is mean-of-f1, not f1-of-means."""

    precision: float
    recall: float
    f1: float
    n: int


@dataclass(frozen=True)
class CoherenceConfig:
    horizon: int = 10

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")


def rouge_n(candidate: Sequence, reference: Sequence, n: int) -> RougeScore:
    """Clipped n-gram overlap precision/recall/F1.

    An empty candidate or reference n-gram set zeroes the corresponding
    component (and hence F1).
    """
    match, cand_total, ref_total = clipped_ngram_overlap(candidate, reference, n)
    precision = match / cand_total if cand_total else 0.0
    recall = match / ref_total if ref_total else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return RougeScore(precision=precision, recall=recall, f1=f1, n=n)


def horizon_loglikelihood(
    context: Sequence,
    continuation: Sequence,
    scorer: LMScorer,
    cfg: CoherenceConfig = CoherenceConfig(),
) -> float:
    """Log-likelihood of the first min(horizon, len) continuation tokens.

    Each token is scored given the context plus the continuation consumed so
    far; terms are summed with math.fsum. Always <= 0 for a proper scorer.
    """
    continuation = tuple(continuation)
    if not continuation:
        raise ValueError("continuation must be non-empty")
    steps = min(cfg.horizon, len(continuation))
    running = list(context)
    parts = []
    for h in range(steps):
        try:
            parts.append(scorer.logprob(tuple(running), continuation[h]))
        except Exception as exc:
            raise ScorerError(f"scorer failed at continuation position {h}: {exc}") from exc
        running.append(continuation[h])
    return math.fsum(parts)


@dataclass(frozen=True)
class CoherencePair:
    """Connectivity scores; a component is None when its span is empty."""

    prefix_middle: Optional[float]
    middle_suffix: Optional[float]


def coherence_scores(
    split: SplitSummary, scorer: LMScorer, cfg: CoherenceConfig = CoherenceConfig()
) -> CoherencePair:
    """Prefix->middle and (prefix+middle)->suffix horizon log-likelihoods."""
    prefix_middle = (
        horizon_loglikelihood(split.prefix, split.middle, scorer, cfg)
        if split.middle
        else None
    )
    middle_suffix = (
        horizon_loglikelihood(split.prefix + split.middle, split.suffix, scorer, cfg)
        if split.suffix
        else None
    )
    return CoherencePair(prefix_middle=prefix_middle, middle_suffix=middle_suffix)


def eval_split(summary: TokenSeq, mode: str, rng) -> Optional[SplitSummary]:
    """Deterministic evaluation split with a non-trivial golden target.

    Reuses the dataset sampler for middles; corner cuts keep at least
    MIN_EVAL_TARGET tokens on the generated side. Returns None when the
    summary is too short to evaluate.
    """
    length = len(summary)
    if length < MIN_EVAL_TARGET:
        return None
    if mode == "middle":
        spec = datagen.sample_split(
            length, GenConfig(gamma=0.0, seed=0, min_middle_len=MIN_EVAL_TARGET), rng
        )
        return split_summary(summary, spec.i, spec.j)
    if mode == "end":
        cut = rng.randint(0, length - MIN_EVAL_TARGET)
        return SplitSummary(prefix=summary[:cut], middle=(), suffix=summary[cut:])
    if mode == "begin":
        cut = rng.randint(MIN_EVAL_TARGET, length)
        return SplitSummary(prefix=summary[:cut], middle=(), suffix=summary[cut:])
    if mode == "all":
        return SplitSummary(prefix=(), middle=summary, suffix=())
    raise ValueError(f"unknown eval mode {mode!r}; expected one of {EVAL_MODES}")


def _request_and_golden(
    document: TokenSeq, split: SplitSummary, mode: str, max_new_tokens: int
) -> tuple[GenerationRequest, TokenSeq]:
    if mode == "middle":
        request = GenerationRequest(
            mode=FimMode.MIDDLE,
            prefix=split.prefix,
            suffix=split.suffix,
            document=document,
            num_suggestions=1,
            max_new_tokens=max_new_tokens,
        )
        return request, split.middle
    if mode == "end":
        request = GenerationRequest(
            mode=FimMode.END,
            prefix=split.prefix,
            suffix=(),
            document=document,
            num_suggestions=1,
            max_new_tokens=max_new_tokens,
        )
        return request, split.suffix
    if mode == "begin":
        request = GenerationRequest(
            mode=FimMode.BEGIN,
            prefix=(),
            suffix=split.suffix,
            document=document,
            num_suggestions=1,
            max_new_tokens=max_new_tokens,
        )
        return request, split.prefix
    # "all": whole-summary generation through the no-context middle template.
    request = GenerationRequest(
        mode=FimMode.MIDDLE,
        prefix=(),
        suffix=(),
        document=document,
        num_suggestions=1,
        max_new_tokens=max_new_tokens,
    )
    return request, split.prefix + split.middle + split.suffix


@dataclass(frozen=True)
class InfillEvalReport:
    rouge1: MeanRouge
    rouge2: MeanRouge
    n_items: int
    n_failed: int
    n_skipped: int
    mode: str


def evaluate_infill(
    items: Sequence[tuple],
    backend: Backend,
    mode: str,
    max_new_tokens: int = 64,
) -> InfillEvalReport:
    """Generate with golden context and score top-1 against the golden span.

    ``items`` holds (document tokens, SplitSummary) pairs shaped for
    ``mode``. Backend failures exclude the item and are counted; items whose
    golden target is empty are skipped.
    """
    if mode not in EVAL_MODES:
        raise ValueError(f"unknown eval mode {mode!r}; expected one of {EVAL_MODES}")
    per_item: list[tuple[RougeScore, RougeScore]] = []
    n_failed = 0
    n_skipped = 0
    for document, split in items:
        request, golden = _request_and_golden(document, split, mode, max_new_tokens)
        if not golden:
            n_skipped += 1
            continue
        if hasattr(backend, "set_reference"):
            backend.set_reference(golden)
        try:
            suggestions = backend.generate(request)
        except BackendError:
            n_failed += 1
            continue
        generated = suggestions[0].tokens if suggestions else ()
        per_item.append((rouge_n(generated, golden, 1), rouge_n(generated, golden, 2)))
    means = []
    for n, idx in ((1, 0), (2, 1)):
        scores = [pair[idx] for pair in per_item]
        count = len(scores)
        means.append(
            MeanRouge(
                precision=math.fsum(s.precision for s in scores) / count if count else 0.0,
                recall=math.fsum(s.recall for s in scores) / count if count else 0.0,
                f1=math.fsum(s.f1 for s in scores) / count if count else 0.0,
                n=n,
            )
        )
    return InfillEvalReport(
        rouge1=means[0],
        rouge2=means[1],
        n_items=len(per_item),
        n_failed=n_failed,
        n_skipped=n_skipped,
        mode=mode,
    )


@dataclass(frozen=True)
class CoherenceReport:
    l1_mean: Optional[float]
    l2_mean: Optional[float]
    n_items: int
    n_l1: int
    n_l2: int
    n_failed: int
    horizon: int
    middles: str  # "golden" or "generated"


def evaluate_coherence(
    items: Sequence[tuple],
    scorer: LMScorer,
    cfg: CoherenceConfig = CoherenceConfig(),
    backend: Optional[Backend] = None,
    max_new_tokens: int = 64,
) -> CoherenceReport:
    """Corpus means of the two connectivity scores over three-way splits.

    With a backend, the golden middle is replaced by the top-1 generation
    under golden context before scoring; without one, golden middles are
    scored directly. Undefined components (empty spans) are excluded from
    their mean.
    """
    l1_values: list[float] = []
    l2_values: list[float] = []
    n_items = 0
    n_failed = 0
    for document, split in items:
        middle = split.middle
        if backend is not None:
            request, golden = _request_and_golden(document, split, "middle", max_new_tokens)
            if hasattr(backend, "set_reference"):
                backend.set_reference(golden)
            try:
                suggestions = backend.generate(request)
            except BackendError:
                n_failed += 1
                continue
            middle = suggestions[0].tokens if suggestions else ()
        scored = coherence_scores(
            SplitSummary(prefix=split.prefix, middle=middle, suffix=split.suffix),
            scorer,
            cfg,
        )
        n_items += 1
        if scored.prefix_middle is not None:
            l1_values.append(scored.prefix_middle)
        if scored.middle_suffix is not None:
            l2_values.append(scored.middle_suffix)
    return CoherenceReport(
        l1_mean=math.fsum(l1_values) / len(l1_values) if l1_values else None,
        l2_mean=math.fsum(l2_values) / len(l2_values) if l2_values else None,
        n_items=n_items,
        n_l1=len(l1_values),
        n_l2=len(l2_values),
        n_failed=n_failed,
        horizon=cfg.horizon,
        middles="generated" if backend is not None else "golden",
    )


def eval_items_from_corpus(records, vocab, mode: str, seed: int):
    """Tokenize records and attach deterministic eval splits.

    The RNG stream per record derives from (seed, record index), mirroring
    dataset generation, so reports are reproducible run to run.
    """
    from revise.tokenization import tokenize

    items = []
    for index, record in enumerate(records):
        summary = tokenize(record.summary, vocab)
        document = tokenize(record.document, vocab)
        rng = datagen.record_rng(seed, index)
        split = eval_split(summary, mode, rng)
        if split is None:
            continue
        items.append((document, split))
    return items
