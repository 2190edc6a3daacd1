"""Infer the fill region from a user edit.

Comparing the pre-edit and post-edit summaries token by token yields the
longest common prefix, then the longest common suffix of the remainders.
Whatever the new summary holds between the two is the human start that all
suggestions must continue from; the old summary's counterpart is the span
being replaced.
"""

from __future__ import annotations

from dataclasses import dataclass

from revise.fim import FimMode
from revise.kernels import common_affix
from revise.tokenization import TokenSeq, Vocabulary, tokenize

HUMAN_START_MARKER = "  "


class NoEditError(ValueError):
    """Old and new summaries are identical and no regeneration was requested."""


@dataclass(frozen=True)
class EditEvent:
    old_summary: TokenSeq
    new_summary: TokenSeq
    timestamp_ms: int = 0


@dataclass(frozen=True)
class FillRegion:
    """Decomposition of an edit.

    new_summary == prefix + human_start + suffix and
    old_summary == prefix + replaced + suffix, exactly.
    """

    prefix: TokenSeq
    human_start: TokenSeq
    suffix: TokenSeq
    mode: FimMode
    replaced: TokenSeq


def _classify(prefix: tuple, human_start: tuple, suffix: tuple) -> FimMode:
    if not prefix and not human_start:
        # With no trailing context either, this is a whole-summary
        # regeneration, which runs through the no-context middle template.
        return FimMode.BEGIN if suffix else FimMode.MIDDLE
    if not suffix:
        return FimMode.END
    return FimMode.MIDDLE


def detect_fill_region(event: EditEvent, regenerate: bool = False) -> FillRegion:
    """Decompose an edit into (prefix, human_start, suffix, replaced).

    The common prefix is maximized first; the common suffix of the
    remainders is maximized second. ``regenerate=True`` allows identical
    summaries and marks the whole old summary for replacement.
    """
    old = tuple(event.old_summary)
    new = tuple(event.new_summary)
    if old == new:
        if not regenerate:
            raise NoEditError("no edit detected")
        return FillRegion(
            prefix=(), human_start=(), suffix=(), mode=FimMode.MIDDLE, replaced=old
        )
    p, s = common_affix(old, new)
    prefix = new[:p]
    suffix = new[len(new) - s :] if s else ()
    human_start = new[p : len(new) - s]
    replaced = old[p : len(old) - s]
    return FillRegion(
        prefix=prefix,
        human_start=human_start,
        suffix=suffix,
        mode=_classify(prefix, human_start, suffix),
        replaced=replaced,
    )


def extract_human_start(raw_segment: str, vocab: Vocabulary) -> TokenSeq:
    """Tokenize the editor text between prefix and suffix.

    A trailing two-space marker is stripped; its absence changes nothing
    (pressing ENTER already signals intent), so both spellings yield the
    tokens suggestions must continue from.
    """
    if raw_segment.endswith(HUMAN_START_MARKER):
        raw_segment = raw_segment[: -len(HUMAN_START_MARKER)]
    return tokenize(raw_segment, vocab)
