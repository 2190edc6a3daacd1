"""Infill sequence templates: build, invert, and splice.

A summary is split into (prefix, middle, suffix). The encoder input for an
infill example concatenates the surrounding context and the document behind
sentinel ids; the decoder target wraps the span to generate in [BOS]/[EOS].

Three templates, distinguishable from their sentinel pattern alone:

    middle:  [PRE] prefix [SUF] suffix [CLS] document   ->  [BOS] middle [EOS]
    end:     [PRE] prefix [CLS] document                ->  [BOS] suffix [EOS]
    begin:   [SUF] suffix [CLS] document                ->  [BOS] prefix [EOS]

Empty segments keep their sentinels so parsing back is unambiguous.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

from revise.tokenization import BOS, CLS, EOS, NUM_SENTINELS, PRE, SUF, TokenSeq


class TemplateError(ValueError):
    """Malformed template sequence or invalid split indices."""


class FimMode(enum.Enum):
    MIDDLE = "middle"
    BEGIN = "begin"
    END = "end"


@dataclass(frozen=True)
class SplitSummary:
    """Three-way split of a summary; prefix + middle + suffix == original."""

    prefix: TokenSeq
    middle: TokenSeq
    suffix: TokenSeq
    source: str = ""


@dataclass(frozen=True)
class FimExample:
    """One infill training instance.

    ``i``/``j`` are the boundaries of the generated span within the summary:
    ``summary[i:j]`` is what the decoder target wraps.
    """

    mode: FimMode
    encoder_input: TokenSeq
    decoder_target: TokenSeq
    doc_id: str = ""
    i: int = 0
    j: int = 0


def _require_sentinel_free(seq: Sequence[int], name: str) -> tuple:
    seq = tuple(seq)
    for pos, token_id in enumerate(seq):
        if 0 <= token_id < NUM_SENTINELS:
            raise TemplateError(f"sentinel id {token_id} inside {name} at position {pos}")
    return seq


def split_summary(summary: Sequence[int], i: int, j: int, source: str = "") -> SplitSummary:
    """Split ``summary`` at token indices ``0 <= i <= j <= len(summary)``."""
    summary = tuple(summary)
    if not (0 <= i <= j <= len(summary)):
        raise TemplateError(
            f"invalid split indices ({i}, {j}) for summary of length {len(summary)}"
        )
    return SplitSummary(
        prefix=summary[:i], middle=summary[i:j], suffix=summary[j:], source=source
    )


def build_middle_example(split: SplitSummary, document: Sequence[int]) -> FimExample:
    prefix = _require_sentinel_free(split.prefix, "prefix")
    middle = _require_sentinel_free(split.middle, "middle")
    suffix = _require_sentinel_free(split.suffix, "suffix")
    document = _require_sentinel_free(document, "document")
    return FimExample(
        mode=FimMode.MIDDLE,
        encoder_input=(PRE,) + prefix + (SUF,) + suffix + (CLS,) + document,
        decoder_target=(BOS,) + middle + (EOS,),
        doc_id=split.source,
        i=len(prefix),
        j=len(prefix) + len(middle),
    )


def build_end_example(
    prefix: Sequence[int], suffix: Sequence[int], document: Sequence[int], source: str = ""
) -> FimExample:
    """Two-way split where the suffix is generated; no [SUF] sentinel present."""
    prefix = _require_sentinel_free(prefix, "prefix")
    suffix = _require_sentinel_free(suffix, "suffix")
    document = _require_sentinel_free(document, "document")
    return FimExample(
        mode=FimMode.END,
        encoder_input=(PRE,) + prefix + (CLS,) + document,
        decoder_target=(BOS,) + suffix + (EOS,),
        doc_id=source,
        i=len(prefix),
        j=len(prefix) + len(suffix),
    )


def build_begin_example(
    prefix: Sequence[int], suffix: Sequence[int], document: Sequence[int], source: str = ""
) -> FimExample:
    """Two-way split where the prefix is generated; suffix rides behind [SUF]."""
    prefix = _require_sentinel_free(prefix, "prefix")
    suffix = _require_sentinel_free(suffix, "suffix")
    document = _require_sentinel_free(document, "document")
    return FimExample(
        mode=FimMode.BEGIN,
        encoder_input=(SUF,) + suffix + (CLS,) + document,
        decoder_target=(BOS,) + prefix + (EOS,),
        doc_id=source,
        i=0,
        j=len(prefix),
    )


def splice(prefix: Sequence[int], infill: Sequence[int], suffix: Sequence[int]) -> TokenSeq:
    """Concatenate prefix + infill + suffix; all arguments must be sentinel-free."""
    return (
        _require_sentinel_free(prefix, "prefix")
        + _require_sentinel_free(infill, "infill")
        + _require_sentinel_free(suffix, "suffix")
    )


def _sentinel_positions(encoder: Sequence[int]) -> dict:
    positions: dict[int, list[int]] = {}
    for pos, token_id in enumerate(encoder):
        if 0 <= token_id < NUM_SENTINELS:
            positions.setdefault(token_id, []).append(pos)
    return positions


def parse_encoder(encoder: Sequence[int]):
    """Recover ``(mode, prefix, suffix, document)`` from an encoder sequence.

    Raises TemplateError when the sentinel pattern matches none of the three
    templates exactly.
    """
    encoder = tuple(encoder)
    positions = _sentinel_positions(encoder)
    for sentinel, found in positions.items():
        if len(found) > 1:
            raise TemplateError(f"sentinel id {sentinel} occurs {len(found)} times")
    if BOS in positions or EOS in positions:
        raise TemplateError("decoder sentinels in encoder sequence")
    if CLS not in positions:
        raise TemplateError("missing [CLS] sentinel")
    cls_pos = positions[CLS][0]
    document = encoder[cls_pos + 1 :]

    if PRE in positions and SUF in positions:
        pre_pos, suf_pos = positions[PRE][0], positions[SUF][0]
        if not (pre_pos == 0 and pre_pos < suf_pos < cls_pos):
            raise TemplateError("middle template expects [PRE] ... [SUF] ... [CLS] ...")
        return (
            FimMode.MIDDLE,
            encoder[pre_pos + 1 : suf_pos],
            encoder[suf_pos + 1 : cls_pos],
            document,
        )
    if PRE in positions:
        pre_pos = positions[PRE][0]
        if not (pre_pos == 0 and pre_pos < cls_pos):
            raise TemplateError("end template expects [PRE] ... [CLS] ...")
        return FimMode.END, encoder[pre_pos + 1 : cls_pos], (), document
    if SUF in positions:
        suf_pos = positions[SUF][0]
        if not (suf_pos == 0 and suf_pos < cls_pos):
            raise TemplateError("begin template expects [SUF] ... [CLS] ...")
        return FimMode.BEGIN, (), encoder[suf_pos + 1 : cls_pos], document
    raise TemplateError("no [PRE] or [SUF] sentinel present")


def parse_decoder(decoder: Sequence[int]) -> TokenSeq:
    """Recover the generated span from a ``[BOS] ... [EOS]`` decoder target."""
    decoder = tuple(decoder)
    if len(decoder) < 2 or decoder[0] != BOS or decoder[-1] != EOS:
        raise TemplateError("decoder target must start with [BOS] and end with [EOS]")
    return _require_sentinel_free(decoder[1:-1], "decoder body")


def validate_example(example: FimExample) -> None:
    """Check an example against its template; raises TemplateError on mismatch."""
    mode, prefix, suffix, _ = parse_encoder(example.encoder_input)
    if mode is not example.mode:
        raise TemplateError(f"encoder pattern is {mode.value}, example says {example.mode.value}")
    body = parse_decoder(example.decoder_target)
    if example.j - example.i != len(body):
        raise TemplateError(
            f"span indices ({example.i}, {example.j}) disagree with decoder length {len(body)}"
        )
    if example.mode in (FimMode.MIDDLE, FimMode.END) and len(prefix) != example.i:
        raise TemplateError("prefix length disagrees with span start index i")
    if example.mode is FimMode.BEGIN and example.i != 0:
        raise TemplateError("begin-mode span must start at 0")
