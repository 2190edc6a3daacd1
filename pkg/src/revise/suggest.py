"""One suggestion cycle: edit event -> fill region -> backend -> previews.

The engine validates backend output against the suggestion contract, splices
each candidate into a full-summary preview, and measures backend latency.
Applying a choice simply returns the matching preview, which becomes the new
editing state.
"""

from __future__ import annotations

import threading
import time
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from revise.backends import (
    Backend,
    BackendError,
    DEFAULT_MAX_NEW_TOKENS,
    DEFAULT_NUM_SUGGESTIONS,
    GenerationRequest,
    Suggestion,
)
from revise.editregion import EditEvent, FillRegion, detect_fill_region
from revise.fim import splice
from revise.tokenization import TokenSeq


class SuggestionContractError(BackendError):
    """Backend output violated distinctness or the forced human start."""


class SuggestionFailure(Exception):
    """Backend failure wrapped with the detected region so callers can retry."""

    def __init__(self, region: FillRegion, cause: BackendError):
        super().__init__(str(cause))
        self.region = region
        self.cause = cause


@dataclass(frozen=True)
class SuggestionSet:
    """Candidates plus their spliced full-summary previews."""

    region: FillRegion
    suggestions: tuple
    previews: tuple
    latency_ms: int


def _validate(suggestions: Sequence[Suggestion], human_start: TokenSeq) -> None:
    seen = set()
    for suggestion in suggestions:
        if suggestion.tokens in seen:
            raise SuggestionContractError(
                f"duplicate suggestion tokens {suggestion.tokens!r}"
            )
        seen.add(suggestion.tokens)
        if human_start and suggestion.tokens[: len(human_start)] != tuple(human_start):
            raise SuggestionContractError(
                "suggestion does not begin with the human start"
            )


def suggest(
    event: EditEvent,
    document: TokenSeq,
    backend: Backend,
    k: int = DEFAULT_NUM_SUGGESTIONS,
    max_new_tokens: int = DEFAULT_MAX_NEW_TOKENS,
    regenerate: bool = False,
) -> SuggestionSet:
    """Run one suggestion cycle for an edit.

    Raises NoEditError for identical summaries (unless ``regenerate``) and
    SuggestionFailure, with the region attached, when the backend fails.
    """
    region = detect_fill_region(event, regenerate=regenerate)
    request = GenerationRequest(
        mode=region.mode,
        prefix=region.prefix + region.human_start,
        suffix=region.suffix,
        document=tuple(document),
        num_suggestions=k,
        max_new_tokens=max_new_tokens,
        human_start=region.human_start,
    )
    started = time.perf_counter()
    try:
        suggestions = list(backend.generate(request))[:k]
    except BackendError as exc:
        raise SuggestionFailure(region, exc) from exc
    latency_ms = int(round((time.perf_counter() - started) * 1000))
    _validate(suggestions, region.human_start)
    previews = tuple(
        splice(region.prefix, s.tokens, region.suffix) for s in suggestions
    )
    return SuggestionSet(
        region=region,
        suggestions=tuple(suggestions),
        previews=previews,
        latency_ms=latency_ms,
    )


def apply_choice(suggestion_set: SuggestionSet, index: int) -> TokenSeq:
    """Return the full summary for the chosen candidate."""
    if not 0 <= index < len(suggestion_set.suggestions):
        raise IndexError(
            f"choice index {index} out of range for "
            f"{len(suggestion_set.suggestions)} suggestion(s)"
        )
    return suggestion_set.previews[index]


class SuggestionEngine:
    """Stateful wrapper tracking per-document suggestion triggers.

    The trigger counter feeds the suggestions-per-document statistic of the
    study aggregates; everything else is delegated to :func:`suggest`.
    """

    def __init__(
        self,
        backend: Backend,
        k: int = DEFAULT_NUM_SUGGESTIONS,
        max_new_tokens: int = DEFAULT_MAX_NEW_TOKENS,
    ):
        self.backend = backend
        self.k = k
        self.max_new_tokens = max_new_tokens
        self._triggers: Counter = Counter()
        self._lock = threading.Lock()

    def suggest(
        self,
        event: EditEvent,
        document: TokenSeq,
        doc_key: str = "",
        regenerate: bool = False,
    ) -> SuggestionSet:
        with self._lock:
            self._triggers[doc_key] += 1
        return suggest(
            event,
            document,
            self.backend,
            k=self.k,
            max_new_tokens=self.max_new_tokens,
            regenerate=regenerate,
        )

    def trigger_count(self, doc_key: str = "") -> int:
        with self._lock:
            return self._triggers[doc_key]
