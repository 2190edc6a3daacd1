"""Pluggable text-infilling backends behind one request/response contract.

All backends accept a :class:`GenerationRequest` and return suggestions that
are pairwise distinct, ordered by descending score, and that begin with the
request's human start when one is present. Three real implementations:
scripted (tests/demos), heuristic extractive (self-contained), and a remote
HTTP client speaking the infill wire protocol. A random-token baseline is
included for metric sanity checks.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass
from typing import Protocol, Sequence

import requests

from revise.fim import FimMode
from revise.kernels import clipped_ngram_overlap
from revise.tokenization import (
    NUM_SENTINELS,
    SENTENCE_DELIMITERS,
    SENTINEL_SURFACES,
    TokenSeq,
    Vocabulary,
)

logger = logging.getLogger(__name__)

DEFAULT_NUM_SUGGESTIONS = 3
DEFAULT_MAX_NEW_TOKENS = 64
DEFAULT_TIMEOUT_S = 10.0


class BackendError(Exception):
    """Base class for generation failures."""


class TransportError(BackendError):
    """Endpoint unreachable or connection dropped; distinct from 'no suggestions'."""


class BackendTimeoutError(TransportError):
    """The backend did not answer within the configured timeout."""


class RemoteStatusError(BackendError):
    """Non-2xx response from the remote infill server."""

    def __init__(self, status: int, message: str):
        super().__init__(f"infill server returned {status}: {message}")
        self.status = status


class RemoteProtocolError(BackendError):
    """Response body does not match the wire protocol."""


def _sentinel_free(seq, name: str) -> tuple:
    seq = tuple(seq)
    for token_id in seq:
        if 0 <= token_id < NUM_SENTINELS:
            raise ValueError(f"sentinel id {token_id} in {name}")
    return seq


@dataclass(frozen=True)
class GenerationRequest:
    """One infill request.

    ``prefix`` already includes the human start as its tail; ``human_start``
    marks how many of those trailing tokens every suggestion must begin with.
    """

    mode: FimMode
    prefix: TokenSeq
    suffix: TokenSeq
    document: TokenSeq
    num_suggestions: int = DEFAULT_NUM_SUGGESTIONS
    max_new_tokens: int = DEFAULT_MAX_NEW_TOKENS
    human_start: TokenSeq = ()

    def __post_init__(self):
        object.__setattr__(self, "prefix", _sentinel_free(self.prefix, "prefix"))
        object.__setattr__(self, "suffix", _sentinel_free(self.suffix, "suffix"))
        object.__setattr__(self, "document", _sentinel_free(self.document, "document"))
        object.__setattr__(self, "human_start", tuple(self.human_start))
        if self.num_suggestions < 1:
            raise ValueError("num_suggestions must be >= 1")
        if self.max_new_tokens < 1:
            raise ValueError("max_new_tokens must be >= 1")
        if self.human_start and self.prefix[-len(self.human_start) :] != self.human_start:
            raise ValueError("prefix must end with the human start tokens")


@dataclass(frozen=True)
class Suggestion:
    """One candidate infill; tokens include the forced human start."""

    tokens: TokenSeq
    score: float
    terminated: bool

    def __post_init__(self):
        object.__setattr__(self, "tokens", _sentinel_free(self.tokens, "suggestion tokens"))


class Backend(Protocol):
    def generate(self, request: GenerationRequest) -> list[Suggestion]: ...


def _package(
    request: GenerationRequest, candidates: Sequence[tuple]
) -> list[Suggestion]:
    """Shared postprocessing: forced start, score ordering, dedup, truncation.

    ``candidates`` holds (continuation_tokens, score, terminated) triples;
    the human start is prepended here so every backend satisfies the forced
    start contract by construction.
    """
    ranked = sorted(candidates, key=lambda c: -c[1])
    seen = set()
    out: list[Suggestion] = []
    dropped = 0
    for tokens, score, terminated in ranked:
        full = request.human_start + tuple(tokens)
        if full in seen:
            dropped += 1
            continue
        seen.add(full)
        out.append(Suggestion(tokens=full, score=score, terminated=terminated))
        if len(out) == request.num_suggestions:
            break
    if dropped:
        logger.warning("dropped %d duplicate suggestion(s)", dropped)
    return out


@dataclass
class ScriptedBackend:
    """Replays configured continuations verbatim; deterministic and pure."""

    replies: Sequence[Sequence[int]]

    def generate(self, request: GenerationRequest) -> list[Suggestion]:
        candidates = [
            (tuple(reply), 1.0 - 0.01 * idx, True)
            for idx, reply in enumerate(self.replies)
        ]
        return _package(request, candidates)


class EchoBackend:
    """Echoes a reference set by the evaluator; the metric-oracle backend."""

    def __init__(self):
        self._reference: TokenSeq | None = None

    def set_reference(self, tokens: Sequence[int]) -> None:
        self._reference = tuple(tokens)

    def generate(self, request: GenerationRequest) -> list[Suggestion]:
        if self._reference is None:
            return []
        return _package(request, [(self._reference, 0.0, True)])


class RandomTokenBackend:
    """Uniform random vocabulary tokens; the floor every real backend must beat.

    Without a vocabulary it falls back to sampling from the request document.
    """

    def __init__(self, seed: int = 0, vocab: Vocabulary | None = None):
        self.seed = seed
        self._vocab = vocab

    def generate(self, request: GenerationRequest) -> list[Suggestion]:
        if self._vocab is not None:
            pool = list(range(NUM_SENTINELS, len(self._vocab)))
        else:
            pool = [t for t in request.document if t >= NUM_SENTINELS]
        if not pool:
            return []
        rng = random.Random(
            f"{self.seed}:{request.mode.value}:{request.prefix}:{request.suffix}:{request.document}"
        )
        candidates = []
        for attempt in range(request.num_suggestions * 4):
            length = rng.randint(4, max(4, min(12, request.max_new_tokens)))
            length = min(length, request.max_new_tokens)
            tokens = tuple(rng.choice(pool) for _ in range(length))
            candidates.append((tokens, 1.0 - 0.01 * attempt, True))
        return _package(request, candidates)


class HeuristicBackend:
    """Extractive stand-in: ranks document sentences by salience minus redundancy.

    Candidate infills are document sentence spans (delimited by standalone
    ".", "!", "?" tokens). Salience is the mean within-document term
    frequency of a span's content tokens, normalized by the best candidate;
    redundancy is the clipped unigram overlap fraction with the surrounding
    context. Scores land in [0, 1] via (salience - redundancy + 1) / 2.
    """

    def __init__(self, vocab: Vocabulary):
        self._vocab = vocab

    def _delimiter_ids(self) -> set:
        return {self._vocab.add(d) for d in SENTENCE_DELIMITERS}

    def generate(self, request: GenerationRequest) -> list[Suggestion]:
        delims = self._delimiter_ids()
        spans = _sentence_spans(request.document, delims)
        if not spans:
            return []
        tf: dict[int, int] = {}
        for token in request.document:
            if token not in delims:
                tf[token] = tf.get(token, 0) + 1
        raw_salience = []
        for span in spans:
            content = [t for t in span if t not in delims]
            if content:
                raw_salience.append(sum(tf[t] for t in content) / len(content))
            else:
                raw_salience.append(0.0)
        top = max(raw_salience)
        context = request.prefix + request.suffix
        candidates = []
        for span, salience in zip(spans, raw_salience):
            norm_salience = salience / top if top > 0 else 0.0
            matched, span_total, _ = clipped_ngram_overlap(span, context, 1)
            redundancy = matched / span_total if span_total else 0.0
            score = (norm_salience - redundancy + 1.0) / 2.0
            candidates.append((span[: request.max_new_tokens], score, True))
        return _package(request, candidates)


def _sentence_spans(document: Sequence[int], delimiter_ids: set) -> list[tuple]:
    spans = []
    current: list[int] = []
    for token in document:
        current.append(token)
        if token in delimiter_ids:
            spans.append(tuple(current))
            current = []
    if current:
        spans.append(tuple(current))
    return spans


class RemoteBackend:
    """HTTP client for an external infill server.

    POSTs UTF-8 JSON to ``{endpoint}/v1/infill`` and validates the response
    against the suggestion contract. Timeouts, transport failures, non-2xx
    statuses, and malformed bodies raise distinct error kinds.
    """

    def __init__(
        self,
        endpoint: str,
        vocab: Vocabulary,
        timeout_s: float = DEFAULT_TIMEOUT_S,
        session: requests.Session | None = None,
    ):
        self.endpoint = endpoint.rstrip("/")
        self._vocab = vocab
        self.timeout_s = timeout_s
        self._http = session or requests.Session()

    def _surfaces(self, ids: Sequence[int]) -> list[str]:
        return [self._vocab.surface_of(t) for t in ids]

    def generate(self, request: GenerationRequest) -> list[Suggestion]:
        body = {
            "mode": request.mode.value,
            "prefix": self._surfaces(request.prefix),
            "suffix": self._surfaces(request.suffix),
            "document": self._surfaces(request.document),
            "num_suggestions": request.num_suggestions,
            "max_new_tokens": request.max_new_tokens,
        }
        url = f"{self.endpoint}/v1/infill"
        try:
            response = self._http.post(url, json=body, timeout=self.timeout_s)
        except requests.Timeout as exc:
            raise BackendTimeoutError(f"no answer from {url} within {self.timeout_s}s") from exc
        except requests.RequestException as exc:
            raise TransportError(f"cannot reach {url}: {exc}") from exc
        if response.status_code != 200:
            message = ""
            try:
                message = response.json().get("error", "")
            except ValueError:
                message = response.text[:200]
            raise RemoteStatusError(response.status_code, message)
        try:
            payload = response.json()
        except ValueError as exc:
            raise RemoteProtocolError(f"response is not JSON: {exc}") from exc
        return _package(request, self._parse_suggestions(payload))

    def _parse_suggestions(self, payload) -> list[tuple]:
        if not isinstance(payload, dict) or not isinstance(payload.get("suggestions"), list):
            raise RemoteProtocolError("missing 'suggestions' list")
        candidates = []
        for idx, item in enumerate(payload["suggestions"]):
            if not isinstance(item, dict):
                raise RemoteProtocolError(f"suggestion {idx} is not an object")
            tokens = item.get("tokens")
            score = item.get("score")
            terminated = item.get("terminated")
            if (
                not isinstance(tokens, list)
                or not all(isinstance(t, str) for t in tokens)
                or not isinstance(score, (int, float))
                or isinstance(score, bool)
                or not isinstance(terminated, bool)
            ):
                raise RemoteProtocolError(f"suggestion {idx} has invalid fields")
            if any(t in SENTINEL_SURFACES for t in tokens):
                raise RemoteProtocolError(f"suggestion {idx} contains a sentinel surface")
            ids = tuple(self._vocab.add(t) for t in tokens)
            candidates.append((ids, float(score), terminated))
        return candidates


__all__ = [
    "Backend",
    "BackendError",
    "BackendTimeoutError",
    "DEFAULT_MAX_NEW_TOKENS",
    "DEFAULT_NUM_SUGGESTIONS",
    "DEFAULT_TIMEOUT_S",
    "EchoBackend",
    "GenerationRequest",
    "HeuristicBackend",
    "RandomTokenBackend",
    "RemoteBackend",
    "RemoteProtocolError",
    "RemoteStatusError",
    "ScriptedBackend",
    "Suggestion",
    "TransportError",
]
