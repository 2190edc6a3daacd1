"""Reversible text <-> token-id mapping with reserved sentinel tokens.

The default tokenizer splits on whitespace, detaches trailing sentence
punctuation (".", "!", "?") into standalone tokens, and grows its vocabulary
on the fly. Five sentinel tokens occupy the first ids and can never be
produced by tokenizing user text; they delimit segments in the infill
templates built by :mod:`revise.fim`.
"""

from __future__ import annotations

import threading
from typing import Iterable, Sequence

TokenSeq = tuple  # tuple[int, ...]

SENTINEL_SURFACES = ("[PRE]", "[SUF]", "[CLS]", "[BOS]", "[EOS]")
PRE, SUF, CLS, BOS, EOS = range(5)
NUM_SENTINELS = len(SENTINEL_SURFACES)

SENTENCE_DELIMITERS = frozenset({".", "!", "?"})


class TokenizationError(ValueError):
    """Base error for tokenize/detokenize failures."""


class SentinelInTextError(TokenizationError):
    """Raised when user text contains a reserved sentinel surface form."""

    def __init__(self, surface: str, offset: int):
        super().__init__(f"reserved sentinel {surface!r} in text at offset {offset}")
        self.surface = surface
        self.offset = offset


class SentinelInSequenceError(TokenizationError):
    """Raised when a sentinel id appears where plain text is required."""

    def __init__(self, surface: str, position: int):
        super().__init__(f"sentinel {surface} in text position {position}")
        self.surface = surface
        self.position = position


class UnknownTokenError(TokenizationError):
    pass


class FrozenVocabularyError(TokenizationError):
    pass


class Vocabulary:
    """Ordered surface-string <-> token-id map with reserved sentinels.

    Growth (adding unseen surfaces) is serialized by an internal lock; a
    frozen vocabulary is safely shareable across concurrent readers.
    """

    def __init__(self):
        self._surfaces: list[str] = list(SENTINEL_SURFACES)
        self._index: dict[str, int] = {s: i for i, s in enumerate(SENTINEL_SURFACES)}
        self._frozen = False
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._surfaces)

    @property
    def frozen(self) -> bool:
        return self._frozen

    def freeze(self) -> "Vocabulary":
        self._frozen = True
        return self

    def add(self, surface: str) -> int:
        """Return the id for ``surface``, adding it if unseen."""
        existing = self._index.get(surface)
        if existing is not None:
            return existing
        if self._frozen:
            raise FrozenVocabularyError(f"unknown surface {surface!r} in frozen vocabulary")
        with self._lock:
            existing = self._index.get(surface)
            if existing is not None:
                return existing
            token_id = len(self._surfaces)
            self._surfaces.append(surface)
            self._index[surface] = token_id
            return token_id

    def id_of(self, surface: str) -> int:
        try:
            return self._index[surface]
        except KeyError:
            raise UnknownTokenError(f"unknown surface {surface!r}") from None

    def surface_of(self, token_id: int) -> str:
        if 0 <= token_id < len(self._surfaces):
            return self._surfaces[token_id]
        raise UnknownTokenError(f"unknown token id {token_id}")

    def is_sentinel(self, token_id: int) -> bool:
        return 0 <= token_id < NUM_SENTINELS

    def __contains__(self, surface: str) -> bool:
        return surface in self._index

    def surfaces(self) -> list[str]:
        return list(self._surfaces)

    def save(self, path) -> None:
        """Write one surface form per line; line number == token id."""
        with open(path, "w", encoding="utf-8") as fh:
            for surface in self._surfaces:
                fh.write(surface + "\n")

    @classmethod
    def load(cls, path) -> "Vocabulary":
        vocab = cls()
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
        if tuple(lines[:NUM_SENTINELS]) != SENTINEL_SURFACES:
            raise TokenizationError(
                f"vocabulary file {path} must start with the sentinel lines "
                f"{' '.join(SENTINEL_SURFACES)}"
            )
        for surface in lines[NUM_SENTINELS:]:
            vocab.add(surface)
        return vocab


def _split_word(word: str) -> list[str]:
    """Detach trailing sentence delimiters into standalone tokens."""
    tail: list[str] = []
    while len(word) > 1 and word[-1] in SENTENCE_DELIMITERS:
        tail.append(word[-1])
        word = word[:-1]
    tail.reverse()
    return [word] + tail


def _check_sentinel_free(text: str) -> None:
    earliest = None
    surface = None
    for s in SENTINEL_SURFACES:
        offset = text.find(s)
        if offset != -1 and (earliest is None or offset < earliest):
            earliest = offset
            surface = s
    if earliest is not None:
        raise SentinelInTextError(surface, earliest)


def tokenize(text: str, vocab: Vocabulary) -> TokenSeq:
    """Tokenize whitespace-delimited text into vocabulary ids.

    Unknown words are added to the vocabulary. Text containing a reserved
    sentinel surface form is rejected with its offset.
    """
    _check_sentinel_free(text)
    ids = []
    for word in text.split():
        for piece in _split_word(word):
            ids.append(vocab.add(piece))
    return tuple(ids)


def detokenize(seq: Sequence[int], vocab: Vocabulary) -> str:
    """Join token surfaces with single spaces. Sentinel ids are rejected."""
    parts = []
    for position, token_id in enumerate(seq):
        if vocab.is_sentinel(token_id):
            raise SentinelInSequenceError(vocab.surface_of(token_id), position)
        parts.append(vocab.surface_of(token_id))
    return " ".join(parts)


def normalize(text: str) -> str:
    """Canonical surface form: single-space joined tokens of ``text``.

    ``detokenize(tokenize(x)) == normalize(x)`` for any sentinel-free input,
    and ``normalize`` is idempotent.
    """
    parts: list[str] = []
    for word in text.split():
        parts.extend(_split_word(word))
    return " ".join(parts)


def tokenize_all(texts: Iterable[str], vocab: Vocabulary) -> list[TokenSeq]:
    return [tokenize(t, vocab) for t in texts]
