"""Next-token log-probability scorers for the coherence metrics.

The scorer interface is one method: the log-probability of a given next
token after a context sequence. The bundled reference implementation is an
interpolated add-k n-gram model, small enough to verify by hand-counting;
a remote client can front any external language model behind the same
interface.
"""

from __future__ import annotations

import math
from typing import Hashable, Protocol, Sequence

import requests

from revise.tokenization import Vocabulary


class ScorerError(Exception):
    """Scorer could not produce a log-probability."""


class LMScorer(Protocol):
    def logprob(self, context: Sequence[Hashable], token: Hashable) -> float: ...


class UniformScorer:
    """Assigns every token probability 1/V; closed forms for tests."""

    def __init__(self, vocab_size: int):
        if vocab_size < 1:
            raise ValueError("vocab_size must be >= 1")
        self.vocab_size = vocab_size
        self._logprob = -math.log(vocab_size)

    def logprob(self, context, token) -> float:
        return self._logprob


# Reserved internal markers; plain objects so they never collide with
# user-supplied token ids or strings.
_PAD = object()
_UNK = object()


class NGramScorer:
    """Interpolated add-k n-gram model trained on a token-sequence corpus.

    Each order o in 1..n contributes an add-k estimate
    ``(count(context, token) + k) / (continuations(context) + k * V)``;
    orders are mixed with uniform weights. Unknown tokens map to a reserved
    type included in V, so probabilities over the vocabulary sum to one
    exactly for every context.
    """

    def __init__(
        self,
        corpus: Sequence[Sequence[Hashable]],
        order: int = 3,
        add_k: float = 0.1,
    ):
        if order < 1:
            raise ValueError("order must be >= 1")
        if add_k <= 0:
            raise ValueError("add_k must be > 0")
        self.order = order
        self.add_k = add_k
        self._gram_counts: list[dict] = [dict() for _ in range(order + 1)]
        self._context_totals: list[dict] = [dict() for _ in range(order + 1)]
        vocab: set = set()
        pad = (_PAD,) * (order - 1)
        for seq in corpus:
            seq = tuple(seq)
            vocab.update(seq)
            padded = pad + seq
            for pos in range(order - 1, len(padded)):
                for o in range(1, order + 1):
                    gram = padded[pos - o + 1 : pos + 1]
                    counts = self._gram_counts[o]
                    counts[gram] = counts.get(gram, 0) + 1
                    totals = self._context_totals[o]
                    context = gram[:-1]
                    totals[context] = totals.get(context, 0) + 1
        self._vocab = vocab
        # +1 for the unknown-token type.
        self.vocab_size = len(vocab) + 1

    def _map(self, token):
        return token if token in self._vocab else _UNK

    def prob(self, context: Sequence[Hashable], token: Hashable) -> float:
        token = self._map(token)
        mapped = tuple(self._map(t) for t in context)
        padded = (_PAD,) * (self.order - 1) + mapped
        weight = 1.0 / self.order
        kv = self.add_k * self.vocab_size
        p = 0.0
        for o in range(1, self.order + 1):
            ctx = padded[len(padded) - o + 1 :] if o > 1 else ()
            num = self._gram_counts[o].get(ctx + (token,), 0) + self.add_k
            den = self._context_totals[o].get(ctx, 0) + kv
            p += weight * num / den
        return p

    def logprob(self, context, token) -> float:
        return math.log(self.prob(context, token))

    def known_tokens(self):
        """All known types plus the unknown marker; iterates the model's V."""
        return list(self._vocab) + [_UNK]


class RemoteScorer:
    """HTTP client scoring one next token per request.

    POSTs ``{"context": [surface...], "token": surface}`` to
    ``{endpoint}/v1/logprob`` and expects ``{"logprob": number}``.
    """

    def __init__(
        self,
        endpoint: str,
        vocab: Vocabulary,
        timeout_s: float = 10.0,
        session: requests.Session | None = None,
    ):
        self.endpoint = endpoint.rstrip("/")
        self._vocab = vocab
        self.timeout_s = timeout_s
        self._http = session or requests.Session()

    def logprob(self, context, token) -> float:
        body = {
            "context": [self._vocab.surface_of(t) for t in context],
            "token": self._vocab.surface_of(token),
        }
        url = f"{self.endpoint}/v1/logprob"
        try:
            response = self._http.post(url, json=body, timeout=self.timeout_s)
        except requests.RequestException as exc:
            raise ScorerError(f"cannot reach {url}: {exc}") from exc
        if response.status_code != 200:
            raise ScorerError(f"scorer returned {response.status_code}")
        try:
            value = response.json()["logprob"]
        except (ValueError, KeyError) as exc:
            raise ScorerError(f"malformed scorer response: {exc}") from exc
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ScorerError("scorer logprob is not a number")
        return float(value)
