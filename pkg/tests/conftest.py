from __future__ import annotations

import pytest

from revise.tokenization import Vocabulary, tokenize


@pytest.fixture
def vocab():
    return Vocabulary()


@pytest.fixture
def toks(vocab):
    """Tokenize text into ids through the test's shared vocabulary."""

    def _toks(text: str):
        return tokenize(text, vocab)

    return _toks


@pytest.fixture
def mini_corpus():
    from importlib.resources import files

    from revise.datagen import read_corpus

    return read_corpus(files("revise.data") / "mini_corpus.jsonl")
