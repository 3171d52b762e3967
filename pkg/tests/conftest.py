import numpy as np
import pytest

from stylener.corpus import BioTag, NerCorpus, TaggedSentence, TypeRegistry
from stylener.linearize import PrefixScheme
from stylener.model import ModelConfig, init_transfer_model
from stylener.vocab import Vocabulary

WORDS = (
    "alpha", "bravo", "charlie", "delta", "echo", "foxtrot", "golf",
    "hotel", "india", "juliet", "kilo", "lima", "mike", "november",
)


@pytest.fixture
def registry():
    return TypeRegistry(("PER", "ORG", "LOC"))


def random_sentence(rng, types, words=WORDS, min_len=1, max_len=12):
    """BIO-valid random sentence; entity spans placed greedily."""
    n = int(rng.integers(min_len, max_len + 1))
    tokens = [words[int(rng.integers(len(words)))] for _ in range(n)]
    tags = [BioTag("O")] * n
    i = 0
    names = list(types)
    while i < n:
        if rng.random() < 0.3:
            span_len = min(int(rng.integers(1, 4)), n - i)
            etype = names[int(rng.integers(len(names)))]
            tags[i] = BioTag("B", etype)
            for j in range(i + 1, i + span_len):
                tags[j] = BioTag("I", etype)
            i += span_len + 1  # gap so adjacent spans stay distinguishable
        else:
            i += 1
    return TaggedSentence(tuple(tokens), tuple(tags))


def random_corpus(rng, types, n, style="source", **kw):
    return NerCorpus(tuple(random_sentence(rng, types, **kw) for _ in range(n)), style, types)


@pytest.fixture
def tiny_vocab(registry):
    return Vocabulary(registry, WORDS, PrefixScheme.default())


@pytest.fixture
def tiny_model(tiny_vocab):
    return init_transfer_model(ModelConfig(dim=5, max_len=24), tiny_vocab, seed=3)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
