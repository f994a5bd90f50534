import math

import numpy as np
import pytest

from kgseq.kg import build_vocabulary, load_toy, toy_dataset_path
from kgseq.scorer import train_count_scorer
from kgseq.synthetic import synthetic_kg
from kgseq.trie import build_trie


class RandomScorer:
    """Deterministic pseudo-random next-token distributions keyed on (input, prefix)."""

    def __init__(self, vocab_size, seed=0, temperature=1.0):
        self.vocab_size = vocab_size
        self.seed = seed
        self.temperature = temperature

    def next_token_logprobs(self, inp, prefix):
        key = hash((self.seed, inp.tokens, inp.relation, inp.direction.value == "head", tuple(prefix))) & 0xFFFFFFFF
        logits = np.random.default_rng(key).normal(size=self.vocab_size) / self.temperature
        return logits - (logits.max() + np.log(np.exp(logits - logits.max()).sum()))


class GoldFirstScorer:
    """Puts most mass on the next token of a known gold target for each input."""

    def __init__(self, vocab_size, gold_by_input, p_gold=0.9):
        self.vocab_size = vocab_size
        self.gold_by_input = gold_by_input
        self.p_gold = p_gold
        self._uniform = np.full(vocab_size, -math.log(vocab_size))

    def next_token_logprobs(self, inp, prefix):
        gold = self.gold_by_input.get(inp.tokens)
        prefix = tuple(prefix)
        if gold is None or gold[: len(prefix)] != prefix or len(prefix) >= len(gold):
            return self._uniform
        out = np.full(self.vocab_size, math.log((1 - self.p_gold) / (self.vocab_size - 1)))
        out[gold[len(prefix)]] = math.log(self.p_gold)
        return out


@pytest.fixture(scope="session")
def toy_dir():
    return toy_dataset_path()


@pytest.fixture(scope="session")
def toy_kg():
    return load_toy()


@pytest.fixture(scope="session")
def toy_vocab(toy_kg):
    return build_vocabulary(toy_kg)


@pytest.fixture(scope="session")
def toy_trie(toy_kg, toy_vocab):
    return build_trie(toy_kg, toy_vocab)


@pytest.fixture(scope="session")
def toy_scorer(toy_kg, toy_vocab):
    return train_count_scorer(toy_kg, toy_vocab)


@pytest.fixture(scope="session")
def syn200():
    kg = synthetic_kg(200, seed=3)
    vocab = build_vocabulary(kg)
    return kg, vocab, build_trie(kg, vocab)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
