"""Autoregressive scorers: next-token log-probabilities given an input and a target prefix.

Anything with a ``vocab_size`` attribute and a ``next_token_logprobs(input,
prefix)`` method returning a normalized log-probability vector can drive
the decoder.  Two implementations ship here: :class:`UniformScorer` and the
count-based :class:`CountScorer` (Laplace-smoothed n-gram over target
tokens, conditioned on the query relation and direction).
"""

from __future__ import annotations

import math
from numbers import Integral
from collections import Counter, defaultdict
from typing import Iterable, Iterator, Protocol, Sequence

import numpy as np

from . import _io
from .demonstration import (
    DemonstrationConfig,
    Direction,
    InputSequence,
    Query,
    TargetSequence,
    assemble_target,
    gold_entity,
    make_input,
)
from .errors import EmptyTrainSet
from .kg import KnowledgeGraph, Vocabulary

SCORER_FORMAT_VERSION = 1


class Scorer(Protocol):
    vocab_size: int

    def next_token_logprobs(self, inp: InputSequence, prefix: Sequence[int]) -> np.ndarray: ...


def uniform_logprobs(vocab_size) -> np.ndarray:
    """Log-probabilities of the uniform distribution over ``vocab_size`` tokens.

    Accepts a :class:`Vocabulary` or an integer size.
    """
    v = int(vocab_size) if isinstance(vocab_size, Integral) else len(vocab_size)
    if v < 1:
        raise ValueError("vocabulary must contain at least one token")
    return np.full(v, -math.log(v))


class UniformScorer:
    def __init__(self, vocab_size: int):
        self.vocab_size = int(vocab_size)
        self._logp = uniform_logprobs(self.vocab_size)
        self._logp.flags.writeable = False

    def next_token_logprobs(self, inp, prefix):
        return self._logp


def _direction_code(direction: Direction) -> int:
    return 0 if direction is Direction.TAIL else 1


class CountScorer:
    """Laplace-smoothed n-gram model over target tokens.

    The conditioning context is ``(relation, direction, last `order` prefix
    tokens)``; p(tok | ctx) = (count + alpha) / (total + alpha * V).
    """

    def __init__(self, vocab_size: int, order: int = 2, alpha: float = 1.0, counts=None):
        if alpha <= 0:
            raise ValueError("alpha must be positive")
        if order < 0:
            raise ValueError("order must be non-negative")
        self.vocab_size = int(vocab_size)
        self.order = int(order)
        self.alpha = float(alpha)
        # (relation, direction code, context tuple) -> Counter(token -> count)
        self.counts: dict[tuple, Counter] = defaultdict(Counter)
        if counts:
            for key, ctr in counts.items():
                self.counts[key].update(ctr)
        self._cache: dict[tuple, np.ndarray] = {}
        self._unseen = np.full(self.vocab_size, -math.log(self.vocab_size))
        self._unseen.flags.writeable = False

    def context_key(self, inp: InputSequence, prefix: Sequence[int]) -> tuple:
        ctx = tuple(prefix[max(0, len(prefix) - self.order):]) if self.order else ()
        return (inp.relation, _direction_code(inp.direction), ctx)

    def observe(self, inp: InputSequence, target: Sequence[int]) -> None:
        target = tuple(target)
        for i, tok in enumerate(target):
            self.counts[self.context_key(inp, target[:i])][tok] += 1
        self._cache.clear()

    def next_token_logprobs(self, inp, prefix):
        key = self.context_key(inp, prefix)
        vec = self._cache.get(key)
        if vec is not None:
            return vec
        ctr = self.counts.get(key)
        if not ctr:
            return self._unseen
        total = sum(ctr.values())
        denom = math.log(total + self.alpha * self.vocab_size)
        vec = np.full(self.vocab_size, math.log(self.alpha) - denom)
        toks = np.fromiter(ctr.keys(), dtype=np.int64, count=len(ctr))
        cnts = np.fromiter(ctr.values(), dtype=np.float64, count=len(ctr))
        vec[toks] = np.log(cnts + self.alpha) - denom
        vec.flags.writeable = False
        self._cache[key] = vec
        return vec

    def probability(self, inp: InputSequence, prefix: Sequence[int], token: int) -> float:
        ctr = self.counts.get(self.context_key(inp, prefix), Counter())
        return (ctr[token] + self.alpha) / (sum(ctr.values()) + self.alpha * self.vocab_size)

    # -- persistence ------------------------------------------------------

    def to_dict(self) -> dict:
        tables = []
        for (rel, d, ctx), ctr in sorted(self.counts.items()):
            if ctr:
                tables.append([rel, d, list(ctx), sorted(ctr.items())])
        return {"vocab_size": self.vocab_size, "order": self.order, "alpha": self.alpha, "tables": tables}

    @classmethod
    def from_dict(cls, d: dict) -> "CountScorer":
        counts = {(rel, dc, tuple(ctx)): Counter(dict((int(t), int(c)) for t, c in entries)) for rel, dc, ctx, entries in d["tables"]}
        return cls(d["vocab_size"], d["order"], d["alpha"], counts)

    def save(self, path) -> None:
        _io.write_artifact(path, "kgseq-count-scorer", SCORER_FORMAT_VERSION, self.to_dict())

    @classmethod
    def load(cls, path) -> "CountScorer":
        return cls.from_dict(_io.read_artifact(path, "kgseq-count-scorer", SCORER_FORMAT_VERSION))


def training_pairs(
    kg: KnowledgeGraph,
    vocab: Vocabulary,
    demo_cfg: DemonstrationConfig,
    triples: Iterable | None = None,
    directions: Sequence[Direction] = (Direction.TAIL, Direction.HEAD),
) -> Iterator[tuple[InputSequence, TargetSequence]]:
    """(input, target) pairs for every triple and direction; the gold triple is never a demonstration."""
    triples = kg.train if triples is None else triples
    for t in triples:
        for direction in directions:
            q = Query.from_triple(t, direction)
            inp = make_input(kg, vocab, q, demo_cfg, gold=t)
            yield inp, assemble_target(kg, gold_entity(t, direction), vocab)


def train_count_scorer(
    kg: KnowledgeGraph,
    vocab: Vocabulary,
    demo_cfg: DemonstrationConfig | None = None,
    order: int = 2,
    alpha: float = 1.0,
) -> CountScorer:
    if not kg.train:
        raise EmptyTrainSet("cannot train on an empty training split")
    scorer = CountScorer(len(vocab), order, alpha)
    for inp, target in training_pairs(kg, vocab, demo_cfg or DemonstrationConfig()):
        scorer.observe(inp, target.tokens)
    return scorer


def sequence_logprob(scorer: Scorer, inp: InputSequence, tokens: Sequence[int]) -> float:
    """Sum of per-step conditional log-probabilities of ``tokens`` given ``inp``."""
    tokens = tuple(tokens)
    total = 0.0
    for i, tok in enumerate(tokens):
        total = total + float(scorer.next_token_logprobs(inp, tokens[:i])[tok])
    return total


def nll_loss(scorer: Scorer, batch: Sequence[tuple[InputSequence, TargetSequence]]) -> float:
    """Mean negative sequence log-likelihood over ``batch``."""
    if not batch:
        raise ValueError("empty batch")
    total = 0.0
    for inp, target in batch:
        tokens = target.tokens if isinstance(target, TargetSequence) else tuple(target)
        total -= sequence_logprob(scorer, inp, tokens)
    return total / len(batch)
