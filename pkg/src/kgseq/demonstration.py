"""Encoder inputs with relation-guided demonstrations, and decoder targets.

An input looks like::

    <bos> demo_1 demo_2 ... <sep> known-entity text  [<rev>] relation text <sep>

where each demo is ``head name, relation text, tail name`` for a training
triple sharing the query relation.  A target is the entity's category token,
its name tokens, an optional disambiguator, then ``<eos>``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import UnknownId
from .kg import (
    KnowledgeGraph,
    Triple,
    Vocabulary,
    category_token,
    disambiguator_token,
    entity_context_text,
    lowest_freq_category,
    relation_text,
    tokenize,
)


class Direction(enum.Enum):
    TAIL = "tail"  # (h, r, ?)
    HEAD = "head"  # (?, r, t)


@dataclass(frozen=True)
class Query:
    known: int
    relation: int
    direction: Direction = Direction.TAIL

    @classmethod
    def from_triple(cls, t: Triple, direction: Direction) -> "Query":
        if direction is Direction.TAIL:
            return cls(t.head, t.relation, direction)
        return cls(t.tail, t.relation, direction)


def gold_entity(t: Triple, direction: Direction) -> int:
    return t.tail if direction is Direction.TAIL else t.head


@dataclass(frozen=True)
class DemonstrationConfig:
    count: int = 2
    seed: int = 0
    max_demo_tokens: int = 256
    separate_demos: bool = False

    def __post_init__(self):
        if self.count < 0:
            raise ValueError("demonstration count must be non-negative")


@dataclass(frozen=True)
class InputSequence:
    """Encoder token ids plus the query metadata scorers may condition on."""

    tokens: tuple[int, ...]
    relation: int
    direction: Direction = Direction.TAIL


@dataclass(frozen=True)
class TargetSequence:
    tokens: tuple[int, ...]
    entity: int


def _check_query(kg: KnowledgeGraph, q: Query) -> None:
    if not 0 <= q.known < len(kg.entities):
        raise UnknownId(f"entity {q.known}")
    if not 0 <= q.relation < len(kg.relations):
        raise UnknownId(f"relation {q.relation}")


def _direction_code(direction: Direction) -> int:
    return 0 if direction is Direction.TAIL else 1


def sample_demonstrations(
    kg: KnowledgeGraph,
    q: Query,
    cfg: DemonstrationConfig,
    exclude: Iterable[Triple] = (),
) -> list[Triple]:
    """Up to ``cfg.count`` training triples sharing the query relation.

    Sampling is uniform without replacement, seeded by ``cfg.seed`` and the
    query itself, so repeated calls return the same list in the same order.
    """
    _check_query(kg, q)
    if cfg.count == 0:
        return []
    exclude = set(exclude)
    pool = [t for t in kg.train_with_relation(q.relation) if t not in exclude]
    if not pool:
        return []
    rng = np.random.default_rng([cfg.seed, q.known, q.relation, _direction_code(q.direction)])
    picks = rng.choice(len(pool), size=min(cfg.count, len(pool)), replace=False)
    return [pool[i] for i in picks]


def assemble_input(
    kg: KnowledgeGraph,
    q: Query,
    demos: Iterable[Triple],
    vocab: Vocabulary,
    cfg: DemonstrationConfig | None = None,
) -> InputSequence:
    cfg = cfg or DemonstrationConfig()
    _check_query(kg, q)
    block: list[int] = []
    for t in demos:
        t = Triple(*t)
        try:
            head, rel, tail = kg.entities[t.head], kg.relations[t.relation], kg.entities[t.tail]
        except IndexError:
            raise UnknownId(f"demonstration triple {tuple(t)}") from None
        demo = tokenize(head.name, vocab) + tokenize(relation_text(rel), vocab) + tokenize(tail.name, vocab)
        if cfg.separate_demos and block:
            demo = [vocab.dsep] + demo
        if len(block) + len(demo) > cfg.max_demo_tokens:
            break
        block.extend(demo)

    query_block = tokenize(entity_context_text(kg.entities[q.known]), vocab)
    if q.direction is Direction.HEAD:
        query_block.append(vocab.rev)
    query_block += tokenize(relation_text(kg.relations[q.relation]), vocab)

    tokens = [vocab.bos, *block, vocab.sep, *query_block, vocab.sep]
    return InputSequence(tuple(tokens), q.relation, q.direction)


def assemble_target(kg: KnowledgeGraph, e: int, vocab: Vocabulary) -> TargetSequence:
    ent = kg.entity(e)
    tokens = [vocab.encode(category_token(lowest_freq_category(kg, e)))]
    tokens += tokenize(ent.name, vocab)
    disamb = disambiguator_token(e)
    if disamb in vocab:
        tokens.append(vocab.encode(disamb))
    tokens.append(vocab.eos)
    return TargetSequence(tuple(tokens), e)


def make_input(
    kg: KnowledgeGraph,
    vocab: Vocabulary,
    q: Query,
    cfg: DemonstrationConfig,
    gold: Triple | None = None,
) -> InputSequence:
    """Sample demonstrations (never the gold triple) and assemble the input."""
    exclude = () if gold is None else (Triple(*gold),)
    return assemble_input(kg, q, sample_demonstrations(kg, q, cfg, exclude), vocab, cfg)
