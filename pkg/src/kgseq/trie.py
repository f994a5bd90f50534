"""Prefix tree over entity target sequences.

Each entity contributes the path ``[category] name-tokens [disambiguator]``;
the node at the end of the path is a leaf carrying the entity id, and the
only legal continuation from a leaf is ``<eos>``.  The root's children are
therefore exactly the category tokens in use.
"""

from __future__ import annotations

from typing import Iterable, Sequence

from . import _io
from .demonstration import assemble_target
from .errors import DuplicateTarget, EmptyTrie, InvalidPrefix
from .kg import KnowledgeGraph, Vocabulary

TRIE_FORMAT_VERSION = 1
ROOT = 0
NO_ENTITY = -1


class EntityTrie:
    __slots__ = ("_children", "_entity", "_paths", "eos")

    def __init__(self, eos: int):
        self.eos = eos
        self._children: list[dict[int, int]] = [{}]
        self._entity: list[int] = [NO_ENTITY]
        self._paths: dict[int, tuple[int, ...]] = {}

    def insert(self, path: Sequence[int], entity: int) -> None:
        """Add ``path`` (without ``<eos>``) ending at ``entity``."""
        if entity in self._paths:
            raise DuplicateTarget(f"entity {entity} inserted twice")
        if not path:
            raise ValueError("empty path")
        node = ROOT
        for tok in path:
            if self._entity[node] != NO_ENTITY:
                raise DuplicateTarget(
                    f"entity {entity} path passes through the leaf of entity {self._entity[node]}"
                )
            nxt = self._children[node].get(tok)
            if nxt is None:
                nxt = len(self._children)
                self._children[node][tok] = nxt
                self._children.append({})
                self._entity.append(NO_ENTITY)
            node = nxt
        if self._entity[node] != NO_ENTITY:
            raise DuplicateTarget(f"entities {self._entity[node]} and {entity} share a target sequence")
        if self._children[node]:
            raise DuplicateTarget(f"entity {entity} path is a strict prefix of another entity's")
        self._entity[node] = entity
        self._paths[entity] = tuple(path)

    # -- navigation -------------------------------------------------------

    @property
    def root(self) -> int:
        return ROOT

    def __len__(self) -> int:
        return len(self._paths)

    @property
    def node_count(self) -> int:
        return len(self._children)

    def step(self, node: int, token: int) -> int:
        """Child of ``node`` along ``token``, or -1."""
        return self._children[node].get(token, -1)

    def children(self, node: int) -> dict[int, int]:
        return self._children[node]

    def terminal_entity(self, node: int) -> int:
        return self._entity[node]

    def is_terminal(self, node: int) -> bool:
        return self._entity[node] != NO_ENTITY

    def allowed_from(self, node: int) -> list[int]:
        if self._entity[node] != NO_ENTITY:
            return [self.eos]
        return list(self._children[node])

    def walk(self, prefix: Iterable[int]) -> int:
        node = ROOT
        prefix = list(prefix)
        for i, tok in enumerate(prefix):
            if self._entity[node] != NO_ENTITY:
                raise InvalidPrefix(f"prefix continues past a complete entity at position {i}")
            nxt = self._children[node].get(tok)
            if nxt is None:
                raise InvalidPrefix(f"token {tok} at position {i} is not a legal continuation")
            node = nxt
        return node

    def allowed_next(self, prefix: Iterable[int]) -> set[int]:
        return set(self.allowed_from(self.walk(prefix)))

    def entity_of(self, tokens: Sequence[int]) -> int:
        """Entity decoded by a full target sequence (with or without trailing ``<eos>``)."""
        tokens = list(tokens)
        if tokens and tokens[-1] == self.eos:
            tokens = tokens[:-1]
        node = self.walk(tokens)
        if self._entity[node] == NO_ENTITY:
            raise InvalidPrefix("sequence does not end at an entity")
        return self._entity[node]

    def target(self, entity: int) -> tuple[int, ...]:
        """Full target sequence for ``entity``, ``<eos>`` included."""
        return self._paths[entity] + (self.eos,)

    def entities(self) -> list[int]:
        return sorted(self._paths)

    # -- persistence ------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "eos": self.eos,
            "nodes": [sorted(ch.items()) for ch in self._children],
            "entity": list(self._entity),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EntityTrie":
        trie = cls(d["eos"])
        trie._children = [{int(t): int(c) for t, c in node} for node in d["nodes"]]
        trie._entity = [int(e) for e in d["entity"]]
        if len(trie._children) != len(trie._entity):
            raise ValueError("corrupt trie: node and terminal tables differ in length")
        stack = [(ROOT, ())]
        while stack:
            node, path = stack.pop()
            if trie._entity[node] != NO_ENTITY:
                trie._paths[trie._entity[node]] = path
            for tok, child in trie._children[node].items():
                stack.append((child, path + (tok,)))
        return trie

    def dumps(self) -> str:
        return _io.dumps_artifact("kgseq-trie", TRIE_FORMAT_VERSION, self.to_dict())

    @classmethod
    def loads(cls, text: str) -> "EntityTrie":
        return cls.from_dict(_io.loads_artifact(text, "kgseq-trie", TRIE_FORMAT_VERSION))

    def save(self, path) -> None:
        _io.write_artifact(path, "kgseq-trie", TRIE_FORMAT_VERSION, self.to_dict())

    @classmethod
    def load(cls, path) -> "EntityTrie":
        return cls.from_dict(_io.read_artifact(path, "kgseq-trie", TRIE_FORMAT_VERSION))


def build_trie(kg: KnowledgeGraph, vocab: Vocabulary) -> EntityTrie:
    trie = EntityTrie(vocab.eos)
    for e in kg.entities:
        tokens = assemble_target(kg, e.id, vocab).tokens
        trie.insert(tokens[:-1], e.id)
    if len(trie) == 0:
        raise EmptyTrie("knowledge graph has no entities")
    return trie
