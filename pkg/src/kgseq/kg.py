"""Knowledge-graph data model, TSV ingestion, tokenizer and vocabulary.

Dataset directory layout (tab separated, UTF-8, one record per line)::

    train.tsv / valid.tsv / test.tsv   head_id  relation_id  tail_id
    entity2text.tsv                    entity_id  name  description
    entity2type.tsv   (optional)       entity_id  category
    relation2text.tsv                  relation_id  text

String ids from the files are remapped to dense integers in file order; the
original strings are kept as ``key`` on each record.
"""

from __future__ import annotations

import re
from numbers import Integral
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

from . import _io
from .errors import (
    DanglingReference,
    DuplicateId,
    MalformedLine,
    MissingFile,
    OverlappingSplits,
    UnknownEntity,
)

DEFAULT_CATEGORY = "unknown"

SPLIT_FILES = {"train": "train.tsv", "dev": "valid.tsv", "test": "test.tsv"}
ENTITY_FILE = "entity2text.tsv"
TYPE_FILE = "entity2type.tsv"
RELATION_FILE = "relation2text.tsv"


# ---------------------------------------------------------------------------
# records
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Entity:
    id: int
    key: str
    name: str
    description: str
    categories: tuple[str, ...]


@dataclass(frozen=True)
class Relation:
    id: int
    key: str
    description: str

    @property
    def name(self) -> str:
        return self.key


class Triple(NamedTuple):
    head: int
    relation: int
    tail: int


@dataclass(frozen=True)
class IngestConfig:
    max_description_tokens: int = 64
    default_category: str = DEFAULT_CATEGORY


@dataclass(frozen=True)
class KnowledgeGraph:
    """Immutable KG: entities, relations, three triple splits.

    ``category_freq`` counts, for every training triple, each category of
    the head and each category of the tail once.
    """

    entities: tuple[Entity, ...]
    relations: tuple[Relation, ...]
    train: tuple[Triple, ...]
    dev: tuple[Triple, ...]
    test: tuple[Triple, ...]
    category_freq: dict = field(default_factory=dict)

    @classmethod
    def build(cls, entities, relations, train=(), dev=(), test=()) -> "KnowledgeGraph":
        entities = tuple(entities)
        relations = tuple(relations)
        for i, e in enumerate(entities):
            if e.id != i:
                raise ValueError(f"entity ids must be dense from 0; position {i} holds id {e.id}")
            if not e.name or not split_text(e.name):
                raise ValueError(f"entity {e.key!r} has an empty name")
            if not e.categories:
                raise ValueError(f"entity {e.key!r} has no categories")
        for i, r in enumerate(relations):
            if r.id != i:
                raise ValueError(f"relation ids must be dense from 0; position {i} holds id {r.id}")
            if not r.key:
                raise ValueError("relation with empty name")
        splits = {}
        for split_name, triples in (("train", train), ("dev", dev), ("test", test)):
            checked = []
            for t in triples:
                t = Triple(*t)
                for ent in (t.head, t.tail):
                    if not 0 <= ent < len(entities):
                        raise DanglingReference(ent, f"entity in {split_name} split")
                if not 0 <= t.relation < len(relations):
                    raise DanglingReference(t.relation, f"relation in {split_name} split")
                checked.append(t)
            splits[split_name] = tuple(checked)
        sets = {k: set(v) for k, v in splits.items()}
        for a, b in (("train", "dev"), ("train", "test"), ("dev", "test")):
            shared = sets[a] & sets[b]
            if shared:
                raise OverlappingSplits(f"{len(shared)} triple(s) appear in both {a} and {b}")
        freq = Counter()
        for t in splits["train"]:
            freq.update(entities[t.head].categories)
            freq.update(entities[t.tail].categories)
        return cls(entities, relations, splits["train"], splits["dev"], splits["test"], dict(sorted(freq.items())))

    def entity(self, e: int) -> Entity:
        if not isinstance(e, Integral) or not 0 <= e < len(self.entities):
            raise UnknownEntity(e)
        return self.entities[e]

    def relation(self, r: int) -> Relation:
        if not 0 <= r < len(self.relations):
            raise DanglingReference(r, "relation")
        return self.relations[r]

    def entity_id(self, key: str) -> int:
        try:
            return self._entity_index[key]
        except KeyError:
            raise UnknownEntity(key) from None

    def relation_id(self, key: str) -> int:
        try:
            return self._relation_index[key]
        except KeyError:
            raise DanglingReference(key, "relation") from None

    @property
    def _entity_index(self) -> dict:
        idx = self.__dict__.get("_eidx")
        if idx is None:
            idx = {e.key: e.id for e in self.entities}
            object.__setattr__(self, "_eidx", idx)
        return idx

    @property
    def _relation_index(self) -> dict:
        idx = self.__dict__.get("_ridx")
        if idx is None:
            idx = {r.key: r.id for r in self.relations}
            object.__setattr__(self, "_ridx", idx)
        return idx

    def train_with_relation(self, r: int) -> tuple[Triple, ...]:
        """Training triples with relation ``r``, in file order."""
        idx = self.__dict__.get("_by_rel")
        if idx is None:
            idx = {}
            for t in self.train:
                idx.setdefault(t.relation, []).append(t)
            idx = {k: tuple(v) for k, v in idx.items()}
            object.__setattr__(self, "_by_rel", idx)
        return idx.get(r, ())

    @property
    def categories(self) -> list[str]:
        return sorted({c for e in self.entities for c in e.categories})

    def counts(self) -> dict:
        return {
            "entities": len(self.entities),
            "relations": len(self.relations),
            "train": len(self.train),
            "dev": len(self.dev),
            "test": len(self.test),
        }

    def summary(self) -> str:
        c = self.counts()
        return f"{c['entities']} entities, {c['relations']} relations, {c['train']}/{c['dev']}/{c['test']}"

    def to_dict(self) -> dict:
        return {
            "entities": [[e.key, e.name, e.description, list(e.categories)] for e in self.entities],
            "relations": [[r.key, r.description] for r in self.relations],
            "train": [list(t) for t in self.train],
            "dev": [list(t) for t in self.dev],
            "test": [list(t) for t in self.test],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "KnowledgeGraph":
        entities = [Entity(i, k, n, desc, tuple(cats)) for i, (k, n, desc, cats) in enumerate(d["entities"])]
        relations = [Relation(i, k, desc) for i, (k, desc) in enumerate(d["relations"])]
        return cls.build(entities, relations, d["train"], d["dev"], d["test"])

    def save(self, path) -> None:
        _io.write_artifact(path, "kgseq-kg", KG_FORMAT_VERSION, self.to_dict())

    @classmethod
    def load(cls, path) -> "KnowledgeGraph":
        return cls.from_dict(_io.read_artifact(path, "kgseq-kg", KG_FORMAT_VERSION))


KG_FORMAT_VERSION = 1


# ---------------------------------------------------------------------------
# ingestion
# ---------------------------------------------------------------------------


def _read_rows(path: Path, widths: Sequence[int]):
    """Yield (line_number, fields) for non-blank lines; field count must be in ``widths``."""
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\r\n")
            if not line.strip():
                continue
            fields = line.split("\t")
            if len(fields) not in widths:
                raise MalformedLine(path, lineno, f"expected {' or '.join(map(str, widths))} tab-separated fields, got {len(fields)}")
            yield lineno, fields


def truncate_text(text: str, max_tokens: int) -> str:
    tokens = split_text(text)
    if len(tokens) <= max_tokens:
        return text
    return " ".join(tokens[:max_tokens])


def load_dataset(dir_path, config: IngestConfig | None = None) -> KnowledgeGraph:
    config = config or IngestConfig()
    root = Path(dir_path)
    required = [ENTITY_FILE, RELATION_FILE, *SPLIT_FILES.values()]
    for name in required:
        if not (root / name).is_file():
            raise MissingFile(root / name)

    path = root / ENTITY_FILE
    ent_rows = []
    ent_index: dict[str, int] = {}
    for lineno, fields in _read_rows(path, (2, 3)):
        key, name = fields[0], fields[1]
        desc = fields[2] if len(fields) == 3 else ""
        if not key:
            raise MalformedLine(path, lineno, "empty entity id")
        if key in ent_index:
            raise DuplicateId(key, f"{path}:{lineno}")
        if not split_text(name):
            raise MalformedLine(path, lineno, "entity name yields no tokens")
        ent_index[key] = len(ent_rows)
        ent_rows.append((key, name.strip(), truncate_text(desc.strip(), config.max_description_tokens)))

    categories: dict[int, list[str]] = {}
    type_path = root / TYPE_FILE
    if type_path.is_file():
        for lineno, fields in _read_rows(type_path, (2,)):
            key, cat = fields[0], fields[1].strip()
            if key not in ent_index:
                raise DanglingReference(key, f"{type_path}:{lineno}")
            if not cat:
                raise MalformedLine(type_path, lineno, "empty category")
            cats = categories.setdefault(ent_index[key], [])
            if cat not in cats:
                cats.append(cat)

    entities = [
        Entity(i, key, name, desc, tuple(categories.get(i) or (config.default_category,)))
        for i, (key, name, desc) in enumerate(ent_rows)
    ]

    path = root / RELATION_FILE
    relations = []
    rel_index: dict[str, int] = {}
    for lineno, (key, text) in _read_rows(path, (2,)):
        if not key:
            raise MalformedLine(path, lineno, "empty relation id")
        if key in rel_index:
            raise DuplicateId(key, f"{path}:{lineno}")
        rel_index[key] = len(relations)
        relations.append(Relation(len(relations), key, text.strip()))

    splits = {}
    for split, fname in SPLIT_FILES.items():
        path = root / fname
        triples = []
        for lineno, (h, r, t) in _read_rows(path, (3,)):
            for ent in (h, t):
                if ent not in ent_index:
                    raise DanglingReference(ent, f"{path}:{lineno}")
            if r not in rel_index:
                raise DanglingReference(r, f"{path}:{lineno}")
            triples.append(Triple(ent_index[h], rel_index[r], ent_index[t]))
        splits[split] = triples

    return KnowledgeGraph.build(entities, relations, **splits)


def write_dataset(kg: KnowledgeGraph, dir_path) -> None:
    """Write ``kg`` in the TSV layout read by :func:`load_dataset`."""
    root = Path(dir_path)
    root.mkdir(parents=True, exist_ok=True)
    with open(root / ENTITY_FILE, "w", encoding="utf-8") as fh:
        for e in kg.entities:
            fh.write(f"{e.key}\t{e.name}\t{e.description}\n")
    with open(root / TYPE_FILE, "w", encoding="utf-8") as fh:
        for e in kg.entities:
            for c in e.categories:
                fh.write(f"{e.key}\t{c}\n")
    with open(root / RELATION_FILE, "w", encoding="utf-8") as fh:
        for r in kg.relations:
            fh.write(f"{r.key}\t{r.description}\n")
    for split, fname in SPLIT_FILES.items():
        with open(root / fname, "w", encoding="utf-8") as fh:
            for h, r, t in getattr(kg, split):
                fh.write(f"{kg.entities[h].key}\t{kg.relations[r].key}\t{kg.entities[t].key}\n")


def toy_dataset_path() -> Path:
    """Directory of the bundled 12-entity fixture."""
    return Path(__file__).parent / "data" / "toy"


def load_toy(config: IngestConfig | None = None) -> KnowledgeGraph:
    return load_dataset(toy_dataset_path(), config)


# ---------------------------------------------------------------------------
# tokenizer & vocabulary
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(r"\w+|[^\w\s]")

PAD, BOS, EOS, SEP, UNK, REV, DSEP = "<pad>", "<bos>", "<eos>", "<sep>", "<unk>", "<rev>", "<dsep>"
SPECIAL_TOKENS = (PAD, BOS, EOS, SEP, UNK, REV, DSEP)


def split_text(text: str) -> list[str]:
    """Lowercase and split on whitespace; each punctuation character is its own token."""
    return _TOKEN_RE.findall(text.lower())


def relation_text(rel: Relation) -> str:
    return rel.description or rel.key


def entity_context_text(ent: Entity) -> str:
    """Text describing ``ent`` in a query: its description, or its name when that is empty."""
    return ent.description or ent.name


def category_token(category: str) -> str:
    return f"[C:{category}]"


def disambiguator_token(entity_id: int) -> str:
    return f"[D:{entity_id}]"


@dataclass(frozen=True)
class Vocabulary:
    """Bijection between token strings and dense ids.

    Layout: special tokens, category tokens, entity disambiguator tokens,
    then text tokens.  Text tokens come from :func:`split_text` and so can
    never collide with the bracketed reserved tokens.
    """

    tokens: tuple[str, ...]
    n_reserved: int

    def __post_init__(self):
        index = {t: i for i, t in enumerate(self.tokens)}
        if len(index) != len(self.tokens):
            raise ValueError("vocabulary contains duplicate tokens")
        object.__setattr__(self, "_index", index)

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._index

    def encode(self, token: str) -> int:
        return self._index.get(token, self.unk)

    def decode(self, token_id: int) -> str:
        return self.tokens[token_id]

    def decode_many(self, ids: Iterable[int]) -> list[str]:
        return [self.tokens[i] for i in ids]

    def is_reserved(self, token_id: int) -> bool:
        return token_id < self.n_reserved

    pad = property(lambda self: 0)
    bos = property(lambda self: 1)
    eos = property(lambda self: 2)
    sep = property(lambda self: 3)
    unk = property(lambda self: 4)
    rev = property(lambda self: 5)
    dsep = property(lambda self: 6)

    def to_dict(self) -> dict:
        return {"tokens": list(self.tokens), "n_reserved": self.n_reserved}

    @classmethod
    def from_dict(cls, d: dict) -> "Vocabulary":
        return cls(tuple(d["tokens"]), d["n_reserved"])

    def save(self, path) -> None:
        _io.write_artifact(path, "kgseq-vocab", VOCAB_FORMAT_VERSION, self.to_dict())

    @classmethod
    def load(cls, path) -> "Vocabulary":
        return cls.from_dict(_io.read_artifact(path, "kgseq-vocab", VOCAB_FORMAT_VERSION))


VOCAB_FORMAT_VERSION = 1


def tokenize(text: str, vocab: Vocabulary) -> list[int]:
    """Token ids for ``text``; out-of-vocabulary words map to UNK."""
    return [vocab.encode(tok) for tok in split_text(text)]


def lowest_freq_category(kg: KnowledgeGraph, e: int) -> str:
    """Category of ``e`` seen least often in training; ties go to the smaller name."""
    ent = kg.entity(e)
    return min(ent.categories, key=lambda c: (kg.category_freq.get(c, 0), c))


def base_target_strings(kg: KnowledgeGraph) -> list[tuple[str, ...]]:
    """Category token followed by name tokens, per entity, before disambiguation."""
    return [(category_token(lowest_freq_category(kg, e.id)), *split_text(e.name)) for e in kg.entities]


def entities_needing_disambiguation(kg: KnowledgeGraph) -> list[int]:
    """Entities whose base target equals, or is a strict prefix of, another entity's."""
    seqs = base_target_strings(kg)
    order = sorted(range(len(seqs)), key=lambda i: seqs[i])
    needed = set()
    for pos, i in enumerate(order):
        s = seqs[i]
        if pos + 1 < len(order):
            nxt = seqs[order[pos + 1]]
            if nxt[: len(s)] == s:
                needed.add(i)
        if pos > 0 and seqs[order[pos - 1]] == s:
            needed.add(i)
    return sorted(needed)


def build_vocabulary(kg: KnowledgeGraph) -> Vocabulary:
    text = set()
    for e in kg.entities:
        text.update(split_text(e.name))
        text.update(split_text(e.description))
    for r in kg.relations:
        text.update(split_text(relation_text(r)))
    reserved = list(SPECIAL_TOKENS)
    reserved += [category_token(c) for c in kg.categories]
    reserved += [disambiguator_token(e) for e in entities_needing_disambiguation(kg)]
    return Vocabulary(tuple(reserved) + tuple(sorted(text)), len(reserved))
