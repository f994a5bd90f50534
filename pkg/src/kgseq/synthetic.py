"""Random knowledge graphs for scaling runs and property tests."""

from __future__ import annotations

import numpy as np

from .kg import Entity, KnowledgeGraph, Relation, Triple


def synthetic_kg(
    n_entities: int,
    n_relations: int = 4,
    n_categories: int = 6,
    alphabet_size: int = 48,
    name_length: int = 3,
    description_length: int = 8,
    triples_per_entity: float = 2.0,
    eval_fraction: float = 0.05,
    seed: int = 0,
) -> KnowledgeGraph:
    """A KG whose entity names are random words over a fixed alphabet.

    Names are distinct and all ``name_length`` tokens long, so no target is a
    prefix of another.  Each entity gets one category drawn uniformly.
    Triples are distinct and split train / dev / test with ``eval_fraction``
    of them in each evaluation split.
    """
    if alphabet_size**name_length < n_entities:
        raise ValueError("alphabet too small for the requested number of distinct names")
    rng = np.random.default_rng(seed)
    words = [f"w{i:03d}" for i in range(alphabet_size)]

    names: set[tuple[int, ...]] = set()
    ordered = []
    while len(ordered) < n_entities:
        cand = tuple(int(x) for x in rng.integers(0, alphabet_size, size=name_length))
        if cand not in names:
            names.add(cand)
            ordered.append(cand)
    cats = rng.integers(0, n_categories, size=n_entities)
    descs = rng.integers(0, alphabet_size, size=(n_entities, description_length))
    entities = [
        Entity(
            i,
            f"e{i}",
            " ".join(words[w] for w in ordered[i]),
            " ".join(words[w] for w in descs[i]),
            (f"cat{int(cats[i])}",),
        )
        for i in range(n_entities)
    ]
    relations = [Relation(i, f"r{i}", f"relation {words[i % alphabet_size]}") for i in range(n_relations)]

    n_triples = max(1, int(round(triples_per_entity * n_entities)))
    seen: set[Triple] = set()
    triples = []
    attempts = 0
    while len(triples) < n_triples and attempts < 20 * n_triples:
        attempts += 1
        h, t = (int(x) for x in rng.integers(0, n_entities, size=2))
        r = int(rng.integers(0, n_relations))
        tr = Triple(h, r, t)
        if h != t and tr not in seen:
            seen.add(tr)
            triples.append(tr)
    n_eval = int(len(triples) * eval_fraction)
    dev = triples[:n_eval]
    test = triples[n_eval : 2 * n_eval]
    train = triples[2 * n_eval :]
    return KnowledgeGraph.build(entities, relations, train, dev, test)
