"""
Loading a knowledge graph and building the entity trie
=======================================================

The bundled toy graph has twelve entities. Each one becomes a token
sequence: its rarest category token, then its name, then an end marker.
"""

from kgseq import build_trie, build_vocabulary, load_toy
from kgseq.kg import lowest_freq_category

kg = load_toy()
print(kg.summary())

# category counts come from the training triples only
for cat, n in sorted(kg.category_freq.items()):
    print(f"{cat:>12} {n}")

# pitt carries three categories; ties go to the alphabetically first
pitt = kg.entity_id("pitt")
print(kg.entities[pitt].categories, "->", lowest_freq_category(kg, pitt))

vocab = build_vocabulary(kg)
trie = build_trie(kg, vocab)
print(f"{len(vocab)} tokens, {trie.node_count} trie nodes")

# "University of California" is a prefix of three other names, so it
# gets its own disambiguator token instead of ending mid-path
for e in trie.entities():
    print(f"{kg.entities[e].key:>15}  {' '.join(vocab.decode_many(trie.target(e)))}")

# what may follow "[C:university] university of"
prefix = [vocab.encode(t) for t in ("[C:university]", "university", "of")]
print(vocab.decode_many(sorted(trie.allowed_next(prefix))))
