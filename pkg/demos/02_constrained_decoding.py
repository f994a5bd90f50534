"""
Constrained decoding of a tail entity
======================================

A text-only scorer likes to stop right after "University of California".
The trie does not allow that, so every candidate is a complete entity.
"""

import numpy as np

from kgseq import Entity, InputSequence, KnowledgeGraph, build_trie, build_vocabulary
from kgseq.decoding import constrained_beam_search

names = [
    "University of California",
    "University of California, Irvine",
    "University of California, San Francisco",
    "University of California, Davis",
    "University of California, Santa Cruz",
    "University of Calgary",
]
kg = KnowledgeGraph.build([Entity(i, f"u{i}", n, "", ("university",)) for i, n in enumerate(names)], [])
vocab = build_vocabulary(kg)
trie = build_trie(kg, vocab)

# next-word preferences of a small bigram-style model
follow = {
    None: {"[C:university]": 1.0},
    "[C:university]": {"university": 1.0},
    "university": {"of": 1.0},
    "of": {"california": 0.9, "calgary": 0.1},
    "california": {"<eos>": 0.42, ",": 0.58},
    ",": {"irvine": 0.25, "san": 0.24, "davis": 0.17, "santa": 0.14},
    "irvine": {"<eos>": 1.0}, "davis": {"<eos>": 1.0}, "calgary": {"<eos>": 1.0},
    "san": {"francisco": 1.0}, "francisco": {"<eos>": 1.0},
    "santa": {"cruz": 1.0}, "cruz": {"<eos>": 1.0},
}


class Bigram:
    vocab_size = len(vocab)

    def next_token_logprobs(self, inp, prefix):
        last = vocab.decode(prefix[-1]) if prefix else None
        p = np.full(self.vocab_size, 1e-4)
        for word, q in follow.get(last, {}).items():
            p[vocab.encode(word)] = q
        return np.log(p / p.sum())


inp = InputSequence((vocab.bos, vocab.sep, vocab.sep), 0)
result = constrained_beam_search(Bigram(), inp, trie, k=5)
for rank, ((e, lp), p) in enumerate(zip(result.ranked, result.display_probs), start=1):
    print(f"{rank}  {names[e]:<42} {p:.3f}  {lp:.3f}")
