"""
Hits@k on the toy graph
=======================

A count-based scorer is trained on the training triples, then both the
beam decoder and the score-every-entity oracle are evaluated.
"""

from kgseq import EvalConfig, Mode, Predictor, build_trie, build_vocabulary, evaluate, load_toy
from kgseq.scorer import UniformScorer, train_count_scorer

kg = load_toy()
vocab = build_vocabulary(kg)
trie = build_trie(kg, vocab)

for name, scorer in (("uniform", UniformScorer(len(vocab))), ("count", train_count_scorer(kg, vocab))):
    pred = Predictor(kg, vocab, trie, scorer)
    for mode in Mode:
        beam = evaluate(pred.beam_ranker(5), kg, EvalConfig(mode=mode))
        full = evaluate(pred.oracle_ranker(), kg, EvalConfig(mode=mode))
        row = "  ".join(f"h@{k}={beam.hits[k]:.3f}/{full.hits[k]:.3f}" for k in beam.hits)
        print(f"{name:>8} {mode.value:>8}  {row}   (beam k=5 / oracle)")

# widening the beam to every entity recovers the oracle exactly
pred = Predictor(kg, vocab, trie, train_count_scorer(kg, vocab))
wide = evaluate(pred.beam_ranker(len(kg.entities)), kg)
print(wide.hits == evaluate(pred.oracle_ranker(), kg).hits)
