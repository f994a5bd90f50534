"""Entity scoring and trie-constrained beam search."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .demonstration import InputSequence
from .errors import EmptyTrie, UnknownEntity
from .scorer import Scorer, sequence_logprob
from .trie import EntityTrie

DEFAULT_BEAM_SIZE = 5


@dataclass(frozen=True)
class BeamHypothesis:
    tokens: tuple[int, ...]
    logprob: float
    node: int
    finished: bool = False


@dataclass
class DecodeResult:
    """Entities ranked by total sequence log-probability, best first."""

    ranked: list[tuple[int, float]]
    sequences: dict[int, tuple[int, ...]] = field(default_factory=dict)

    @property
    def entities(self) -> list[int]:
        return [e for e, _ in self.ranked]

    @property
    def logprobs(self) -> np.ndarray:
        return np.array([lp for _, lp in self.ranked], dtype=np.float64)

    @property
    def display_probs(self) -> np.ndarray:
        """Softmax over the returned log-probabilities."""
        lp = self.logprobs
        if lp.size == 0:
            return lp
        w = np.exp(lp - lp.max())
        return w / w.sum()


def score_entity(scorer: Scorer, inp: InputSequence, trie: EntityTrie, e: int) -> float:
    """Log-probability of entity ``e``'s full target sequence (category, name, ``<eos>``)."""
    try:
        target = trie.target(e)
    except KeyError:
        raise UnknownEntity(e) from None
    return sequence_logprob(scorer, inp, target)


def _rank_key(item):
    entity, lp = item
    return (-lp, entity)


def constrained_beam_search(
    scorer: Scorer,
    inp: InputSequence,
    trie: EntityTrie,
    k: int = DEFAULT_BEAM_SIZE,
    length_penalty: float = 0.0,
) -> DecodeResult:
    """Top-``k`` entities by beam search restricted to trie continuations.

    At each step every live hypothesis is extended only by the tokens the
    trie allows after its prefix; scores are sums of the scorer's own
    (unrenormalized) conditional log-probabilities.  Hypotheses that emit
    ``<eos>`` retire to the finished pool and the live beam is refilled to
    ``k`` from the remaining extensions.  Search stops once ``k`` entities
    have finished and no live hypothesis can still overtake the k-th.

    With ``length_penalty > 0`` entities are ranked by
    ``logprob / len(sequence) ** length_penalty``; the returned log-probs
    stay raw.
    """
    if k < 1:
        raise ValueError("beam size must be at least 1")
    if len(trie) == 0:
        raise EmptyTrie("trie has no entities")
    eos = trie.eos

    def ranking_score(lp: float, length: int) -> float:
        return lp / length**length_penalty if length_penalty else lp

    active = [BeamHypothesis((), 0.0, trie.root)]
    finished: list[tuple[int, float]] = []
    sequences: dict[int, tuple[int, ...]] = {}

    while active:
        candidates: list[BeamHypothesis] = []
        for hyp in active:
            logp = scorer.next_token_logprobs(inp, hyp.tokens)
            entity = trie.terminal_entity(hyp.node)
            if entity >= 0:
                # a complete entity path may only be followed by <eos>
                lp = hyp.logprob + float(logp[eos])
                finished.append((entity, lp))
                sequences[entity] = hyp.tokens + (eos,)
                continue
            for tok, child in trie.children(hyp.node).items():
                candidates.append(BeamHypothesis(hyp.tokens + (tok,), hyp.logprob + float(logp[tok]), child))

        candidates.sort(key=lambda h: (-ranking_score(h.logprob, len(h.tokens)), h.tokens))
        active = candidates[:k]

        if len(finished) >= k and not length_penalty:
            finished.sort(key=_rank_key)
            del finished[k:]
            # live scores only decrease with more tokens
            if not active or active[0].logprob < finished[-1][1]:
                break

    if length_penalty:
        finished.sort(key=lambda it: (-ranking_score(it[1], len(sequences[it[0]])), it[0]))
    else:
        finished.sort(key=_rank_key)
    finished = finished[:k]
    return DecodeResult(finished, {e: sequences[e] for e, _ in finished})
