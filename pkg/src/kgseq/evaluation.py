"""Link-prediction evaluation: score-all oracle, Hits@k, reports, scaling bench."""

from __future__ import annotations

import enum
import gc
import json
import math
import statistics
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .decoding import DEFAULT_BEAM_SIZE, constrained_beam_search, score_entity
from .demonstration import (
    DemonstrationConfig,
    Direction,
    InputSequence,
    Query,
    gold_entity,
    make_input,
)
from .errors import EmptyTestSet
from .kg import KnowledgeGraph, Triple, Vocabulary, build_vocabulary
from .scorer import Scorer, UniformScorer
from .trie import EntityTrie, build_trie


class Mode(enum.Enum):
    RAW = "raw"
    FILTERED = "filtered"


DIRECTIONS = {
    "tail": (Direction.TAIL,),
    "head": (Direction.HEAD,),
    "both": (Direction.TAIL, Direction.HEAD),
}


@dataclass(frozen=True)
class EvalConfig:
    ks: tuple[int, ...] = (1, 3, 10)
    mode: Mode = Mode.FILTERED
    beam_size: int = DEFAULT_BEAM_SIZE
    directions: str = "both"
    split: str = "test"

    def __post_init__(self):
        ks = tuple(self.ks)
        if not ks or any(k < 1 for k in ks) or list(ks) != sorted(set(ks)):
            raise ValueError(f"cutoffs must be positive and strictly ascending, got {ks}")
        object.__setattr__(self, "ks", ks)
        if self.directions not in DIRECTIONS:
            raise ValueError(f"directions must be one of {sorted(DIRECTIONS)}")
        if self.split not in ("train", "dev", "test"):
            raise ValueError("split must be train, dev or test")


@dataclass
class QueryRecord:
    triple: Triple
    direction: Direction
    gold: int
    rank: float  # math.inf when the gold entity was not returned
    ranked: list[tuple[int, float]]
    decode_ms: float


@dataclass
class Metrics:
    hits: dict[int, float]
    n_queries: int
    mean_decode_ms: float
    median_decode_ms: float
    mode: Mode = Mode.FILTERED
    beam_size: int = DEFAULT_BEAM_SIZE
    records: list[QueryRecord] = field(default_factory=list, repr=False)

    def report(self, dataset: str = "", timing: bool = True) -> dict:
        doc = {"dataset": dataset, "mode": self.mode.value, "k": self.beam_size}
        for k, v in self.hits.items():
            doc[f"hits@{k}"] = v
        doc["n_queries"] = self.n_queries
        doc["median_decode_ms"] = round(self.median_decode_ms, 3) if timing else None
        return doc

    def report_json(self, dataset: str = "", timing: bool = True) -> str:
        return json.dumps(self.report(dataset, timing), indent=2) + "\n"

    def report_text(self, dataset: str = "", timing: bool = True) -> str:
        lines = ["# link prediction metrics; filtered mode drops other known-true answers before ranking"]
        for key, value in self.report(dataset, timing).items():
            if isinstance(value, float):
                value = f"{value:.6f}" if key.startswith("hits@") else f"{value:.3f}"
            lines.append(f"{key}: {'' if value is None else value}")
        return "\n".join(lines) + "\n"


def brute_force_rank(scorer: Scorer, inp: InputSequence, trie: EntityTrie) -> list[tuple[int, float]]:
    """Score every entity independently and sort (descending log-prob, then ascending id)."""
    scored = [(e, score_entity(scorer, inp, trie, e)) for e in trie.entities()]
    scored.sort(key=lambda it: (-it[1], it[0]))
    return scored


class Predictor:
    """Bundles a KG, vocabulary, trie and scorer to answer queries."""

    def __init__(
        self,
        kg: KnowledgeGraph,
        vocab: Vocabulary,
        trie: EntityTrie,
        scorer: Scorer,
        demo_cfg: DemonstrationConfig | None = None,
    ):
        self.kg = kg
        self.vocab = vocab
        self.trie = trie
        self.scorer = scorer
        self.demo_cfg = demo_cfg or DemonstrationConfig()

    def input_for(self, q: Query, gold: Triple | None = None) -> InputSequence:
        return make_input(self.kg, self.vocab, q, self.demo_cfg, gold)

    def decode(self, q: Query, k: int = DEFAULT_BEAM_SIZE, gold: Triple | None = None):
        return constrained_beam_search(self.scorer, self.input_for(q, gold), self.trie, k)

    def beam_ranker(self, k: int = DEFAULT_BEAM_SIZE) -> Callable:
        def rank(q: Query, gold: Triple | None = None):
            return self.decode(q, k, gold).ranked

        return rank

    def oracle_ranker(self) -> Callable:
        def rank(q: Query, gold: Triple | None = None):
            return brute_force_rank(self.scorer, self.input_for(q, gold), self.trie)

        return rank


def _known_answers(kg: KnowledgeGraph):
    tails: dict[tuple[int, int], set[int]] = {}
    heads: dict[tuple[int, int], set[int]] = {}
    for h, r, t in (*kg.train, *kg.dev, *kg.test):
        tails.setdefault((h, r), set()).add(t)
        heads.setdefault((r, t), set()).add(h)
    return tails, heads


def gold_rank(ranked: Sequence[int], gold: int, filtered: set[int] = frozenset()) -> float:
    """1-based rank of ``gold`` after removing ``filtered`` entities; inf if absent."""
    position = 1
    for e in ranked:
        if e == gold:
            return position
        if e not in filtered:
            position += 1
    return math.inf


def evaluate(ranker: Callable, kg: KnowledgeGraph, cfg: EvalConfig | None = None) -> Metrics:
    """Hits@k of ``ranker`` over the evaluation split.

    ``ranker(query, gold_triple)`` returns ``[(entity, logprob), ...]`` best
    first (or a plain list of entity ids); it may be truncated, in which case
    a missing gold entity counts as a miss at every cutoff.
    """
    cfg = cfg or EvalConfig()
    triples = getattr(kg, cfg.split)
    if not triples:
        raise EmptyTestSet(f"{cfg.split} split is empty")
    tails, heads = _known_answers(kg)
    records = []
    hits = {k: 0 for k in cfg.ks}
    for t in triples:
        for direction in DIRECTIONS[cfg.directions]:
            q = Query.from_triple(t, direction)
            gold = gold_entity(t, direction)
            start = time.perf_counter()
            ranked = list(ranker(q, t))
            elapsed = (time.perf_counter() - start) * 1000.0
            ranked = [it if isinstance(it, tuple) else (int(it), math.nan) for it in ranked]
            filtered: set[int] = set()
            if cfg.mode is Mode.FILTERED:
                known = tails.get((t.head, t.relation)) if direction is Direction.TAIL else heads.get((t.relation, t.tail))
                filtered = (known or set()) - {gold}
            rank = gold_rank([e for e, _ in ranked], gold, filtered)
            for k in cfg.ks:
                hits[k] += rank <= k
            records.append(QueryRecord(t, direction, gold, rank, ranked, elapsed))
    n = len(records)
    times = [r.decode_ms for r in records]
    return Metrics(
        {k: hits[k] / n for k in cfg.ks},
        n,
        statistics.fmean(times),
        statistics.median(times),
        cfg.mode,
        cfg.beam_size,
        records,
    )


def format_query(kg: KnowledgeGraph, t: Triple, direction: Direction) -> str:
    h, r, tail = kg.entities[t.head].key, kg.relations[t.relation].key, kg.entities[t.tail].key
    if direction is Direction.TAIL:
        return f"({h},{r},?)"
    return f"(?,{r},{tail})"


def write_predictions(path, kg: KnowledgeGraph, metrics: Metrics) -> None:
    """One line per returned candidate: query, rank, entity id, log-prob."""
    with open(path, "w", encoding="utf-8") as fh:
        for rec in metrics.records:
            query = format_query(kg, rec.triple, rec.direction)
            for rank, (e, lp) in enumerate(rec.ranked, start=1):
                fh.write(f"{query}\t{rank}\t{kg.entities[e].key}\t{lp!r}\n")


# ---------------------------------------------------------------------------
# scaling benchmark
# ---------------------------------------------------------------------------


def _median_ms(fn, items, repeats: int = 3) -> float:
    """Median over items of the fastest of ``repeats`` timed calls.

    The collector is paused while timing, as ``timeit`` does, so a
    collection triggered by earlier allocations does not land on one size.
    """
    times = []
    was_enabled = gc.isenabled()
    gc.collect()
    gc.disable()
    try:
        for it in items:
            best = math.inf
            for _ in range(repeats):
                start = time.perf_counter()
                fn(it)
                best = min(best, time.perf_counter() - start)
            times.append(best * 1000.0)
    finally:
        if was_enabled:
            gc.enable()
    return statistics.median(times)


def bench_scaling(
    kg_sizes: Sequence[int],
    k: int = DEFAULT_BEAM_SIZE,
    scorer_factory: Callable[[KnowledgeGraph, Vocabulary], Scorer] | None = None,
    n_queries: int = 30,
    seed: int = 0,
    demo_cfg: DemonstrationConfig | None = None,
    repeats: int = 3,
) -> list[dict]:
    """Median per-query wall time of score-all ranking vs constrained decoding.

    Each size gets its own synthetic KG (fixed name/description length).
    Input assembly happens before timing so both paths see the same inputs.
    """
    from .synthetic import synthetic_kg

    demo_cfg = demo_cfg or DemonstrationConfig(seed=seed)
    scorer_factory = scorer_factory or (lambda kg, vocab: UniformScorer(len(vocab)))
    rows = []
    for n in kg_sizes:
        kg = synthetic_kg(n, seed=seed)
        vocab = build_vocabulary(kg)
        trie = build_trie(kg, vocab)
        scorer = scorer_factory(kg, vocab)
        pool = kg.test or kg.train
        queries = [Query.from_triple(pool[i % len(pool)], Direction.TAIL) for i in range(n_queries)]
        inputs = [make_input(kg, vocab, q, demo_cfg) for q in queries]
        oracle_ms = _median_ms(lambda inp: brute_force_rank(scorer, inp, trie), inputs, repeats)
        decoder_ms = _median_ms(lambda inp: constrained_beam_search(scorer, inp, trie, k), inputs, repeats)
        rows.append(
            {
                "n_entities": n,
                "trie_nodes": trie.node_count,
                "vocab_size": len(vocab),
                "k": k,
                "n_queries": n_queries,
                "oracle_ms": oracle_ms,
                "decoder_ms": decoder_ms,
            }
        )
    return rows


def format_bench(rows: list[dict]) -> str:
    out = [f"{'n_entities':>10}  {'oracle_ms':>12}  {'decoder_ms':>12}  {'speedup':>8}"]
    for r in rows:
        speedup = r["oracle_ms"] / r["decoder_ms"] if r["decoder_ms"] else math.inf
        out.append(f"{r['n_entities']:>10}  {r['oracle_ms']:>12.3f}  {r['decoder_ms']:>12.3f}  {speedup:>8.1f}")
    return "\n".join(out) + "\n"
