"""Knowledge-graph link prediction as trie-constrained sequence generation."""

from .decoding import DecodeResult, constrained_beam_search, score_entity
from .demonstration import (
    DemonstrationConfig,
    Direction,
    InputSequence,
    Query,
    TargetSequence,
    assemble_input,
    assemble_target,
    sample_demonstrations,
)
from .evaluation import EvalConfig, Metrics, Mode, Predictor, bench_scaling, brute_force_rank, evaluate
from .kg import (
    Entity,
    IngestConfig,
    KnowledgeGraph,
    Relation,
    Triple,
    Vocabulary,
    build_vocabulary,
    load_dataset,
    load_toy,
    lowest_freq_category,
    tokenize,
    write_dataset,
)
from .scorer import CountScorer, UniformScorer, nll_loss, train_count_scorer, uniform_logprobs
from .synthetic import synthetic_kg
from .trie import EntityTrie, build_trie

__version__ = "0.1.0"
