"""Command-line entry point.

Subcommands: ingest, build-trie, train, predict, eval, bench.  Every command
reads and writes artifacts in the ``--out`` directory.  A ``--config`` file
holds flat ``key = value`` lines using the long flag names (dashes or
underscores); flags given on the command line win.

Exit codes: 0 success, 1 usage, 2 data error, 3 internal error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass, fields
from pathlib import Path

from .decoding import DEFAULT_BEAM_SIZE
from .demonstration import DemonstrationConfig, Direction, Query
from .errors import DataError, KGSeqError
from .evaluation import (
    EvalConfig,
    Mode,
    Predictor,
    bench_scaling,
    evaluate,
    format_bench,
    write_predictions,
)
from .kg import IngestConfig, KnowledgeGraph, Vocabulary, build_vocabulary, load_dataset
from .scorer import CountScorer, UniformScorer, nll_loss, train_count_scorer, training_pairs
from .trie import EntityTrie, build_trie

log = logging.getLogger("kgseq")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3

KG_FILE = "kg.json"
VOCAB_FILE = "vocab.json"
TRIE_FILE = "trie.json"
SCORER_FILE = "scorer.json"


@dataclass
class RunConfig:
    dataset: str | None = None
    out: str = "artifacts"
    seed: int = 0
    beam: int = DEFAULT_BEAM_SIZE
    demos: int = 2
    mode: str = "filtered"
    direction: str = "both"
    split: str = "test"
    order: int = 2
    alpha: float = 1.0
    max_desc_tokens: int = 64
    max_demo_tokens: int = 256
    scorer: str = "count"
    ranker: str = "beam"
    entity: str | None = None
    relation: str | None = None
    sizes: str = "1000,10000"
    queries: int = 30
    timing: bool = False
    dataset_name: str = ""

    @property
    def demo_config(self) -> DemonstrationConfig:
        return DemonstrationConfig(count=self.demos, seed=self.seed, max_demo_tokens=self.max_demo_tokens)

    @property
    def out_dir(self) -> Path:
        return Path(self.out)


def read_config_file(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        values[key.replace("-", "_")] = value
    return values


class UsageError(Exception):
    pass


def _coerce(name: str, value):
    types = {f.name: f.type for f in fields(RunConfig)}
    if name not in types:
        raise UsageError(f"unknown config key {name!r}")
    kind = types[name]
    if value is None or not isinstance(value, str):
        return value
    if "bool" in kind:
        return value.lower() in ("1", "true", "yes", "on")
    if kind.startswith("int"):
        return int(value)
    if kind.startswith("float"):
        return float(value)
    return value


def resolve_config(args: argparse.Namespace) -> RunConfig:
    merged = {}
    if getattr(args, "config", None):
        for k, v in read_config_file(args.config).items():
            merged[k] = _coerce(k, v)
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            merged[f.name] = v
    try:
        cfg = RunConfig(**merged)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from exc
    if cfg.mode not in ("raw", "filtered"):
        raise UsageError("mode must be raw or filtered")
    if cfg.direction not in ("tail", "head", "both"):
        raise UsageError("direction must be tail, head or both")
    return cfg


# ---------------------------------------------------------------------------
# artifact loading
# ---------------------------------------------------------------------------


def _load_kg_vocab(cfg: RunConfig):
    out = cfg.out_dir
    return KnowledgeGraph.load(out / KG_FILE), Vocabulary.load(out / VOCAB_FILE)


def _load_scorer(cfg: RunConfig, vocab: Vocabulary):
    if cfg.scorer == "uniform":
        return UniformScorer(len(vocab))
    if cfg.scorer != "count":
        raise UsageError(f"unknown scorer {cfg.scorer!r}")
    scorer = CountScorer.load(cfg.out_dir / SCORER_FILE)
    if scorer.vocab_size != len(vocab):
        raise DataError(f"scorer vocabulary size {scorer.vocab_size} does not match vocabulary ({len(vocab)})")
    return scorer


def load_predictor(cfg: RunConfig, scorer=None) -> Predictor:
    kg, vocab = _load_kg_vocab(cfg)
    trie = EntityTrie.load(cfg.out_dir / TRIE_FILE)
    if scorer is None:
        scorer = _load_scorer(cfg, vocab)
    return Predictor(kg, vocab, trie, scorer, cfg.demo_config)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_ingest(cfg: RunConfig, stdout=sys.stdout) -> KnowledgeGraph:
    if not cfg.dataset:
        raise UsageError("ingest needs --dataset")
    kg = load_dataset(cfg.dataset, IngestConfig(max_description_tokens=cfg.max_desc_tokens))
    vocab = build_vocabulary(kg)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    kg.save(cfg.out_dir / KG_FILE)
    vocab.save(cfg.out_dir / VOCAB_FILE)
    c = kg.counts()
    table = (
        f"{'#Ent':>8} {'#Rel':>6} {'#Train':>9} {'#Dev':>7} {'#Test':>7}\n"
        f"{c['entities']:>8} {c['relations']:>6} {c['train']:>9} {c['dev']:>7} {c['test']:>7}\n"
    )
    summary = kg.summary() + "\n"
    (cfg.out_dir / "summary.txt").write_text(table + summary + f"vocabulary: {len(vocab)} tokens\n", encoding="utf-8")
    stdout.write(table + summary)
    return kg


def cmd_build_trie(cfg: RunConfig, stdout=sys.stdout) -> EntityTrie:
    kg, vocab = _load_kg_vocab(cfg)
    trie = build_trie(kg, vocab)
    trie.save(cfg.out_dir / TRIE_FILE)
    stdout.write(f"trie: {len(trie)} entities, {trie.node_count} nodes\n")
    return trie


def cmd_train(cfg: RunConfig, stdout=sys.stdout) -> CountScorer:
    kg, vocab = _load_kg_vocab(cfg)
    scorer = train_count_scorer(kg, vocab, cfg.demo_config, cfg.order, cfg.alpha)
    scorer.save(cfg.out_dir / SCORER_FILE)
    batch = list(training_pairs(kg, vocab, cfg.demo_config))
    nll = nll_loss(scorer, batch)
    base = nll_loss(UniformScorer(len(vocab)), batch)
    stdout.write(f"train pairs: {len(batch)}\ntrain nll: {nll:.6f}\nuniform nll: {base:.6f}\n")
    return scorer


def _bar(p: float, width: int = 20) -> str:
    filled = int(round(p * width))
    return "#" * filled + "." * (width - filled)


def cmd_predict(cfg: RunConfig, stdout=sys.stdout, scorer=None):
    if not cfg.entity or not cfg.relation:
        raise UsageError("predict needs --entity and --relation")
    if cfg.direction == "both":
        raise UsageError("predict needs --direction tail or head")
    pred = load_predictor(cfg, scorer)
    kg = pred.kg
    direction = Direction(cfg.direction)
    q = Query(kg.entity_id(cfg.entity), kg.relation_id(cfg.relation), direction)
    result = pred.decode(q, cfg.beam)
    known = kg.entities[q.known].name
    rel = kg.relations[q.relation].key
    header = f"({known},{rel},?)" if direction is Direction.TAIL else f"(?,{rel},{known})"
    lines = [f"query: {header}", f"{'rank':>4}  {'entity':<40} {'prob':>6}  {'bar':<20}  logprob"]
    for i, ((e, lp), p) in enumerate(zip(result.ranked, result.display_probs), start=1):
        lines.append(f"{i:>4}  {kg.entities[e].name:<40} {p:>6.3f}  {_bar(p)}  {lp:.6f}")
    stdout.write("\n".join(lines) + "\n")
    return result


def cmd_eval(cfg: RunConfig, stdout=sys.stdout, scorer=None):
    pred = load_predictor(cfg, scorer)
    ecfg = EvalConfig(mode=Mode(cfg.mode), beam_size=cfg.beam, directions=cfg.direction, split=cfg.split)
    if cfg.ranker == "beam":
        ranker = pred.beam_ranker(cfg.beam)
    elif cfg.ranker == "oracle":
        ranker = pred.oracle_ranker()
    else:
        raise UsageError(f"unknown ranker {cfg.ranker!r}")
    metrics = evaluate(ranker, pred.kg, ecfg)
    name = cfg.dataset_name or (Path(cfg.dataset).name if cfg.dataset else "")
    out = cfg.out_dir
    (out / "metrics.json").write_text(metrics.report_json(name, cfg.timing), encoding="utf-8")
    (out / "metrics.txt").write_text(metrics.report_text(name, cfg.timing), encoding="utf-8")
    write_predictions(out / "predictions.tsv", pred.kg, metrics)
    stdout.write(metrics.report_text(name, cfg.timing))
    return metrics


def cmd_bench(cfg: RunConfig, stdout=sys.stdout):
    try:
        sizes = [int(s) for s in str(cfg.sizes).split(",") if s.strip()]
    except ValueError:
        raise UsageError(f"--sizes must be comma-separated integers, got {cfg.sizes!r}") from None
    rows = bench_scaling(sizes, cfg.beam, n_queries=cfg.queries, seed=cfg.seed, demo_cfg=cfg.demo_config)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    (cfg.out_dir / "bench.json").write_text(json.dumps(rows, indent=2) + "\n", encoding="utf-8")
    text = format_bench(rows)
    (cfg.out_dir / "bench.txt").write_text(text, encoding="utf-8")
    stdout.write(text)
    return rows


COMMANDS = {
    "ingest": cmd_ingest,
    "build-trie": cmd_build_trie,
    "train": cmd_train,
    "predict": cmd_predict,
    "eval": cmd_eval,
    "bench": cmd_bench,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", help="flat key = value config file")
    shared.add_argument("--out", help="artifact directory (default: artifacts)")
    shared.add_argument("--seed", type=int)
    shared.add_argument("--beam", type=int, help="beam size k")
    shared.add_argument("--demos", type=int, help="demonstrations per input")
    shared.add_argument("--mode", choices=["raw", "filtered"])
    shared.add_argument("--direction", choices=["tail", "head", "both"])
    shared.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="kgseq", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ingest", parents=[shared], help="validate a dataset and persist KG + vocabulary")
    p.add_argument("--dataset", help="dataset directory")
    p.add_argument("--max-desc-tokens", dest="max_desc_tokens", type=int)

    sub.add_parser("build-trie", parents=[shared], help="build the entity prefix tree")

    p = sub.add_parser("train", parents=[shared], help="fit the count scorer")
    p.add_argument("--order", type=int)
    p.add_argument("--alpha", type=float)

    p = sub.add_parser("predict", parents=[shared], help="rank entities for one query")
    p.add_argument("--entity", help="key of the known entity")
    p.add_argument("--relation", help="relation key")
    p.add_argument("--scorer", choices=["count", "uniform"])

    p = sub.add_parser("eval", parents=[shared], help="Hits@k over an evaluation split")
    p.add_argument("--split", choices=["train", "dev", "test"])
    p.add_argument("--scorer", choices=["count", "uniform"])
    p.add_argument("--ranker", choices=["beam", "oracle"])
    p.add_argument("--dataset-name", dest="dataset_name")
    p.add_argument("--timing", action="store_true", default=None, help="include decode timing in reports")

    p = sub.add_parser("bench", parents=[shared], help="score-all vs constrained decoding wall time")
    p.add_argument("--sizes", help="comma-separated entity counts")
    p.add_argument("--queries", type=int)
    return parser


def main(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        COMMANDS[args.command](cfg, stdout=stdout)
    except UsageError as exc:
        print(f"kgseq {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, KGSeqError, KeyError) as exc:
        print(f"kgseq {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001
        log.exception("internal error")
        print(f"kgseq {args.command}: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
