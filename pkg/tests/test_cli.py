import io
import json
import os
from pathlib import Path

import pytest

from kgseq.cli import EXIT_DATA, EXIT_OK, EXIT_USAGE, RunConfig, cmd_eval, main
from kgseq.demonstration import DemonstrationConfig, Direction, Query, assemble_target, make_input
from kgseq.kg import KnowledgeGraph, Vocabulary

from conftest import GoldFirstScorer

GOLDEN = Path(__file__).parent / "golden"
UPDATE = os.environ.get("KGSEQ_UPDATE_GOLDEN") == "1"

PIPELINE = [
    ("ingest", ["ingest", "--dataset", "{toy}"]),
    ("build_trie", ["build-trie"]),
    ("train", ["train"]),
    ("eval", ["eval", "--dataset-name", "toy"]),
    ("predict_tail", ["predict", "--entity", "michael_chabon", "--relation", "educated_at", "--direction", "tail"]),
    ("predict_head", ["predict", "--entity", "uc_irvine", "--relation", "educated_at", "--direction", "head", "--beam", "3"]),
]
ARTIFACTS = ["kg.json", "vocab.json", "trie.json", "scorer.json", "summary.txt", "metrics.json", "metrics.txt", "predictions.tsv"]


def run(argv):
    buf = io.StringIO()
    code = main([str(a) for a in argv], stdout=buf)
    return code, buf.getvalue()


def run_pipeline(out, toy_dir):
    outputs = {}
    for name, argv in PIPELINE:
        code, text = run([a.format(toy=toy_dir) for a in argv] + ["--out", out])
        assert code == EXIT_OK, name
        outputs[name] = text
    return outputs


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory, toy_dir):
    out = tmp_path_factory.mktemp("run")
    return out, run_pipeline(out, toy_dir)


def test_golden_outputs(pipeline):
    out, outputs = pipeline
    if UPDATE:
        GOLDEN.mkdir(exist_ok=True)
        for name, text in outputs.items():
            (GOLDEN / f"{name}.out").write_text(text)
        for name in ARTIFACTS:
            (GOLDEN / name).write_bytes((out / name).read_bytes())
    for name, text in outputs.items():
        assert text == (GOLDEN / f"{name}.out").read_text(), name
    for name in ARTIFACTS:
        assert (out / name).read_bytes() == (GOLDEN / name).read_bytes(), name


def test_pipeline_twice_is_byte_identical(pipeline, tmp_path, toy_dir):
    out, outputs = pipeline
    again = run_pipeline(tmp_path, toy_dir)
    assert again == outputs
    for name in ARTIFACTS:
        assert (tmp_path / name).read_bytes() == (out / name).read_bytes()


def test_predict_rows_and_probabilities(pipeline):
    _, outputs = pipeline
    rows = outputs["predict_tail"].splitlines()[2:]
    assert len(rows) == 5
    probs = [float(r.split()[-3]) for r in rows]
    assert abs(sum(probs) - 1.0) < 5e-3  # printed with three decimals
    logprobs = [float(r.split()[-1]) for r in rows]
    assert logprobs == sorted(logprobs, reverse=True)


def test_eval_with_gold_first_scorer(pipeline):
    out, _ = pipeline
    kg = KnowledgeGraph.load(out / "kg.json")
    vocab = Vocabulary.load(out / "vocab.json")
    cfg = RunConfig(out=str(out / "gold"), seed=0)
    (out / "gold").mkdir()
    for name in ("kg.json", "vocab.json", "trie.json"):
        (out / "gold" / name).write_bytes((out / name).read_bytes())
    table = {}
    for t in kg.test:
        for d in Direction:
            inp = make_input(kg, vocab, Query.from_triple(t, d), cfg.demo_config, gold=t)
            table[inp.tokens] = assemble_target(kg, t.tail if d is Direction.TAIL else t.head, vocab).tokens
    metrics = cmd_eval(cfg, io.StringIO(), scorer=GoldFirstScorer(len(vocab), table))
    assert metrics.hits == {1: 1.0, 3: 1.0, 10: 1.0}
    doc = json.loads((out / "gold" / "metrics.json").read_text())
    assert doc["hits@1"] == 1.0 and doc["median_decode_ms"] is None


def test_timing_flag_adds_median(pipeline):
    out, _ = pipeline
    code, text = run(["eval", "--out", out, "--timing"])
    assert code == EXIT_OK
    doc = json.loads((out / "metrics.json").read_text())
    assert isinstance(doc["median_decode_ms"], float)


def test_config_file_and_flag_precedence(pipeline, tmp_path):
    out, _ = pipeline
    cfg_file = tmp_path / "run.cfg"
    cfg_file.write_text(f"# run settings\nout = {out}\nbeam = 2\nmode = raw\n")
    code, text = run(["eval", "--config", cfg_file])
    assert code == EXIT_OK
    assert "mode: raw" in text and "k: 2" in text
    code, text = run(["eval", "--config", cfg_file, "--beam", "4", "--mode", "filtered"])
    assert "mode: filtered" in text and "k: 4" in text


def test_oracle_ranker_and_uniform_scorer(pipeline):
    out, _ = pipeline
    code, text = run(["eval", "--out", out, "--ranker", "oracle", "--scorer", "uniform", "--mode", "raw"])
    assert code == EXIT_OK
    assert "hits@1: 0.125000" in text and "hits@10: 0.625000" in text


def test_missing_dataset_file_is_data_error(tmp_path, toy_dir, capsys):
    data = tmp_path / "data"
    data.mkdir()
    for p in Path(toy_dir).iterdir():
        if p.name != "relation2text.tsv":
            (data / p.name).write_bytes(p.read_bytes())
    code, _ = run(["ingest", "--dataset", data, "--out", tmp_path / "o"])
    assert code == EXIT_DATA
    assert "relation2text.tsv" in capsys.readouterr().err


def test_missing_artifact_is_data_error(tmp_path):
    code, _ = run(["build-trie", "--out", tmp_path])
    assert code == EXIT_DATA


def test_unknown_entity_is_data_error(pipeline):
    out, _ = pipeline
    code, _ = run(["predict", "--out", out, "--entity", "nobody", "--relation", "educated_at", "--direction", "tail"])
    assert code == EXIT_DATA


def test_version_mismatch_is_data_error(pipeline, tmp_path):
    out, _ = pipeline
    for name in ("kg.json", "vocab.json", "trie.json", "scorer.json"):
        (tmp_path / name).write_bytes((out / name).read_bytes())
    trie = tmp_path / "trie.json"
    trie.write_text(trie.read_text().replace('"version":1', '"version":7'))
    code, _ = run(["eval", "--out", tmp_path])
    assert code == EXIT_DATA


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["frobnicate"],
        ["eval", "--beam", "many"],
        ["ingest"],
        ["predict", "--entity", "uc"],
        ["predict", "--entity", "uc", "--relation", "located_in"],
        ["bench", "--sizes", "ten"],
    ],
)
def test_usage_errors(argv, pipeline):
    out, _ = pipeline
    code, _ = run(argv + (["--out", out] if argv[:1] in (["predict"], ["bench"]) else []))
    assert code == EXIT_USAGE


def test_bad_config_key(tmp_path):
    cfg_file = tmp_path / "bad.cfg"
    cfg_file.write_text("colour = blue\n")
    assert run(["bench", "--config", cfg_file])[0] == EXIT_USAGE


def test_bench_command(tmp_path):
    code, text = run(["bench", "--sizes", "40,80", "--queries", "3", "--out", tmp_path])
    assert code == EXIT_OK
    rows = json.loads((tmp_path / "bench.json").read_text())
    assert [r["n_entities"] for r in rows] == [40, 80]
    assert text == (tmp_path / "bench.txt").read_text()
