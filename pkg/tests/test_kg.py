import shutil
from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from kgseq import _io
from kgseq.errors import (
    ArtifactVersionError,
    DanglingReference,
    DuplicateId,
    MalformedLine,
    MissingFile,
    OverlappingSplits,
    UnknownEntity,
)
from kgseq.kg import (
    SPECIAL_TOKENS,
    Entity,
    IngestConfig,
    KnowledgeGraph,
    Relation,
    Vocabulary,
    build_vocabulary,
    category_token,
    load_dataset,
    lowest_freq_category,
    split_text,
    tokenize,
    write_dataset,
)
from kgseq.synthetic import synthetic_kg

from oracles import ToyOracle, count_lines, split_words


@pytest.fixture
def toy_copy(tmp_path, toy_dir):
    dst = tmp_path / "toy"
    shutil.copytree(toy_dir, dst)
    return dst


# -- ingestion --------------------------------------------------------------


def test_toy_counts_match_line_count(toy_kg):
    lines = count_lines()
    # frozen from the independent line counter
    assert lines == {"entity2text.tsv": 12, "relation2text.tsv": 3, "train.tsv": 20, "valid.tsv": 4, "test.tsv": 4}
    assert toy_kg.counts() == {"entities": 12, "relations": 3, "train": 20, "dev": 4, "test": 4}
    assert toy_kg.summary() == "12 entities, 3 relations, 20/4/4"


def test_empty_train_split(toy_copy):
    (toy_copy / "train.tsv").write_text("")
    kg = load_dataset(toy_copy)
    assert kg.train == ()
    assert kg.category_freq == {}


@pytest.mark.parametrize("name", ["train.tsv", "valid.tsv", "test.tsv", "entity2text.tsv", "relation2text.tsv"])
def test_missing_file(toy_copy, name):
    (toy_copy / name).unlink()
    with pytest.raises(MissingFile):
        load_dataset(toy_copy)


def test_type_file_is_optional(toy_copy):
    (toy_copy / "entity2type.tsv").unlink()
    kg = load_dataset(toy_copy)
    assert all(e.categories == ("unknown",) for e in kg.entities)


def test_malformed_line_reports_line_number(toy_copy):
    with open(toy_copy / "train.tsv", "a") as fh:
        fh.write("michael_chabon\teducated_at\n")
    with pytest.raises(MalformedLine) as err:
        load_dataset(toy_copy)
    assert err.value.line_number == 21


def test_dangling_entity_in_triples(toy_copy):
    with open(toy_copy / "test.tsv", "a") as fh:
        fh.write("nobody\teducated_at\tuc\n")
    with pytest.raises(DanglingReference, match="nobody"):
        load_dataset(toy_copy)


def test_dangling_relation(toy_copy):
    with open(toy_copy / "valid.tsv", "a") as fh:
        fh.write("uc\tfounded_by\tirvine\n")
    with pytest.raises(DanglingReference):
        load_dataset(toy_copy)


def test_duplicate_entity_id(toy_copy):
    with open(toy_copy / "entity2text.tsv", "a") as fh:
        fh.write("uc\tAnother UC\t\n")
    with pytest.raises(DuplicateId):
        load_dataset(toy_copy)


def test_overlapping_splits_rejected(toy_copy):
    with open(toy_copy / "test.tsv", "a") as fh:
        fh.write("michael_chabon\teducated_at\tpitt\n")
    with pytest.raises(OverlappingSplits):
        load_dataset(toy_copy)


def test_unknown_category_injected(toy_kg):
    calgary = toy_kg.entities[toy_kg.entity_id("calgary")]
    assert calgary.categories == ("unknown",)
    assert calgary.description == ""


def test_description_truncation(toy_dir):
    kg = load_dataset(toy_dir, IngestConfig(max_description_tokens=3))
    assert kg.entities[0].description == "michael chabon is"
    for e in kg.entities:
        assert len(split_text(e.description)) <= 3


def test_category_freq_brute_force(toy_kg):
    oracle = ToyOracle()
    assert toy_kg.category_freq == dict(oracle.freq)
    in_train = {e for t in toy_kg.train for e in (t.head, t.tail)}
    for e in in_train:
        assert set(toy_kg.entities[e].categories) <= set(toy_kg.category_freq)


def test_category_freq_brute_force_synthetic():
    kg = synthetic_kg(2000, triples_per_entity=4, seed=11)
    assert len(kg.train) <= 10**4
    brute = Counter()
    for h, _, t in kg.train:
        for c in kg.entities[h].categories:
            brute[c] += 1
        for c in kg.entities[t].categories:
            brute[c] += 1
    assert kg.category_freq == dict(brute)


def test_round_trip_through_tsv(toy_kg, tmp_path):
    write_dataset(toy_kg, tmp_path / "rt")
    again = load_dataset(tmp_path / "rt")
    assert again == toy_kg


def test_round_trip_remapped_ids_is_structure_preserving(toy_kg, tmp_path):
    # shuffle entity order on disk: ids change, structure must not
    write_dataset(toy_kg, tmp_path / "rt")
    path = tmp_path / "rt" / "entity2text.tsv"
    lines = path.read_text().splitlines()
    path.write_text("\n".join(reversed(lines)) + "\n")
    again = load_dataset(tmp_path / "rt")
    key = lambda kg: {(kg.entities[h].key, kg.relations[r].key, kg.entities[t].key) for h, r, t in kg.train}
    assert key(again) == key(toy_kg)
    assert again.category_freq == toy_kg.category_freq
    assert {e.key: e.categories for e in again.entities} == {e.key: e.categories for e in toy_kg.entities}


def test_json_artifact_round_trip_and_version_check(toy_kg, tmp_path):
    toy_kg.save(tmp_path / "kg.json")
    assert KnowledgeGraph.load(tmp_path / "kg.json") == toy_kg
    text = (tmp_path / "kg.json").read_text().replace('"version":1', '"version":99')
    (tmp_path / "kg.json").write_text(text)
    with pytest.raises(ArtifactVersionError):
        KnowledgeGraph.load(tmp_path / "kg.json")


# -- tokenizer --------------------------------------------------------------


def test_tokenize_examples(toy_vocab):
    assert split_text("UC, Irvine") == ["uc", ",", "irvine"]
    assert tokenize("", toy_vocab) == []
    assert toy_vocab.decode_many(tokenize("UC, Irvine", toy_vocab)) == ["<unk>", ",", "irvine"]


def test_tokenizer_matches_oracle_on_fixture(toy_kg):
    for e in toy_kg.entities:
        assert split_text(e.name) == split_words(e.name)
        assert split_text(e.description) == split_words(e.description)


def test_oov_maps_to_unk_and_no_specials(toy_vocab):
    ids = tokenize("<bos> zebra [C:city] <eos>", toy_vocab)
    assert toy_vocab.unk in ids
    reserved = set(range(toy_vocab.n_reserved)) - {toy_vocab.unk}
    assert not reserved & set(ids)


@given(st.text(max_size=60))
def test_tokenize_idempotent_on_joined_output(text):
    once = split_text(text)
    assert split_text(" ".join(once)) == once
    assert split_text(text) == once


# -- vocabulary -------------------------------------------------------------


def test_vocab_size_matches_set_union_oracle(toy_vocab):
    assert ToyOracle().vocab_size() == 65  # frozen oracle value
    assert len(toy_vocab) == 65


def test_vocab_single_entity():
    kg = KnowledgeGraph.build([Entity(0, "a", "a", "", ("thing",))], [])
    vocab = build_vocabulary(kg)
    assert set(vocab.tokens) == {"a", category_token("thing"), *SPECIAL_TOKENS}


def test_vocab_shared_tokens_not_duplicated():
    ents = [Entity(0, "x", "New York", "", ("city",)), Entity(1, "y", "York New", "", ("city",))]
    vocab = build_vocabulary(KnowledgeGraph.build(ents, []))
    assert len(set(vocab.tokens)) == len(vocab.tokens)
    assert [t for t in vocab.tokens if t in ("new", "york")] == ["new", "york"]


def test_vocab_bijection(toy_vocab, tmp_path):
    for i, tok in enumerate(toy_vocab.tokens):
        assert toy_vocab.encode(tok) == i
        assert toy_vocab.decode(toy_vocab.encode(tok)) == tok
    text = {t for t in toy_vocab.tokens[toy_vocab.n_reserved:]}
    assert not text & set(toy_vocab.tokens[: toy_vocab.n_reserved])
    toy_vocab.save(tmp_path / "v.json")
    assert Vocabulary.load(tmp_path / "v.json") == toy_vocab


# -- categories -------------------------------------------------------------


def test_lowest_freq_category_argmin():
    ents = [Entity(0, "f", "Some Film", "", ("film", "award-nominee"))]
    kg = KnowledgeGraph.build(ents, [])
    object.__setattr__(kg, "category_freq", {"film": 900, "award-nominee": 37})
    assert lowest_freq_category(kg, 0) == "award-nominee"


def test_lowest_freq_single_category(toy_kg):
    assert lowest_freq_category(toy_kg, toy_kg.entity_id("irvine")) == "city"


def test_lowest_freq_tie_breaks_lexicographically(toy_kg):
    oracle = ToyOracle()
    # pitt: school and institution each occur once in train
    assert oracle.freq["school"] == oracle.freq["institution"] == 1
    assert oracle.lowest("pitt") == "institution"
    assert lowest_freq_category(toy_kg, toy_kg.entity_id("pitt")) == "institution"
    for key in oracle.keys:
        assert lowest_freq_category(toy_kg, toy_kg.entity_id(key)) == oracle.lowest(key)


def test_lowest_freq_absent_category_counts_as_zero():
    ents = [Entity(0, "a", "A", "", ("seen", "unseen"))]
    kg = KnowledgeGraph.build(ents, [])
    object.__setattr__(kg, "category_freq", {"seen": 3})
    assert lowest_freq_category(kg, 0) == "unseen"


def test_lowest_freq_unknown_entity(toy_kg):
    with pytest.raises(UnknownEntity):
        lowest_freq_category(toy_kg, 99)


def test_artifact_loader_rejects_other_kinds(tmp_path):
    _io.write_artifact(tmp_path / "x.json", "something-else", 1, {})
    with pytest.raises(ArtifactVersionError):
        Vocabulary.load(tmp_path / "x.json")


def test_relation_name_is_key():
    assert Relation(0, "educated_at", "studied at").name == "educated_at"
