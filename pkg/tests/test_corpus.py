import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from logstamp.corpus import (TokenizerConfig, load_loghub_csv, make_dataset, split_train,
                             tokenize)
from logstamp.errors import EmptyDatasetError, InputError, ParameterError, SchemaError


def write_csv(path, rows, header=("LineId", "Content", "EventId")):
    import csv
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    return path


@pytest.mark.parametrize("text,expected", [
    ("a=b c", ["a", "b", "c"]),
    ("   ", []),
    ("", []),
    ("PacketResponder 1 for block blk_38865049064139660",
     ["PacketResponder", "1", "for", "block", "blk_38865049064139660"]),
    ("Interface te-1/1/50 change state to down",
     ["Interface", "te-1/1/50", "change", "state", "to", "down"]),
    ("f(x)[y],z:w", ["f", "x", "y", "z", "w"]),
])
def test_tokenize_examples(text, expected):
    assert tokenize(text) == expected


def test_tokenizer_options():
    assert tokenize("A=B", TokenizerConfig(extra_delimiters=frozenset())) == ["A=B"]
    assert tokenize("Foo Bar", TokenizerConfig(lowercase=True)) == ["foo", "bar"]
    with pytest.raises(ParameterError):
        TokenizerConfig(extra_delimiters=frozenset({"ab"}))
    cfg = TokenizerConfig(extra_delimiters=frozenset("=/"), lowercase=True)
    assert TokenizerConfig.from_dict(cfg.to_dict()) == cfg


@given(st.text())
def test_tokenize_idempotent_and_clean(text):
    toks = tokenize(text)
    assert tokenize(" ".join(toks)) == toks
    assert all(t and not any(c.isspace() or c in "=,:()[]" for c in t) for t in toks)


def test_load_examples(tmp_path):
    path = write_csv(tmp_path / "x.csv", [
        (1, "Interface te-1/1/50 change state to down", "E1"),
        (2, "", "E1"),
        (3, "Interface te-1/1/51 change state to down", "E1"),
        (4, "Interface te-1/1/52 change state to up", "E2"),
    ])
    ds = load_loghub_csv(path)
    assert ds.records[0].tokens == ("Interface", "te-1/1/50", "change", "state", "to", "down")
    assert ds.skipped_empty == 1
    assert ds.labeled
    assert ds.truth_partition() == {0: "E1", 1: "E1", 2: "E2"}


def test_load_without_truth_column(tmp_path):
    path = write_csv(tmp_path / "x.csv", [(1, "a b")], header=("LineId", "Content"))
    ds = load_loghub_csv(path)
    assert not ds.labeled and len(ds) == 1


def test_load_skips_undecodable_rows(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_bytes(b"LineId,Content,EventId\n1,ok line,E1\n2,bad \xff\xfe line,E2\n")
    ds = load_loghub_csv(path)
    assert len(ds) == 1 and ds.skipped_undecodable == 1


def test_load_errors(tmp_path):
    with pytest.raises(InputError):
        load_loghub_csv(tmp_path / "missing.csv")
    (tmp_path / "empty.csv").write_text("")
    with pytest.raises(EmptyDatasetError):
        load_loghub_csv(tmp_path / "empty.csv")
    with pytest.raises(SchemaError):
        load_loghub_csv(write_csv(tmp_path / "s.csv", [(1, "x")], header=("LineId", "Text")))
    with pytest.raises(EmptyDatasetError):
        load_loghub_csv(write_csv(tmp_path / "blank.csv", [(1, "  ", "E1")]))
    # a schema error is still an input error for exit-code purposes
    assert issubclass(SchemaError, InputError)


def test_custom_columns_and_name(tmp_path):
    path = write_csv(tmp_path / "HDFS_2k.log_structured.csv", [(1, "a b", "x")],
                     header=("LineId", "Msg", "Group"))
    ds = load_loghub_csv(path, content_column="Msg", truth_column="Group")
    assert ds.name == "HDFS" and ds.truth_partition() == {0: "x"}


def test_split_sizes():
    ds = make_dataset("d", [f"line {i}" for i in range(2000)])
    train, test = split_train(ds, 0.1, seed=0)
    assert len(train) == 200 and len(test) == 2000
    assert [r.id for r in train.records] == list(range(200))
    assert all(ds.records[o].content == r.content for o, r in zip(train.origin_ids, train.records))


def test_split_full_and_deterministic():
    ds = make_dataset("d", [f"line {i}" for i in range(37)])
    full, _ = split_train(ds, 1.0, seed=3)
    assert full.origin_ids == tuple(range(37))
    a, _ = split_train(ds, 0.3, seed=5)
    b, _ = split_train(ds, 0.3, seed=5)
    assert a.origin_ids == b.origin_ids
    assert len(a) == math.floor(0.3 * 37 + 0.5)


@pytest.mark.parametrize("fraction", [0.0, -0.1, 1.5, float("nan")])
def test_split_bad_fraction(fraction):
    ds = make_dataset("d", ["a"])
    with pytest.raises(ParameterError):
        split_train(ds, fraction)


@given(st.integers(1, 300), st.floats(0.001, 1.0), st.integers(0, 50))
def test_split_properties(n, fraction, seed):
    ds = make_dataset("d", [f"w{i}" for i in range(n)])
    train, test = split_train(ds, fraction, seed)
    assert test is ds
    assert 1 <= len(train) <= n
    assert len(set(train.origin_ids)) == len(train)
    assert list(train.origin_ids) == sorted(train.origin_ids)
