import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from logstamp.cluster import NOISE, ClusterAssignment
from logstamp.corpus import make_dataset
from logstamp.errors import ConsistencyError, ParameterError
from logstamp.labeler import (CountMode, LabeledSentence, LabelerConfig, T, V, WordLabel, label_statistics,
                              pseudo_label, read_labeled_jsonl, write_labeled_jsonl)


def one_cluster(ds):
    return ClusterAssignment({r.id: 0 for r in ds.records}, 1)


def label_map(sentences):
    return [dict(zip(s.tokens, s.labels)) for s in sentences]


def test_interface_example():
    ds = make_dataset("f", ["Interface te-1/1/50 change state to down",
                            "Interface te-1/1/51 change state to down"])
    out = pseudo_label(ds.records, one_cluster(ds), LabelerConfig(tau=0.9))
    assert [lab.code for lab in out[0].labels] == list("TVTTTT")
    assert [lab.code for lab in out[1].labels] == list("TVTTTT")


def test_singleton_cluster_all_template():
    ds = make_dataset("f", ["only one line here"])
    out = pseudo_label(ds.records, one_cluster(ds), LabelerConfig(tau=1.0))
    assert set(out[0].labels) == {T}


def test_nine_of_ten_threshold():
    lines = [f"x v{i}" for i in range(9)] + ["v9"]
    ds = make_dataset("f", lines)
    at_09 = label_map(pseudo_label(ds.records, one_cluster(ds), LabelerConfig(tau=0.9)))
    at_095 = label_map(pseudo_label(ds.records, one_cluster(ds), LabelerConfig(tau=0.95)))
    assert at_09[0]["x"] is T
    assert at_095[0]["x"] is V


def test_noise_is_excluded_and_missing_id_raises():
    ds = make_dataset("f", ["a b", "a c", "zzz"])
    asg = ClusterAssignment({0: 0, 1: 0, 2: NOISE}, 1)
    out = pseudo_label(ds.records, asg)
    assert [s.record_id for s in out] == [0, 1]
    with pytest.raises(ConsistencyError):
        pseudo_label(ds.records, ClusterAssignment({0: 0}, 1))


def test_clusters_are_labelled_independently():
    ds = make_dataset("f", ["a b", "a c", "d e", "d e"])
    asg = ClusterAssignment({0: 0, 1: 0, 2: 1, 3: 1}, 2)
    out = pseudo_label(ds.records, asg, LabelerConfig(tau=1.0))
    assert [s.labels for s in out] == [(T, V), (T, V), (T, T), (T, T)]
    assert [s.cluster_id for s in out] == [0, 0, 1, 1]


def test_positional_mode_differs_from_document():
    ds = make_dataset("f", ["a b", "b a"])
    doc = pseudo_label(ds.records, one_cluster(ds), LabelerConfig(tau=1.0))
    pos = pseudo_label(ds.records, one_cluster(ds), LabelerConfig(tau=1.0, count_mode=CountMode.POSITIONAL))
    assert doc[0].labels == (T, T)
    assert pos[0].labels == (V, V)


def test_config_validation():
    with pytest.raises(ParameterError):
        LabelerConfig(tau=0.0)
    with pytest.raises(ParameterError):
        LabelerConfig(tau=1.1)
    with pytest.raises(ParameterError):
        LabelerConfig(count_mode="SOMETIMES")
    with pytest.raises(ConsistencyError):
        LabeledSentence(0, ("a",), (T, V), 0)


def test_word_label_codes():
    assert WordLabel.from_code("T") is T and V.code == "V"
    with pytest.raises(ValueError):
        WordLabel.from_code("X")


cluster_lines = st.lists(st.lists(st.sampled_from("abcdefg"), min_size=1, max_size=6), min_size=1, max_size=12)


@settings(max_examples=100, deadline=None)
@given(cluster_lines, st.floats(0.05, 1.0), st.floats(0.05, 1.0))
def test_higher_tau_never_adds_template_labels(lines, t1, t2):
    lo, hi = sorted((t1, t2))
    ds = make_dataset("f", [" ".join(x) for x in lines])
    a = pseudo_label(ds.records, one_cluster(ds), LabelerConfig(tau=lo))
    b = pseudo_label(ds.records, one_cluster(ds), LabelerConfig(tau=hi))
    for sa, sb in zip(a, b):
        for la, lb in zip(sa.labels, sb.labels):
            assert not (la is V and lb is T)


@settings(max_examples=100, deadline=None)
@given(cluster_lines, st.floats(0.05, 1.0), st.randoms(use_true_random=False))
def test_document_mode_invariants(lines, tau, rnd):
    ds = make_dataset("f", [" ".join(x) for x in lines])
    out = pseudo_label(ds.records, one_cluster(ds), LabelerConfig(tau=tau))
    # one token, one label within a cluster
    seen = {}
    for s in out:
        for tok, lab in zip(s.tokens, s.labels):
            assert seen.setdefault(tok, lab) is lab
    # member order does not matter
    order = list(range(len(ds.records)))
    rnd.shuffle(order)
    shuffled = pseudo_label([ds.records[i] for i in order], one_cluster(ds), LabelerConfig(tau=tau))
    assert {s.record_id: s.labels for s in shuffled} == {s.record_id: s.labels for s in out}
    # a cluster of identical lines is all TEMPLATE for any tau
    same = make_dataset("f", [" ".join(lines[0])] * len(lines))
    assert all(set(s.labels) == {T} for s in pseudo_label(same.records, one_cluster(same),
                                                          LabelerConfig(tau=tau)))


def test_statistics_hand_counted():
    sents = [LabeledSentence(0, ("a", "b"), (T, V), 0),
             LabeledSentence(1, ("a", "c"), (T, V), 0),
             LabeledSentence(2, ("d", "e", "f"), (T, T, T), 1)]
    s = label_statistics(sents, total_records=4)
    assert s.template_tokens == 5 and s.variable_tokens == 2
    assert s.variable_fraction == pytest.approx(2 / 7)
    assert s.noise_fraction == pytest.approx(0.25)
    assert s.per_cluster == {0: {"records": 2, "template": 2, "variable": 2},
                             1: {"records": 1, "template": 3, "variable": 0}}


def test_statistics_degenerate():
    allt = label_statistics([LabeledSentence(0, ("a",), (T,), 0)])
    assert allt.variable_fraction == 0.0
    empty = label_statistics([])
    assert (empty.template_tokens, empty.variable_tokens, empty.noise_fraction) == (0, 0, 0.0)
    assert empty.per_cluster == {}


def test_jsonl_round_trip(tmp_path):
    sents = [LabeledSentence(3, ("a", "b"), (T, V), 1)]
    path = tmp_path / "l.jsonl"
    write_labeled_jsonl(path, sents)
    assert read_labeled_jsonl(path) == sents
    assert np.all([s.to_json()["labels"] == ["T", "V"] for s in sents])
