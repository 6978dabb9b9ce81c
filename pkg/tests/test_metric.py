import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from logstamp.errors import InputError, ParameterError
from logstamp.evaluation import ConfusionCounts, pair_counts, partition_rand_index, rand_index
from oracles import brute_pair_counts, partition_to_labels, set_partitions


def as_tuple(c: ConfusionCounts):
    return (c.tp, c.tn, c.fp, c.fn)


def test_identical_four_elements():
    p = {0: "a", 1: "a", 2: "b", 3: "b"}
    assert as_tuple(pair_counts(p, p)) == (2, 4, 0, 0)


def test_singletons_vs_one_group():
    truth = {0: "g", 1: "g", 2: "g"}
    pred = {0: 0, 1: 1, 2: 2}
    assert as_tuple(pair_counts(pred, truth)) == (0, 0, 0, 3)


def test_rand_index_examples():
    assert rand_index(ConfusionCounts(2, 4, 0, 0)) == 1.0
    assert rand_index(ConfusionCounts(0, 0, 0, 3)) == 0.0
    p = {0: "a", 1: "a", 2: "b"}
    assert partition_rand_index(p, p) == 1.0


def test_random_partitions_of_eight_match_double_loop():
    rng = random.Random(7)
    for _ in range(300):
        truth = {i: rng.randrange(4) for i in range(8)}
        pred = {i: rng.randrange(5) for i in range(8)}
        assert as_tuple(pair_counts(pred, truth)) == brute_pair_counts(pred, truth)


def test_set_partition_enumerator_counts_bell_numbers():
    assert [sum(1 for _ in set_partitions(range(n))) for n in range(7)] == [1, 1, 2, 5, 15, 52, 203]


def test_errors():
    with pytest.raises(InputError):
        pair_counts({0: 1, 1: 1}, {0: 1, 2: 1})
    with pytest.raises(ParameterError):
        pair_counts({0: 1}, {0: 1})
    with pytest.raises(ParameterError):
        rand_index(ConfusionCounts(0, 0, 0, 0))


partitions = st.integers(2, 12).flatmap(
    lambda n: st.tuples(st.lists(st.integers(0, 4), min_size=n, max_size=n),
                        st.lists(st.integers(0, 4), min_size=n, max_size=n)))


@settings(max_examples=200, deadline=None)
@given(partitions)
def test_rand_index_properties(pair):
    a = dict(enumerate(pair[0]))
    b = dict(enumerate(pair[1]))
    c = pair_counts(a, b)
    n = len(a)
    assert c.total == n * (n - 1) // 2
    assert 0.0 <= rand_index(c) <= 1.0
    assert partition_rand_index(a, a) == 1.0
    assert partition_rand_index(a, b) == partition_rand_index(b, a)
    # renaming groups changes nothing
    renamed = {k: f"g{v}" for k, v in a.items()}
    assert pair_counts(renamed, b) == c


def test_exhaustive_small_partitions_smoke():
    parts = [partition_to_labels(p) for p in set_partitions(range(4))]
    for a in parts:
        for b in parts:
            assert as_tuple(pair_counts(a, b)) == brute_pair_counts(a, b)
