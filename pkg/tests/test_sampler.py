from datetime import timedelta

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from convdyn.hin import NodeType
from convdyn.sampler import (
    SamplingPolicy,
    parse_duration,
    parse_policy,
    sample,
    snapshot_graph,
)

from helpers import conv_from_parents


def _post_sizes(seq):
    return [len(snapshot_graph(seq, i).nodes(NodeType.POST)) for i in range(len(seq))]


def test_volume_twelve_posts():
    conv = conv_from_parents([-1] + [0] * 11)
    seq = sample(conv, SamplingPolicy.volume(5))
    assert seq.cuts == (5, 10, 12)
    assert _post_sizes(seq) == [5, 10, 12]
    assert seq.completion_rates == (5 / 12, 10 / 12, 1.0)


def test_time_one_post_per_window():
    conv = conv_from_parents([-1, 0, 1], seconds=[0, 10, 20])
    seq = sample(conv, SamplingPolicy.time(timedelta(seconds=10)))
    assert _post_sizes(seq) == [1, 2, 3]
    assert all(a < b for a, b in zip(seq.boundaries, seq.boundaries[1:]))


def test_time_windows_may_be_empty():
    conv = conv_from_parents([-1, 0, 0], seconds=[0, 1, 35])
    seq = sample(conv, SamplingPolicy.time(timedelta(seconds=10)))
    assert seq.cuts == (2, 2, 2, 3)


def test_large_k_single_view():
    conv = conv_from_parents([-1, 0, 1, 0])
    seq = sample(conv, SamplingPolicy.volume(50))
    assert len(seq) == 1
    assert snapshot_graph(seq, 0) == conv.graph


def test_volume_ties_resolved_by_rank():
    conv = conv_from_parents([-1, 0, 0, 0, 0, 0, 0], seconds=[0] * 7)
    seq = sample(conv, SamplingPolicy.volume(3))
    assert seq.cuts == (3, 6, 7)
    assert seq.post_ids(0) == ("p0000", "p0001", "p0002")


def test_snapshot_graph_content():
    tags = [[], ["a"], [], ["b"], [], [], [], ["late"], ["a"], []]
    conv = conv_from_parents([-1, 0, 0, 1, 2, 0, 5, 6, 0, 3], tags=tags)
    seq = sample(conv, SamplingPolicy.volume(5))
    first = snapshot_graph(seq, 0)
    # hand fixture: ranks 0-4 are in, hashtags a (rank 1) and b (rank 3)
    assert first.nodes(NodeType.POST) == [f"p{j:04d}" for j in range(5)]
    assert first.nodes(NodeType.HASHTAG) == ["a", "b"]
    assert "late" not in first
    assert snapshot_graph(seq, len(seq) - 1) == conv.graph
    with pytest.raises(IndexError):
        snapshot_graph(seq, len(seq))


def test_policy_validation_and_parsing():
    with pytest.raises(ValueError):
        SamplingPolicy.volume(0)
    with pytest.raises(ValueError):
        SamplingPolicy.time(timedelta(0))
    assert parse_policy("volume:5") == SamplingPolicy.volume(5)
    assert parse_policy("time:6h").delta_t == timedelta(hours=6)
    assert parse_duration("1.5d") == timedelta(hours=36)
    assert parse_duration("250ms") == timedelta(milliseconds=250)
    for bad in ("volume:x", "time:", "weekly"):
        with pytest.raises(ValueError):
            parse_policy(bad)


trees = st.integers(1, 40).flatmap(
    lambda n: st.tuples(
        st.tuples(*[st.just(-1)] + [st.integers(0, j - 1) for j in range(1, n)]),
        st.lists(st.integers(0, 500), min_size=n, max_size=n),
        st.lists(st.lists(st.sampled_from("abc"), max_size=2), min_size=n, max_size=n),
    )
)


def _check_sequence(conv, seq, k=None):
    prev_nodes, prev_edges = set(), set()
    for i in range(len(seq)):
        g = snapshot_graph(seq, i)
        nodes, edges = set(g.nodes()), set(g.edges())
        assert prev_nodes <= nodes and prev_edges <= edges
        full = set(conv.graph.edges())
        assert edges == {e for e in full if e[0] in nodes and e[1] in nodes}
        if k is not None:
            posts = len(g.nodes(NodeType.POST))
            grow = posts - len([n for n in prev_nodes if conv.graph.node_type(n) is NodeType.POST])
            if i < len(seq) - 1:
                assert grow == k
            else:
                assert 1 <= grow <= k
        prev_nodes, prev_edges = nodes, edges
    assert snapshot_graph(seq, len(seq) - 1) == conv.graph


@settings(max_examples=40, deadline=None)
@given(data=trees, k=st.integers(1, 7))
def test_volume_nesting_and_completeness(data, k):
    parents, secs, tags = data
    secs = sorted(secs)
    conv = conv_from_parents(list(parents), secs, tags)
    _check_sequence(conv, sample(conv, SamplingPolicy.volume(k)), k)


@settings(max_examples=40, deadline=None)
@given(data=trees, step=st.integers(1, 200))
def test_time_nesting_and_completeness(data, step):
    parents, secs, tags = data
    secs = sorted(secs)
    conv = conv_from_parents(list(parents), secs, tags)
    seq = sample(conv, SamplingPolicy.time(timedelta(seconds=step)))
    _check_sequence(conv, seq)
    for i, bound in enumerate(seq.boundaries):
        inside = [p for p in conv.order if conv.graph.timestamp(p) < bound]
        if i < len(seq) - 1:
            assert len(inside) == seq.cuts[i]
