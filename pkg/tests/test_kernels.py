import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from convdyn import _kernels

from helpers import bfs_wiener_oracle, reply_graph

forests = st.integers(1, 60).flatmap(
    lambda n: st.tuples(*[st.just(-1)] + [st.integers(0, j - 1) for j in range(1, n)])
)


def test_backend_selection():
    assert _kernels.BACKEND in _kernels.available_backends()
    assert _kernels.get_backend("python").__name__.endswith("_pykernels")
    with pytest.raises(ValueError):
        _kernels.get_backend("fortran")


def test_tree_depths(backend):
    assert list(backend.tree_depths([-1, 0, 1, 0, 3])) == [0, 1, 2, 1, 2]
    assert list(backend.tree_depths([2, -1, 1])) == [2, 0, 1]
    with pytest.raises(ValueError):
        backend.tree_depths([1, 0])


def test_wiener_prefix_rejects_forests(backend):
    with pytest.raises(ValueError):
        backend.wiener_prefix_series([-1, -1], [2])
    with pytest.raises(ValueError):
        backend.wiener_prefix_series([-1, 2, 0], [2, 3])
    assert backend.wiener_prefix_series([-1, 2, 0], [1, 3]) == pytest.approx([0.0, 4 / 6])
    with pytest.raises(ValueError):
        backend.wiener_prefix_series([-1, 0], [2, 1])


@settings(max_examples=80, deadline=None)
@given(parents=forests)
def test_backends_agree_with_oracle(parents):
    parents = list(parents)
    n = len(parents)
    cuts = list(range(1, n + 1))
    expected = [bfs_wiener_oracle(reply_graph(parents[:c])) for c in cuts]
    for name in _kernels.available_backends():
        got = _kernels.get_backend(name).wiener_prefix_series(parents, cuts)
        assert list(got) == expected


@settings(max_examples=40, deadline=None)
@given(
    curves=st.lists(
        st.lists(st.floats(0, 1), max_size=15).map(lambda xs: [0.0] + sorted(xs) + [1.0]),
        min_size=1, max_size=5,
    ),
    size=st.sampled_from([1, 10, 97, 1000]),
)
def test_curve_backends_bit_identical(curves, size):
    results = []
    for name in _kernels.available_backends():
        mod = _kernels.get_backend(name)
        mean = np.zeros(size + 1)
        m2 = np.zeros(size + 1)
        for k, c in enumerate(curves, start=1):
            mod.accumulate_step_curve(np.asarray(c), size, mean, m2, k)
        results.append((mean, m2))
    for mean, m2 in results[1:]:
        assert np.array_equal(mean, results[0][0])
        assert np.array_equal(m2, results[0][1])
