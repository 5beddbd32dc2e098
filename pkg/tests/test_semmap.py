import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from typomap.aligner import NOMATCH
from typomap.semmap import MapError, build_map, classical_mds, hamming_matrix, kruskal_stress, read_map, write_map


def pairwise(X):
    return np.sqrt(((X[:, None, :] - X[None, :, :]) ** 2).sum(-1))


def test_hamming_examples():
    assert hamming_matrix([["a", "b", "c"], ["a", "x", "c"]])[0, 1] == 1
    assert hamming_matrix([["a", "b"], ["a", "b"]])[0, 1] == 0
    d = hamming_matrix([[NOMATCH, "b"], [NOMATCH, "b"], ["z", "b"]])
    assert d[0, 1] == 0 and d[0, 2] == 1


def test_hamming_ragged_rows():
    with pytest.raises(MapError):
        hamming_matrix([["a"], ["a", "b"]])


labels = st.sampled_from(["a", "b", "c", NOMATCH])


@settings(max_examples=500)
@given(st.integers(1, 8).flatmap(lambda k: st.lists(st.lists(labels, min_size=k, max_size=k), min_size=3,
                                                      max_size=9)))
def test_hamming_is_a_metric(rows):
    d = hamming_matrix(rows)
    n = len(rows)
    brute = np.array([[sum(x != y for x, y in zip(rows[i], rows[j])) for j in range(n)] for i in range(n)])
    assert np.array_equal(d, brute)
    assert np.all(np.diag(d) == 0) and np.array_equal(d, d.T)
    for i in range(n):
        for j in range(n):
            assert np.all(d[i, j] <= d[i, :] + d[:, j])


def test_mds_two_heaps():
    h = 3.0
    n = 6
    d = np.zeros((n, n))
    d[:3, 3:] = h
    d[3:, :3] = h
    X = classical_mds(d)
    a, b = X[:3].mean(0), X[3:].mean(0)
    assert np.linalg.norm(a - b) == pytest.approx(h, rel=1e-6)
    assert np.allclose(X[:3], a) and np.allclose(X[3:], b)
    assert np.allclose(X[:, 1], 0)


def test_mds_unit_square():
    P = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], float)
    d = pairwise(P)
    X = classical_mds(d)
    assert np.allclose(pairwise(X), d, rtol=1e-6, atol=1e-9)


def test_mds_all_zero():
    assert np.array_equal(classical_mds(np.zeros((5, 5))), np.zeros((5, 2)))


def test_mds_too_few_points():
    with pytest.raises(MapError):
        classical_mds(np.zeros((2, 2)))


def test_mds_collinear_collapses_second_axis(caplog):
    P = np.array([[0.0], [1.0], [3.0], [7.0]])
    d = np.abs(P - P.T)
    X = classical_mds(d)
    assert np.allclose(X[:, 1], 0)
    assert np.allclose(pairwise(X), d, rtol=1e-6, atol=1e-9)


@settings(max_examples=40)
@given(st.integers(3, 25), st.integers(0, 10_000))
def test_mds_recovers_planar_configurations(n, seed):
    rng = np.random.default_rng(seed)
    P = rng.normal(size=(n, 2)) * rng.uniform(0.5, 5, size=2)
    d = pairwise(P)
    X = classical_mds(d)
    iu = np.triu_indices(n, 1)
    assert np.allclose(pairwise(X)[iu], d[iu], rtol=1e-6, atol=1e-8)
    assert kruskal_stress(d, X) < 1e-6


def test_mds_sign_convention():
    rng = np.random.default_rng(1)
    X = classical_mds(pairwise(rng.normal(size=(12, 2))))
    for a in range(2):
        assert X[np.argmax(np.abs(X[:, a])), a] > 0


def test_map_round_trip(tmp_path):
    langs = ["hch", "lxa"]
    lab = {"hch": ["quepa", "ngram_1", "ngram_2", NOMATCH], "lxa": ["nai", "nai", NOMATCH, "nai"]}
    m = build_map(["u1", "u2", "u3", "u4"], ["v1", "v1", "v2", "v3"], langs, lab)
    write_map(tmp_path / "m.tsv", m)
    back = read_map(tmp_path / "m.tsv")
    assert back.upids == m.upids and back.labels == m.labels and back.languages == langs
    assert np.allclose(back.xy, m.xy, rtol=1e-11)
