import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from reclab import BinaryRatingMatrix, RatingMatrix
from reclab.errors import InvalidArgument, InvalidMeasure
from reclab.similarity import (
    rank_order,
    select_neighborhood,
    similarity,
    similarity_matrix,
    similarity_to_rows,
)

import oracles

nan = np.nan


def test_identical_vectors():
    x = np.array([1.0, 2.0, 4.0])
    assert similarity(x, x, "cosine") == pytest.approx(1.0)
    assert similarity(x, x, "pearson") == pytest.approx(1.0)


def test_co_rated_only():
    a = np.array([1.0, 2.0, nan, 5.0])
    b = np.array([2.0, 4.0, 3.0, nan])
    # only the first two positions count: (1,2) vs (2,4)
    assert similarity(a, b, "cosine") == pytest.approx(1.0)
    assert similarity(a, b, "pearson") == pytest.approx(1.0)


def test_undefined_is_nan_not_zero():
    a = np.array([1.0, nan])
    b = np.array([nan, 1.0])
    assert math.isnan(similarity(a, b, "cosine"))
    # pearson needs two co-rated items and non-constant vectors
    assert math.isnan(similarity(np.array([1.0, 2.0]), np.array([3.0, nan]), "pearson"))
    assert math.isnan(similarity(np.array([1.0, 1.0]), np.array([2.0, 3.0]), "pearson"))
    assert math.isnan(similarity(np.zeros(3), np.ones(3), "cosine"))


def test_min_matching():
    a = np.array([1.0, 2.0, 3.0, nan])
    b = np.array([1.0, 2.0, 4.0, 1.0])
    assert not math.isnan(similarity(a, b, "cosine", min_matching=3))
    assert math.isnan(similarity(a, b, "cosine", min_matching=4))


def test_jaccard():
    a = np.array([1, 1, 0, 0], dtype=bool)
    b = np.array([1, 0, 1, 0], dtype=bool)
    assert similarity(a, b, "jaccard") == pytest.approx(1 / 3)
    assert math.isnan(similarity(np.zeros(3, bool), np.zeros(3, bool), "jaccard"))


def test_jaccard_needs_binary():
    with pytest.raises(InvalidMeasure):
        similarity(np.array([1.0, 2.0]), np.array([1.0, 2.0]), "jaccard")
    with pytest.raises(InvalidMeasure):
        similarity(np.array([1.0]), np.array([1.0]), "euclid")


def test_binary_cosine_and_pearson():
    a = np.array([1, 1, 0, 0, 1], dtype=bool)
    b = np.array([1, 0, 1, 0, 1], dtype=bool)
    assert similarity(a, b, "cosine") == pytest.approx(2 / 3)
    want = np.corrcoef(a.astype(float), b.astype(float))[0, 1]
    assert similarity(a, b, "pearson") == pytest.approx(want)


def test_vector_against_rows_matches_oracle():
    rng = np.random.default_rng(3)
    D = oracles.random_ratings(rng, 12, 8, density=0.6)
    for measure in ("cosine", "pearson"):
        got = similarity_to_rows(D[0], D, measure)
        want = [oracles.sim_pair(D[0], D[u], measure) for u in range(12)]
        assert np.allclose(got, want, equal_nan=True, atol=1e-12)


def test_similarity_matrix_symmetric_and_oracle():
    rng = np.random.default_rng(5)
    D = oracles.random_ratings(rng, 10, 6, density=0.7)
    m = RatingMatrix.from_dense(D)
    S = similarity_matrix(m, "items", "pearson")
    assert np.allclose(S, S.T, equal_nan=True)
    for i in range(6):
        for j in range(6):
            want = oracles.sim_pair(D[:, i], D[:, j], "pearson")
            assert (math.isnan(want) and math.isnan(S[i, j])) or S[i, j] == pytest.approx(want, abs=1e-12)


def test_similarity_matrix_binary_jaccard():
    D = np.array([[1, 1, 0], [1, 0, 0], [0, 1, 1]], dtype=bool)
    S = similarity_matrix(BinaryRatingMatrix.from_dense(D), "users", "jaccard")
    for i in range(3):
        for j in range(3):
            assert S[i, j] == pytest.approx(oracles.jaccard_pair(D[i], D[j]))


def test_rank_order_ties_by_index():
    s = np.array([0.5, 0.9, 0.5, 0.9 + 1e-15])
    assert rank_order(s).tolist() == [1, 3, 0, 2]
    assert rank_order(s, [2, 0]).tolist() == [0, 2]


def test_select_neighborhood_knn_and_threshold():
    s = np.array([0.2, nan, 0.8, 0.5, 0.8])
    nb = select_neighborhood(s, k=3)
    assert nb.indices.tolist() == [2, 4, 3]
    assert nb.mode == "knn" and len(nb) == 3
    nb = select_neighborhood(s, target=2, threshold=0.5)
    assert nb.indices.tolist() == [4, 3]
    with pytest.raises(InvalidArgument):
        select_neighborhood(s)
    with pytest.raises(InvalidArgument):
        select_neighborhood(s, k=1, threshold=0.1)


def test_select_neighborhood_matches_full_sort():
    rng = np.random.default_rng(11)
    S = rng.uniform(-1, 1, (8, 8))
    S[rng.random((8, 8)) < 0.2] = nan
    for i in range(8):
        got = select_neighborhood(S[i], target=i, k=3).indices.tolist()
        assert got == oracles.top_k(S[i].tolist(), 3, exclude=i)


vec = st.lists(st.one_of(st.none(), st.floats(-5, 5, allow_nan=False)), min_size=5, max_size=5)


@settings(max_examples=100, deadline=None)
@given(vec, vec)
def test_property_symmetric_and_bounded(x, y):
    a = np.array([nan if v is None else v for v in x])
    b = np.array([nan if v is None else v for v in y])
    for measure in ("cosine", "pearson"):
        s1, s2 = similarity(a, b, measure), similarity(b, a, measure)
        assert (math.isnan(s1) and math.isnan(s2)) or s1 == pytest.approx(s2, abs=1e-12)
        if not math.isnan(s1):
            assert -1.0 <= s1 <= 1.0
        want = oracles.sim_pair(a, b, measure)
        assert (math.isnan(s1) and math.isnan(want)) or s1 == pytest.approx(want, abs=1e-9)
