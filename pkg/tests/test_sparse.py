import numpy as np
import pytest

from grafn import NumericsError, SparseAdjacency, SparseFeatures


def test_from_edges_materializes_both_directions():
    adj = SparseAdjacency.from_edges(2, [(0, 1)])
    np.testing.assert_array_equal(
        adj.to_dense(), [[0.0, 1.0], [1.0, 0.0]]
    )
    assert adj.num_undirected_edges == 1


def test_from_edges_collapses_duplicates():
    adj = SparseAdjacency.from_edges(3, [(0, 1), (1, 0), (0, 1)])
    assert adj.nnz == 2
    assert adj.values.max() == 1.0


def test_from_edges_rejects_out_of_range():
    with pytest.raises(NumericsError, match="out of range"):
        SparseAdjacency.from_edges(2, [(0, 5)])


def test_undirected_edge_list_row_major_order():
    adj = SparseAdjacency.from_edges(4, [(2, 3), (0, 1), (0, 3)])
    np.testing.assert_array_equal(
        adj.undirected_edge_list(), [[0, 1], [0, 3], [2, 3]]
    )


def test_degrees_exclude_self_loops():
    adj = SparseAdjacency.from_edges(3, [(0, 1), (1, 1), (1, 2)])
    np.testing.assert_array_equal(adj.degrees(), [1, 2, 1])


def test_validate_catches_asymmetry():
    adj = SparseAdjacency(
        n=2,
        row_offsets=np.array([0, 1, 1]),
        col_indices=np.array([1]),
        values=np.array([1.0]),
    )
    with pytest.raises(NumericsError, match="symmetric"):
        adj.validate()


def test_validate_catches_negative_values():
    adj = SparseAdjacency.from_edges(2, [(0, 1)], values=[-1.0])
    with pytest.raises(NumericsError, match="non-negative"):
        adj.validate()


# ---------------------------------------------------------------------------
# SparseFeatures


def test_sparse_features_roundtrip():
    rng = np.random.default_rng(0)
    x = (rng.random((6, 9)) < 0.3) * rng.random((6, 9))
    sf = SparseFeatures.from_dense(x)
    np.testing.assert_array_equal(sf.to_dense(), x)
    assert sf.shape == (6, 9)


def test_sparse_features_matmul_matches_dense():
    rng = np.random.default_rng(1)
    x = (rng.random((7, 5)) < 0.4) * rng.standard_normal((7, 5))
    w = rng.standard_normal((5, 3))
    sf = SparseFeatures.from_dense(x)
    np.testing.assert_allclose(sf.matmul(w), x @ w, atol=1e-12)
    g = rng.standard_normal((7, 3))
    np.testing.assert_allclose(sf.grad_right(g), x.T @ g, atol=1e-12)


def test_sparse_features_column_scale():
    x = np.array([[1.0, 2.0, 0.0], [0.0, 3.0, 4.0]])
    sf = SparseFeatures.from_dense(x).scale_columns(np.array([1.0, 0.0, 1.0]))
    np.testing.assert_array_equal(
        sf.to_dense(), [[1.0, 0.0, 0.0], [0.0, 0.0, 4.0]]
    )


def test_sparse_features_drop_entries_scales_survivors():
    x = np.ones((20, 50))
    sf = SparseFeatures.from_dense(x)
    dropped = sf.drop_entries(0.5, np.random.default_rng(3)).to_dense()
    assert set(np.unique(dropped)) == {0.0, 2.0}
    assert abs(dropped.mean() - 1.0) < 0.1


def test_sparse_features_mask_entries_no_rescale():
    x = np.full((10, 10), 5.0)
    masked = SparseFeatures.from_dense(x).mask_entries(
        0.3, np.random.default_rng(4)
    ).to_dense()
    assert set(np.unique(masked)) <= {0.0, 5.0}
