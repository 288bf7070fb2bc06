import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from grafn import (
    DataError,
    SparseAdjacency,
    SplitSpec,
    convert_content_cites,
    degree_buckets,
    generate_splits,
    load_dataset,
    normalize_adjacency,
    random_dataset,
    write_dataset,
)
from tests.conftest import make_dataset


def write_toy_dir(path, edges, features, labels, meta=None):
    path.mkdir(parents=True, exist_ok=True)
    n = len(features)
    default_meta = {
        "name": "toy",
        "num_nodes": n,
        "num_features": len(features[0]),
        "num_classes": max(labels) + 1,
    }
    default_meta.update(meta or {})
    (path / "meta.json").write_text(json.dumps(default_meta))
    (path / "graph.edges").write_text(
        "".join(f"{a} {b}\n" for a, b in edges)
    )
    (path / "features.tsv").write_text(
        "".join("\t".join(str(v) for v in row) + "\n" for row in features)
    )
    (path / "labels.txt").write_text("".join(f"{v}\n" for v in labels))
    return str(path)


# ---------------------------------------------------------------------------
# loader


def test_load_two_node_toy(tmp_path):
    d = write_toy_dir(tmp_path / "toy", [(0, 1)], [[1.0, 0.0], [0.0, 1.0]], [0, 1])
    ds = load_dataset(d)
    assert ds.num_nodes == 2 and ds.num_features == 2 and ds.class_count == 2
    np.testing.assert_array_equal(ds.adj.to_dense(), [[0, 1], [1, 0]])


def test_load_reports_malformed_edge_line(tmp_path):
    d = write_toy_dir(tmp_path / "toy", [(0, 1)], [[1.0], [1.0]], [0, 0])
    (tmp_path / "toy" / "graph.edges").write_text("0 1\nbroken\n")
    with pytest.raises(DataError, match=r"graph.edges:2"):
        load_dataset(d)


def test_load_rejects_label_out_of_range(tmp_path):
    d = write_toy_dir(tmp_path / "toy", [], [[1.0], [1.0]], [0, 0])
    (tmp_path / "toy" / "labels.txt").write_text("0\n7\n")
    with pytest.raises(DataError, match=r"labels.txt:2.*out of range"):
        load_dataset(d)


def test_load_rejects_node_out_of_range(tmp_path):
    d = write_toy_dir(tmp_path / "toy", [(0, 9)], [[1.0], [1.0]], [0, 0])
    with pytest.raises(DataError, match="out of range"):
        load_dataset(d)


def test_load_rejects_wrong_feature_arity(tmp_path):
    d = write_toy_dir(tmp_path / "toy", [], [[1.0], [1.0]], [0, 0])
    (tmp_path / "toy" / "features.tsv").write_text("1.0\n1.0\t2.0\n")
    with pytest.raises(DataError, match=r"features.tsv:2.*expected 1 columns"):
        load_dataset(d)


def test_write_load_roundtrip_is_identity(tmp_path):
    ds = random_dataset(25, num_classes=3, num_features=6, seed=5)
    write_dataset(ds, str(tmp_path / "rt"))
    back = load_dataset(str(tmp_path / "rt"))
    np.testing.assert_array_equal(back.features, ds.features)
    np.testing.assert_array_equal(back.labels, ds.labels)
    np.testing.assert_array_equal(back.adj.to_dense(), ds.adj.to_dense())
    assert back.name == ds.name


# ---------------------------------------------------------------------------
# converter


def test_convert_isolated_nodes(tmp_path):
    content = tmp_path / "x.content"
    cites = tmp_path / "x.cites"
    content.write_text("a 1 0 ml\nb 0 1 db\nc 1 1 ml\n")
    cites.write_text("")
    summary = convert_content_cites(str(content), str(cites), str(tmp_path / "out"))
    assert summary["num_nodes"] == 3
    assert summary["undirected_edges"] == 0
    ds = load_dataset(str(tmp_path / "out"))
    assert ds.adj.nnz == 0


def test_convert_drops_dangling_edge_with_count(tmp_path):
    content = tmp_path / "x.content"
    cites = tmp_path / "x.cites"
    content.write_text("a 1 0 ml\nb 0 1 db\n")
    cites.write_text("a b\na ghost\n")
    summary = convert_content_cites(str(content), str(cites), str(tmp_path / "out"))
    assert summary["dropped_dangling"] == 1
    assert summary["undirected_edges"] == 1


def test_convert_rejects_duplicate_node_id(tmp_path):
    content = tmp_path / "x.content"
    content.write_text("a 1 0 ml\na 0 1 db\n")
    (tmp_path / "x.cites").write_text("")
    with pytest.raises(DataError, match="duplicate node id"):
        convert_content_cites(str(content), str(tmp_path / "x.cites"), str(tmp_path / "o"))


def test_convert_rejects_inconsistent_arity(tmp_path):
    content = tmp_path / "x.content"
    content.write_text("a 1 0 ml\nb 1 db\n")
    (tmp_path / "x.cites").write_text("")
    with pytest.raises(DataError, match="arity"):
        convert_content_cites(str(content), str(tmp_path / "x.cites"), str(tmp_path / "o"))


def test_convert_classes_lexicographic_and_first_appearance_order(tmp_path):
    content = tmp_path / "x.content"
    cites = tmp_path / "x.cites"
    content.write_text("n9 1 zebra\nn1 1 apple\nn5 1 zebra\n")
    cites.write_text("n9 n1\nn1 n9\nn9 n9\n")
    summary = convert_content_cites(str(content), str(cites), str(tmp_path / "out"))
    assert summary["class_names"] == ["apple", "zebra"]
    assert summary["collapsed_duplicates"] == 1
    assert summary["dropped_self_loops"] == 1
    ds = load_dataset(str(tmp_path / "out"))
    # first-appearance order: n9 -> 0, n1 -> 1, n5 -> 2
    np.testing.assert_array_equal(ds.label_ids(), [1, 0, 1])
    np.testing.assert_array_equal(ds.adj.undirected_edge_list(), [[0, 1]])


def test_convert_load_roundtrip_preserves_toy(tmp_path):
    content = tmp_path / "x.content"
    cites = tmp_path / "x.cites"
    content.write_text("a 1 0 ml\nb 0 1 db\nc 1 1 ml\n")
    cites.write_text("a b\nb c\n")
    convert_content_cites(str(content), str(cites), str(tmp_path / "out"))
    ds = load_dataset(str(tmp_path / "out"))
    write_dataset(ds, str(tmp_path / "out2"))
    again = load_dataset(str(tmp_path / "out2"))
    np.testing.assert_array_equal(again.features, ds.features)
    np.testing.assert_array_equal(again.adj.to_dense(), ds.adj.to_dense())


# ---------------------------------------------------------------------------
# normalization


def test_normalize_single_isolated_node():
    adj = SparseAdjacency.from_edges(1, [])
    out = normalize_adjacency(adj)
    np.testing.assert_allclose(out.to_dense(), [[1.0]], atol=1e-15)


def test_normalize_two_node_edge_gives_half_everywhere():
    adj = SparseAdjacency.from_edges(2, [(0, 1)])
    out = normalize_adjacency(adj)
    np.testing.assert_allclose(out.to_dense(), np.full((2, 2), 0.5), atol=1e-15)


def test_normalize_star_matches_dense_oracle():
    adj = SparseAdjacency.from_edges(4, [(0, 1), (0, 2), (0, 3)])
    out = normalize_adjacency(adj).to_dense()
    dense = adj.to_dense() + np.eye(4)
    deg = dense.sum(axis=1)
    oracle = dense / np.sqrt(np.outer(deg, deg))
    np.testing.assert_allclose(out, oracle, atol=1e-12)
    assert abs(out[0, 1] - 1.0 / np.sqrt(4 * 2)) < 1e-12


@given(st.integers(min_value=1, max_value=25), st.integers(min_value=0, max_value=9999))
@settings(max_examples=25, deadline=None)
def test_normalize_symmetric_spectral_radius_at_most_one(n, seed):
    rng = np.random.default_rng(seed)
    m = np.triu(rng.random((n, n)) < 0.3, 1)
    adj = SparseAdjacency.from_edges(n, list(zip(*np.nonzero(m))))
    out = normalize_adjacency(adj)
    dense = out.to_dense()
    np.testing.assert_allclose(dense, dense.T, atol=1e-14)
    assert out.values.min() > 0.0 and out.values.max() <= 1.0 + 1e-14
    # power iteration
    v = np.ones(n) / np.sqrt(n)
    for _ in range(50):
        w = dense @ v
        norm = np.linalg.norm(w)
        if norm == 0:
            break
        v = w / norm
    assert np.linalg.norm(dense @ v) <= 1.0 + 1e-9


# ---------------------------------------------------------------------------
# splits


def test_split_arithmetic_matches_citation_network_shape():
    # 2708 nodes, 7 classes: rate 0.005 must give round(13.54) = 14 labeled,
    # every class covered
    rng = np.random.default_rng(0)
    labels = rng.integers(0, 7, size=2708)
    labels[:7] = np.arange(7)
    ds = make_dataset(2708, [(0, 1)], labels, 7, num_features=4)
    splits = generate_splits(ds, 0.005, 3, base_seed=42)
    for split in splits:
        assert len(split.labeled) == 14
        assert set(ds.label_ids()[split.labeled]) == set(range(7))


def test_split_rate_too_small_for_classes():
    ds = make_dataset(100, [(0, 1)], np.arange(100) % 5, 5)
    with pytest.raises(DataError, match="fewer than 5 classes"):
        generate_splits(ds, 0.02, 1, 0)  # round(2) < 5


def test_split_deterministic_per_base_seed():
    ds = make_dataset(60, [(0, 1)], np.arange(60) % 3, 3)
    a = generate_splits(ds, 0.1, 4, base_seed=9)
    b = generate_splits(ds, 0.1, 4, base_seed=9)
    for sa, sb in zip(a, b):
        np.testing.assert_array_equal(sa.labeled, sb.labeled)
        np.testing.assert_array_equal(sa.val, sb.val)
        np.testing.assert_array_equal(sa.test, sb.test)
        assert sa.seed == sb.seed


@given(
    st.integers(min_value=40, max_value=200),
    st.integers(min_value=2, max_value=5),
    st.floats(min_value=0.05, max_value=0.3),
    st.integers(min_value=0, max_value=999),
)
@settings(max_examples=25, deadline=None)
def test_split_partition_invariants(n, c, rate, seed):
    rng = np.random.default_rng(seed)
    labels = np.concatenate([np.arange(c), rng.integers(0, c, size=n - c)])
    ds = make_dataset(n, [(0, 1)], labels, c)
    n_labeled = int(np.floor(rate * n + 0.5))
    if n_labeled < c:
        return
    split = generate_splits(ds, rate, 1, seed)[0]
    lab, val, test = set(split.labeled), set(split.val), set(split.test)
    assert len(split.labeled) == n_labeled
    assert not (lab & val) and not (lab & test) and not (val & test)
    assert len(lab | val | test) == n
    assert set(labels[split.labeled]) == set(range(c))
    rest = n - n_labeled
    # 1:9 within rounding of the remainder
    assert abs(len(val) - rest / 10.0) <= 0.5 + 1e-9
    assert len(val) + len(test) == rest


def test_split_json_roundtrip():
    spec = SplitSpec(
        labeled=np.array([1, 5]), val=np.array([2]), test=np.array([0, 3, 4]),
        seed=17, label_rate=0.25,
    )
    back = SplitSpec.from_json(spec.to_json())
    np.testing.assert_array_equal(back.labeled, spec.labeled)
    np.testing.assert_array_equal(back.val, spec.val)
    np.testing.assert_array_equal(back.test, spec.test)
    assert back.seed == 17 and back.label_rate == 0.25


def test_split_malformed_json():
    with pytest.raises(DataError, match="malformed split file"):
        SplitSpec.from_json('{"seed": 1}')


# ---------------------------------------------------------------------------
# degree buckets


def test_degree_buckets_star_graph():
    ds = make_dataset(10, [(0, i) for i in range(1, 10)], [0] * 10, 1)
    buckets = degree_buckets(ds, [7])
    assert buckets[0] == 1
    np.testing.assert_array_equal(buckets[1:], np.zeros(9))


def test_degree_buckets_isolated_node():
    ds = make_dataset(2, [], [0, 0], 1)
    np.testing.assert_array_equal(degree_buckets(ds, [1, 3]), [0, 0])


def test_degree_buckets_histogram_matches_independent_count(synthetic_ds):
    boundaries = [2, 4, 7]
    buckets = degree_buckets(synthetic_ds, boundaries)
    # independent count straight from the undirected edge list
    deg = np.zeros(synthetic_ds.num_nodes, dtype=int)
    for i, j in synthetic_ds.adj.undirected_edge_list():
        deg[i] += 1
        deg[j] += 1
    expected = np.zeros(4, dtype=int)
    for d in deg:
        if d < 2:
            expected[0] += 1
        elif d < 4:
            expected[1] += 1
        elif d < 7:
            expected[2] += 1
        else:
            expected[3] += 1
    np.testing.assert_array_equal(np.bincount(buckets, minlength=4), expected)


def test_degree_buckets_validation():
    ds = make_dataset(2, [], [0, 0], 1)
    with pytest.raises(DataError, match="non-empty"):
        degree_buckets(ds, [])
    with pytest.raises(DataError, match="strictly increasing"):
        degree_buckets(ds, [4, 4])
