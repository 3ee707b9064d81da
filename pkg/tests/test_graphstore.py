import numpy as np
import pytest

from nbrecon import graphstore as gs
from nbrecon.errors import ContractError, DimensionError, GraphParseError

from oracles import automorphism_orbits, bfs_distances


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


# ---------------------------------------------------------------------------
# Graph / load_graph


def test_degree_features_default(tmp_path):
    path = write(tmp_path, "edges.txt", "0 1\n1 2\n")
    g = gs.load_graph(path)
    assert g.num_nodes == 3
    assert g.features.tolist() == [[1.0], [2.0], [1.0]]


def test_self_loop_rejected(tmp_path):
    path = write(tmp_path, "edges.txt", "0 0\n")
    with pytest.raises(GraphParseError, match="self-loop"):
        gs.load_graph(path)
    with pytest.raises(ContractError, match="self-loop"):
        gs.Graph(2, [(1, 1)])


def test_duplicate_edges_merged(tmp_path):
    path = write(tmp_path, "edges.txt", "0 1\n0 1\n1 0\n")
    g = gs.load_graph(path)
    assert g.edges == frozenset({(0, 1)})
    assert g.features[0, 0] == 1.0


def test_malformed_line_reports_number(tmp_path):
    path = write(tmp_path, "edges.txt", "0 1\n0 x\n")
    with pytest.raises(GraphParseError, match=":2:"):
        gs.load_graph(path)
    path = write(tmp_path, "edges2.txt", "0 1 2\n")
    with pytest.raises(GraphParseError, match=":1:"):
        gs.load_graph(path)


def test_feature_and_label_files(tmp_path):
    ep = write(tmp_path, "edges.txt", "0 1\n1 2\n")
    fp = write(tmp_path, "features.csv", "1.5,2\n0,1\n3,4\n")
    lp = write(tmp_path, "labels.csv", "0\n1\n0\n")
    g = gs.load_graph(ep, fp, lp)
    assert g.features.shape == (3, 2)
    assert g.features[0].tolist() == [1.5, 2.0]
    assert g.labels.tolist() == [0, 1, 0]


def test_feature_rows_below_edge_range_is_error(tmp_path):
    ep = write(tmp_path, "edges.txt", "0 1\n1 2\n")
    fp = write(tmp_path, "features.csv", "1\n2\n")
    with pytest.raises(DimensionError):
        gs.load_graph(ep, fp)


def test_extra_feature_rows_mean_isolated_nodes(tmp_path):
    ep = write(tmp_path, "edges.txt", "0 1\n")
    fp = write(tmp_path, "features.csv", "1\n1\n0\n")
    g = gs.load_graph(ep, fp)
    assert g.num_nodes == 3
    assert g.index().degrees.tolist() == [1, 1, 0]


def test_label_count_mismatch(tmp_path):
    ep = write(tmp_path, "edges.txt", "0 1\n")
    lp = write(tmp_path, "labels.csv", "0\n1\n1\n")
    with pytest.raises(DimensionError):
        gs.load_graph(ep, label_path=lp)


def test_non_numeric_feature(tmp_path):
    ep = write(tmp_path, "edges.txt", "0 1\n")
    fp = write(tmp_path, "features.csv", "1,2\nfoo,3\n")
    with pytest.raises(GraphParseError, match=":2:"):
        gs.load_graph(ep, fp)


def test_edge_out_of_range():
    with pytest.raises(ContractError):
        gs.Graph(2, [(0, 5)])


def test_neighbor_index_symmetry():
    g = gs.Graph(4, [(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)])
    idx = g.index()
    assert idx.degrees.tolist() == [3, 2, 3, 2]
    for v in range(4):
        assert len(idx.adj[v]) == idx.degrees[v]
        for u in idx.adj[v]:
            assert v in idx.adj[u]


# ---------------------------------------------------------------------------
# k-hop queries


def path3():
    return gs.Graph(3, [(0, 1), (1, 2)])


def test_k_hop_path_examples():
    g = path3()
    assert gs.k_hop_neighborhood(g, 1, 1) == {0, 2}
    assert gs.k_hop_neighborhood(g, 0, 2) == {1, 2}
    assert gs.k_hop_neighborhood(g, 0, 0) == set()


def test_k_hop_isolated():
    g = gs.Graph(3, [(0, 1)])
    assert gs.k_hop_neighborhood(g, 2, 5) == set()


def test_k_hop_out_of_range():
    with pytest.raises(IndexError):
        gs.k_hop_neighborhood(path3(), 3, 1)
    with pytest.raises(ContractError):
        gs.k_hop_neighborhood(path3(), 0, -1)


def test_k_hop_matches_bfs_oracle():
    rng = np.random.default_rng(0)
    for trial in range(10):
        n = int(rng.integers(2, 50))
        mask = rng.random((n, n)) < 0.08
        edges = [(i, j) for i in range(n) for j in range(i + 1, n) if mask[i, j]]
        g = gs.Graph(n, edges)
        for v in range(0, n, max(1, n // 5)):
            dist = bfs_distances(n, edges, v)
            prev = -1
            for k in range(0, 6):
                got = gs.k_hop_neighborhood(g, v, k)
                want = {u for u in range(n) if u != v and 0 <= dist[u] <= k}
                assert got == want
                assert len(got) >= prev  # non-decreasing in k
                assert len(got) <= n - 1
                prev = len(got)


# ---------------------------------------------------------------------------
# write / round-trip


def test_round_trip(tmp_path):
    spec = gs.ShapeSpec(kind="house", count=4, cycle_len=12, seed=3)
    g = gs.generate_planted(spec)
    gs.write_graph(g, str(tmp_path))
    g2 = gs.load_graph(
        str(tmp_path / "edges.txt"),
        str(tmp_path / "features.csv"),
        str(tmp_path / "labels.csv"),
    )
    assert g2.num_nodes == g.num_nodes
    assert g2.edges == g.edges
    assert np.array_equal(g2.features, g.features)
    assert np.array_equal(g2.labels, g.labels)


def test_round_trip_trailing_isolated_node(tmp_path):
    g = gs.Graph(4, [(0, 1)])
    gs.write_graph(g, str(tmp_path))
    g2 = gs.load_graph(str(tmp_path / "edges.txt"), str(tmp_path / "features.csv"))
    assert g2.num_nodes == 4
    assert g2.edges == g.edges


def test_no_label_file_for_unlabeled(tmp_path):
    gs.write_graph(gs.Graph(2, [(0, 1)]), str(tmp_path))
    assert not (tmp_path / "labels.csv").exists()


def test_house_graph_has_90_feature_rows(tmp_path):
    g = gs.generate_planted(gs.ShapeSpec(kind="house", count=10, cycle_len=40))
    gs.write_graph(g, str(tmp_path))
    assert len((tmp_path / "features.csv").read_text().splitlines()) == 90


# ---------------------------------------------------------------------------
# shape orbits vs. brute-force automorphism search


def test_house_orbits_match_brute_force():
    n, edges = gs._house()
    labels = gs.orbit_labels(n, edges)
    assert labels == automorphism_orbits(n, edges)
    # two base corners, two roof-adjacent corners, one roof
    sizes = sorted(labels.count(c) for c in set(labels))
    assert len(set(labels)) == 3 and sizes == [1, 2, 2]


@pytest.mark.parametrize("leaves", [2, 3, 4, 5, 6])
def test_fan_orbits_match_brute_force(leaves):
    n, edges = gs._fan(leaves)
    assert gs.orbit_labels(n, edges) == automorphism_orbits(n, edges)


@pytest.mark.parametrize("leaves", [2, 3, 4, 5, 6])
def test_star_orbits_match_brute_force(leaves):
    n, edges = gs._star(leaves)
    labels = gs.orbit_labels(n, edges)
    assert labels == automorphism_orbits(n, edges)
    assert len(set(labels)) == 2


def test_orbit_labels_on_standalone_shape_respect_two_hop_degrees():
    # true orbits imply identical 2-hop degree multisets on the bare shape
    for n, edges in [gs._house(), gs._fan(5), gs._star(4)]:
        g = gs.Graph(n, edges)
        labels = gs.orbit_labels(n, edges)
        seqs = {}
        for v in range(n):
            hood = gs.k_hop_neighborhood(g, v, 2)
            seq = tuple(sorted(int(g.index().degrees[u]) for u in hood))
            seqs.setdefault(labels[v], set()).add(seq)
        assert all(len(s) == 1 for s in seqs.values())


# ---------------------------------------------------------------------------
# planted generation


def test_house_dataset_arithmetic():
    g = gs.generate_planted(gs.ShapeSpec(kind="house", count=10, cycle_len=40))
    assert g.num_nodes == 90
    # 40 cycle + 10*6 house + 10 attachment edges
    assert len(g.edges) == 40 + 60 + 10
    assert len(set(g.labels.tolist())) == 5


def test_attachments_evenly_spaced():
    g = gs.generate_planted(gs.ShapeSpec(kind="house", count=10, cycle_len=40))
    attach = [v for v in range(40) if g.labels[v] == 1]
    assert attach == [4 * j for j in range(10)]


def test_label_multiset_identical_across_placements():
    g = gs.generate_planted(gs.ShapeSpec(kind="fan", count=3, cycle_len=9, size=4))
    n_shape = 5
    chunks = [
        sorted(g.labels[9 + i * n_shape : 9 + (i + 1) * n_shape].tolist())
        for i in range(3)
    ]
    assert chunks[0] == chunks[1] == chunks[2]


def test_features_are_degrees():
    g = gs.generate_planted(gs.ShapeSpec(kind="star", count=2, cycle_len=6, size=3))
    assert np.array_equal(g.features[:, 0], g.index().degrees.astype(float))


def test_varied_mixes_kinds_with_disjoint_label_blocks():
    g = gs.generate_planted(
        gs.ShapeSpec(kind="varied", count=6, cycle_len=18, size=4)
    )
    # house block 2..4, fan block 5..7 (hub + 2 leaf orbits), star block 8..9
    labs = set(g.labels.tolist())
    assert labs == set(range(10))
    assert g.num_nodes == 18 + 2 * (5 + 5 + 5)


def test_same_seed_reproduces():
    spec = gs.ShapeSpec(kind="house", count=5, cycle_len=20, perturb=7, seed=11)
    g1, g2 = gs.generate_planted(spec), gs.generate_planted(spec)
    assert g1.edges == g2.edges
    assert np.array_equal(g1.features, g2.features)
    assert np.array_equal(g1.labels, g2.labels)


def test_perturbation_edge_budget():
    clean = gs.generate_planted(gs.ShapeSpec(kind="house", count=5, cycle_len=20))
    for p in (1, 4, 9):
        g = gs.generate_planted(
            gs.ShapeSpec(kind="house", count=5, cycle_len=20, perturb=p, seed=p)
        )
        delta = len(g.edges) - len(clean.edges)
        assert abs(delta) <= p
        assert (delta - p) % 2 == 0  # each event moves the count by exactly 1
        assert np.array_equal(g.labels, clean.labels)


def test_perturbed_features_track_new_degrees():
    g = gs.generate_planted(
        gs.ShapeSpec(kind="house", count=5, cycle_len=20, perturb=10, seed=2)
    )
    assert np.array_equal(g.features[:, 0], g.index().degrees.astype(float))


def test_instances_indistinguishable_two_hop():
    # same-kind placements are carbon copies: the multiset of
    # (label, 2-hop degree sequence) pairs matches across instances
    for kind in ("house", "fan", "star"):
        spec = gs.ShapeSpec(kind=kind, count=4, cycle_len=16, size=4)
        g = gs.generate_planted(spec)
        n_shape = gs._shape(kind, 4)[0]
        per_instance = []
        for i in range(4):
            lo = 16 + i * n_shape
            sigs = []
            for v in range(lo, lo + n_shape):
                hood = gs.k_hop_neighborhood(g, v, 2)
                degs = tuple(sorted(int(g.index().degrees[u]) for u in hood))
                sigs.append((int(g.labels[v]), degs))
            per_instance.append(sorted(sigs))
        assert all(p == per_instance[0] for p in per_instance)


def test_spec_validation():
    with pytest.raises(ContractError):
        gs.generate_planted(gs.ShapeSpec(kind="igloo", count=1, cycle_len=5))
    with pytest.raises(ContractError):
        gs.generate_planted(gs.ShapeSpec(kind="house", count=9, cycle_len=5))
    with pytest.raises(ContractError):
        gs.generate_planted(gs.ShapeSpec(kind="fan", count=1, cycle_len=5, size=1))
