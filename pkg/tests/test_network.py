import numpy as np
import pytest

from linkmix.network import (
    EdgeListError,
    EmptyNetworkError,
    GroundTruth,
    Network,
    connected_components,
    extract_giant_component,
    filter_ground_truth,
    load_edge_list,
    load_labels,
    symmetrize,
    write_edge_list,
)


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


class TestLoadEdgeList:
    def test_basic_first_appearance_order(self, tmp_path):
        net = load_edge_list(write(tmp_path, "e.txt", "a b\nb c\n"), directed=False)
        assert net.node_count == 3
        assert net.edges.tolist() == [[0, 1], [1, 2]]
        assert net.node_names == ["a", "b", "c"]

    def test_self_loop_retained(self, tmp_path):
        net = load_edge_list(write(tmp_path, "e.txt", "a a\n"), directed=False)
        assert net.node_count == 1
        assert net.edges.tolist() == [[0, 0]]

    def test_multiplicity_expands_to_repeated_edges(self, tmp_path):
        net = load_edge_list(write(tmp_path, "e.txt", "a b 3\nb c\n"), directed=True)
        assert net.n_edges == 4
        assert net.edges.tolist() == [[0, 1], [0, 1], [0, 1], [1, 2]]

    def test_comments_and_blank_lines_skipped(self, tmp_path):
        text = "# header\n% other comment\n\na b\n"
        net = load_edge_list(write(tmp_path, "e.txt", text), directed=False)
        assert net.n_edges == 1

    def test_malformed_line_reports_line_number(self, tmp_path):
        path = write(tmp_path, "e.txt", "a b\nc\n")
        with pytest.raises(EdgeListError, match=r":2:"):
            load_edge_list(path, directed=False)

    def test_bad_multiplicity(self, tmp_path):
        with pytest.raises(EdgeListError, match="multiplicity"):
            load_edge_list(write(tmp_path, "e.txt", "a b x\n"), directed=False)
        with pytest.raises(EdgeListError, match="positive"):
            load_edge_list(write(tmp_path, "e.txt", "a b 0\n"), directed=False)

    def test_empty_file_raises(self, tmp_path):
        with pytest.raises(EmptyNetworkError):
            load_edge_list(write(tmp_path, "e.txt", "# nothing\n"), directed=False)

    def test_roundtrip_identity(self, tmp_path):
        rng = np.random.default_rng(0)
        for trial in range(20):
            m = int(rng.integers(2, 9))
            n_links = int(rng.integers(1, 15))
            edges = rng.integers(0, m, size=(n_links, 2))
            net = Network(node_count=m, edges=edges, directed=True,
                          node_names=[f"v{i}" for i in range(m)])
            path = tmp_path / f"rt{trial}.txt"
            write_edge_list(net, path)
            back = load_edge_list(path, directed=True)
            assert back.node_count <= net.node_count  # unreferenced nodes drop
            original = sorted(map(tuple, net.edges.tolist()))
            names = {name: i for i, name in enumerate(net.node_names)}
            restored = sorted(
                (names[back.node_names[i]], names[back.node_names[j]])
                for i, j in back.edges
            )
            assert original == restored


class TestNetwork:
    def test_undirected_canonical_orientation(self):
        net = Network(node_count=3, edges=[[2, 0], [1, 2]], directed=False)
        assert net.edges.tolist() == [[0, 2], [1, 2]]

    def test_endpoint_out_of_range(self):
        with pytest.raises(ValueError):
            Network(node_count=2, edges=[[0, 2]], directed=False)

    def test_degrees_count_self_loop_twice(self):
        net = Network(node_count=2, edges=[[0, 0], [0, 1]], directed=False)
        assert net.degrees().tolist() == [3, 1]

    def test_edges_are_read_only(self):
        net = Network(node_count=2, edges=[[0, 1]], directed=False)
        with pytest.raises(ValueError):
            net.edges[0, 0] = 1


class TestSymmetrize:
    def test_pair_collapse(self):
        net = Network(node_count=2, edges=[[0, 1], [1, 0]], directed=True)
        assert symmetrize(net).edges.tolist() == [[0, 1]]

    def test_no_duplicates_kept_as_is(self):
        net = Network(node_count=3, edges=[[0, 1], [1, 2]], directed=True)
        assert symmetrize(net).edges.tolist() == [[0, 1], [1, 2]]

    def test_idempotent(self):
        rng = np.random.default_rng(1)
        edges = rng.integers(0, 10, size=(40, 2))
        once = symmetrize(Network(node_count=10, edges=edges, directed=True))
        twice = symmetrize(once)
        assert once.edges.tolist() == twice.edges.tolist()
        assert not once.directed


class TestGiantComponent:
    def test_tie_broken_by_edge_count(self):
        # two 3-node triangles; the first carries one extra (multi-)edge
        edges = [[0, 1], [1, 2], [0, 2], [0, 1], [3, 4], [4, 5], [3, 5]]
        net = Network(node_count=6, edges=edges, directed=False)
        sub, mapping = extract_giant_component(net)
        assert sub.node_count == 3
        assert sub.n_edges == 4
        assert mapping.tolist() == [0, 1, 2, -1, -1, -1]

    def test_output_is_connected(self):
        rng = np.random.default_rng(2)
        for _ in range(10):
            m = int(rng.integers(4, 20))
            edges = rng.integers(0, m, size=(int(rng.integers(3, 25)), 2))
            net = Network(node_count=m, edges=edges, directed=False)
            sub, _ = extract_giant_component(net)
            comp = connected_components(sub)
            assert comp.max() == 0

    def test_ground_truth_refiltered(self):
        edges = [[0, 1], [1, 2], [3, 4]]
        net = Network(node_count=5, edges=edges, directed=False)
        truth = GroundTruth(classes={0: 0, 1: 1, 3: 0}, class_names=["x", "y"])
        sub, mapping = extract_giant_component(net)
        filtered = filter_ground_truth(truth, mapping)
        assert sub.node_count == 3
        assert filtered.classes == {0: 0, 1: 1}


class TestLabels:
    def test_load_labels_dense_class_indices(self, tmp_path):
        net = load_edge_list(write(tmp_path, "e.txt", "a b\nb c\n"), directed=False)
        truth = load_labels(write(tmp_path, "l.txt", "a red\nb blue\nc red\n"), net)
        assert truth.class_names == ["red", "blue"]
        assert truth.classes == {0: 0, 1: 1, 2: 0}
        assert truth.as_array(3).tolist() == [0, 1, 0]

    def test_unknown_node_rejected(self, tmp_path):
        net = load_edge_list(write(tmp_path, "e.txt", "a b\n"), directed=False)
        with pytest.raises(EdgeListError, match="unknown node"):
            load_labels(write(tmp_path, "l.txt", "zz red\n"), net)

    def test_partial_labels_allowed(self, tmp_path):
        net = load_edge_list(write(tmp_path, "e.txt", "a b\nb c\n"), directed=False)
        truth = load_labels(write(tmp_path, "l.txt", "a red\n"), net)
        assert truth.as_array(3).tolist() == [0, -1, -1]
