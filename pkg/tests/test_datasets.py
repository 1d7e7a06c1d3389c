import pytest

from linkmix.datasets import (
    DATASETS,
    convert_gml,
    convert_linqs,
    dataset_available,
    karate_club,
    load_prepared,
    parse_gml,
    verify_prepared,
)
from linkmix.evaluation import modularity

GML_SAMPLE = """
Creator "someone"
graph
[
  directed 1
  node
  [
    id 0
    label "alpha"
    value 1
  ]
  node
  [
    id 1
    label "beta one"
    value 0
  ]
  node
  [
    id 2
    label "gamma"
    value 1
  ]
  edge
  [
    source 0
    target 1
  ]
  edge
  [
    source 1
    target 2
  ]
  edge
  [
    source 2
    target 2
  ]
]
"""


class TestKarate:
    def test_embedded_statistics(self):
        net, truth = karate_club()
        assert net.node_count == 34
        assert net.n_edges == 78
        assert not net.directed
        assert truth.n_classes == 2
        assert len(truth.classes) == 34
        # the canonical degrees of the two leaders
        degrees = net.degrees()
        assert degrees[33] == 17 and degrees[0] == 16

    def test_matches_networkx_reference(self):
        networkx = pytest.importorskip("networkx")
        g = networkx.karate_club_graph()
        ours = {tuple(e) for e in karate_club()[0].edges.tolist()}
        theirs = {(min(u, v), max(u, v)) for u, v in g.edges()}
        assert ours == theirs

    def test_split_modularity_positive(self):
        net, truth = karate_club()
        q = modularity(net, truth.as_array(34))
        assert 0.3 < q < 0.45


class TestGml:
    def test_parse(self):
        directed, nodes, edges = parse_gml(GML_SAMPLE)
        assert directed
        assert [n["id"] for n in nodes] == [0, 1, 2]
        assert nodes[1]["label"] == "beta one"
        assert edges == [(0, 1), (1, 2), (2, 2)]

    def test_convert_falls_back_to_ids_on_spacey_labels(self, tmp_path):
        convert_gml(GML_SAMPLE, tmp_path)
        edges = (tmp_path / "edges.txt").read_text().splitlines()
        assert edges == ["0 1", "1 2", "2 2"]
        labels = (tmp_path / "labels.txt").read_text().splitlines()
        assert labels == ["0 1", "1 0", "2 1"]

    def test_convert_uses_clean_labels(self, tmp_path):
        text = GML_SAMPLE.replace("beta one", "beta")
        convert_gml(text, tmp_path)
        edges = (tmp_path / "edges.txt").read_text().splitlines()
        assert edges == ["alpha beta", "beta gamma", "gamma gamma"]


class TestLinqs:
    def test_convert(self, tmp_path):
        members = {
            "toy.content": b"p1 0 1 0 classA\np2 1 0 0 classB\np3 0 0 1 classA\n",
            "toy.cites": b"p1 p2\np2 p3\np1 p9\n",
        }
        convert_linqs(members, "toy", tmp_path)
        edges = (tmp_path / "edges.txt").read_text().splitlines()
        assert edges == ["p1 p2", "p2 p3"]  # p9 has no content record
        labels = dict(
            line.split() for line in (tmp_path / "labels.txt").read_text().splitlines()
        )
        assert labels == {"p1": "classA", "p2": "classB", "p3": "classA"}


class TestPrepared:
    def test_load_prepared_applies_preprocessing(self, tmp_path):
        base = tmp_path / "polblogs"
        base.mkdir()
        # raw directed file with a reciprocal pair, a duplicate, and an
        # isolated dyad that the giant-component step must drop
        (base / "edges.txt").write_text(
            "a b\nb a\na b\nb c\nc a\nx y\n", encoding="utf-8"
        )
        (base / "labels.txt").write_text(
            "a 0\nb 0\nc 1\nx 1\ny 1\n", encoding="utf-8"
        )
        net, truth = load_prepared("polblogs", tmp_path)
        assert net.node_count == 3
        assert net.n_edges == 3
        assert not net.directed
        assert set(truth.classes.values()) == {0, 1}

    def test_verify_flags_wrong_counts(self, tmp_path):
        base = tmp_path / "football"
        base.mkdir()
        (base / "edges.txt").write_text("a b\nb c\n", encoding="utf-8")
        (base / "labels.txt").write_text("a 0\nb 0\nc 1\n", encoding="utf-8")
        problems = verify_prepared("football", tmp_path)
        assert any("nodes" in p for p in problems)
        assert any("links" in p for p in problems)

    def test_availability(self, tmp_path):
        assert dataset_available("karate", tmp_path)
        assert not dataset_available("cora", tmp_path)

    def test_reference_table_is_consistent(self):
        for name, spec in DATASETS.items():
            assert spec.expected_nodes > 0 and spec.expected_links > 0
            assert spec.kind in ("embedded", "gml", "linqs")
