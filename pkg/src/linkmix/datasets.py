"""Evaluation datasets: embedded Karate club, fetchers for public classics.

``fetch_datasets`` downloads the public networks from their canonical
hosts, converts them to the package's edge-list/label formats under
``<dest>/<name>/``, and verifies the prepared networks against the
reference statistics below.  The Karate club network ships embedded (it is
tiny and public domain), so it needs no download.

Reference statistics of the prepared networks (after the documented
preprocessing: collapse to a simple undirected graph where marked, then
keep the largest connected component):

=========  ======  ======  =======  ====================
name       nodes   links   classes  ground modularity
=========  ======  ======  =======  ====================
karate         34      78        2  --
adjnoun       112     423        2  -0.241
football      115     613       12   0.554
polblogs     1222   16714        2   0.410
citeseer     2120    3678        6   0.517
cora         2485    5067        7   0.630
=========  ======  ======  =======  ====================
"""

from __future__ import annotations

import io
import json
import re
import tarfile
import urllib.request
import zipfile
from dataclasses import dataclass
from pathlib import Path

from .evaluation import modularity
from .network import (
    GroundTruth,
    Network,
    extract_giant_component,
    filter_ground_truth,
    load_edge_list,
    load_labels,
    symmetrize,
)

# Zachary's karate club: 34 members, 78 social ties, and the two factions
# after the split (H = instructor's side, O = administrator's side).
_KARATE_EDGES = (
    "0 1;0 2;0 3;0 4;0 5;0 6;0 7;0 8;0 10;0 11;0 12;0 13;0 17;0 19;0 21;0 31;"
    "1 2;1 3;1 7;1 13;1 17;1 19;1 21;1 30;2 3;2 7;2 8;2 9;2 13;2 27;2 28;2 32;"
    "3 7;3 12;3 13;4 6;4 10;5 6;5 10;5 16;6 16;8 30;8 32;8 33;9 33;13 33;"
    "14 32;14 33;15 32;15 33;18 32;18 33;19 33;20 32;20 33;22 32;22 33;23 25;"
    "23 27;23 29;23 32;23 33;24 25;24 27;24 31;25 31;26 29;26 33;27 33;28 31;"
    "28 33;29 32;29 33;30 32;30 33;31 32;31 33;32 33"
)
_KARATE_FACTIONS = "HHHHHHHHHOHHHHOOHHOHOHOOOOOOOOOOOO"


def karate_club() -> tuple[Network, GroundTruth]:
    """The embedded Karate club network with its documented two-way split."""
    import numpy as np

    edges = np.array(
        [[int(t) for t in pair.split()] for pair in _KARATE_EDGES.split(";")],
        dtype=np.int64,
    )
    net = Network(node_count=34, edges=edges, directed=False,
                  node_names=[str(i) for i in range(34)])
    classes = {i: (0 if f == "H" else 1) for i, f in enumerate(_KARATE_FACTIONS)}
    truth = GroundTruth(classes=classes, class_names=["instructor", "administrator"])
    return net, truth


@dataclass(frozen=True)
class DatasetSpec:
    name: str
    urls: tuple[str, ...]
    kind: str  # "gml" | "linqs" | "embedded"
    directed: bool
    preprocess: tuple[str, ...]
    expected_nodes: int
    expected_links: int
    expected_classes: int
    expected_modularity: float | None


DATASETS: dict[str, DatasetSpec] = {
    "karate": DatasetSpec(
        "karate", (), "embedded", False, (), 34, 78, 2, None,
    ),
    "adjnoun": DatasetSpec(
        "adjnoun",
        (
            "https://websites.umich.edu/~mejn/netdata/adjnoun.zip",
            "http://www-personal.umich.edu/~mejn/netdata/adjnoun.zip",
        ),
        "gml", False, (), 112, 423, 2, -0.241,
    ),
    "football": DatasetSpec(
        "football",
        (
            "https://websites.umich.edu/~mejn/netdata/football.zip",
            "http://www-personal.umich.edu/~mejn/netdata/football.zip",
        ),
        "gml", False, (), 115, 613, 12, 0.554,
    ),
    "polblogs": DatasetSpec(
        "polblogs",
        (
            "https://websites.umich.edu/~mejn/netdata/polblogs.zip",
            "http://www-personal.umich.edu/~mejn/netdata/polblogs.zip",
        ),
        "gml", True, ("symmetrize", "giant_component"), 1222, 16714, 2, 0.410,
    ),
    "citeseer": DatasetSpec(
        "citeseer",
        ("https://linqs-data.soe.ucsc.edu/public/lbc/citeseer.tgz",),
        "linqs", True, ("symmetrize", "giant_component"), 2120, 3678, 6, 0.517,
    ),
    "cora": DatasetSpec(
        "cora",
        ("https://linqs-data.soe.ucsc.edu/public/lbc/cora.tgz",),
        "linqs", True, ("symmetrize", "giant_component"), 2485, 5067, 7, 0.630,
    ),
}


# ---------------------------------------------------------------------------
# GML parsing (the minimal dialect used by the classic network files)
# ---------------------------------------------------------------------------

_GML_TOKEN = re.compile(r'"[^"]*"|\[|\]|[^\s\[\]]+')


def parse_gml(text: str):
    """Parse a flat GML graph into (directed, nodes, edges).

    Supports the classic network files: a single ``graph`` block with
    ``node [ id ... label ... value ... ]`` and
    ``edge [ source ... target ... ]`` entries.
    """
    tokens = _GML_TOKEN.findall(text)
    pos = 0

    def parse_value():
        nonlocal pos
        tok = tokens[pos]
        pos += 1
        if tok == "[":
            block: dict = {}
            while tokens[pos] != "]":
                key = tokens[pos]
                pos += 1
                value = parse_value()
                if key in ("node", "edge"):
                    block.setdefault(key, []).append(value)
                else:
                    block[key] = value
            pos += 1  # consume "]"
            return block
        if tok.startswith('"'):
            return tok[1:-1]
        try:
            return int(tok)
        except ValueError:
            try:
                return float(tok)
            except ValueError:
                return tok

    doc: dict = {}
    while pos < len(tokens):
        key = tokens[pos]
        pos += 1
        doc[key] = parse_value()
    graph = doc.get("graph")
    if graph is None:
        raise ValueError("no graph block found in GML input")
    directed = bool(graph.get("directed", 0))
    nodes = graph.get("node", [])
    edges = [(e["source"], e["target"]) for e in graph.get("edge", [])]
    return directed, nodes, edges


def convert_gml(text: str, dest: Path) -> None:
    """Write ``edges.txt``/``labels.txt`` from a classic GML file.

    Node names prefer the ``label`` attribute when it is whitespace-free
    and unique, else the numeric id.  The ``value`` attribute becomes the
    class name.
    """
    _, nodes, edges = parse_gml(text)
    names = {}
    labels = [str(n.get("label", n["id"])) for n in nodes]
    usable = len(set(labels)) == len(labels) and not any(
        re.search(r"\s", lab) for lab in labels
    )
    for n, lab in zip(nodes, labels):
        names[n["id"]] = lab if usable else str(n["id"])

    dest.mkdir(parents=True, exist_ok=True)
    with open(dest / "edges.txt", "w", encoding="utf-8") as fh:
        for s, t in edges:
            fh.write(f"{names[s]} {names[t]}\n")
    if all("value" in n for n in nodes):
        with open(dest / "labels.txt", "w", encoding="utf-8") as fh:
            for n in nodes:
                fh.write(f"{names[n['id']]} {n['value']}\n")


def convert_linqs(members: dict[str, bytes], name: str, dest: Path) -> None:
    """Write ``edges.txt``/``labels.txt`` from a citation archive.

    ``<name>.content`` lines are ``<id> <features...> <class>``;
    ``<name>.cites`` lines are ``<cited> <citing>``.  Citations touching
    papers without a content record are dropped (their class is unknown).
    """
    content = members[f"{name}.content"].decode("utf-8")
    cites = members[f"{name}.cites"].decode("utf-8")
    classes = {}
    for line in content.splitlines():
        parts = line.split()
        if len(parts) >= 2:
            classes[parts[0]] = parts[-1]
    dest.mkdir(parents=True, exist_ok=True)
    kept = dropped = 0
    with open(dest / "edges.txt", "w", encoding="utf-8") as fh:
        for line in cites.splitlines():
            parts = line.split()
            if len(parts) != 2:
                continue
            a, b = parts
            if a in classes and b in classes:
                fh.write(f"{a} {b}\n")
                kept += 1
            else:
                dropped += 1
    with open(dest / "labels.txt", "w", encoding="utf-8") as fh:
        for node, cls in classes.items():
            fh.write(f"{node} {cls}\n")
    if dropped:
        print(f"  {name}: dropped {dropped} citations to unlabeled papers (kept {kept})")


# ---------------------------------------------------------------------------
# prepared-dataset loading
# ---------------------------------------------------------------------------


def load_prepared(name: str, root) -> tuple[Network, GroundTruth | None]:
    """Load ``<root>/<name>`` and apply the dataset's documented preprocessing."""
    spec = DATASETS[name]
    if spec.kind == "embedded":
        return karate_club()
    base = Path(root) / name
    net = load_edge_list(base / "edges.txt", directed=spec.directed)
    truth = None
    if (base / "labels.txt").exists():
        truth = load_labels(base / "labels.txt", net)
    if "symmetrize" in spec.preprocess:
        net = symmetrize(net)
    if "giant_component" in spec.preprocess:
        net, mapping = extract_giant_component(net)
        if truth is not None:
            truth = filter_ground_truth(truth, mapping)
    return net, truth


def dataset_available(name: str, root) -> bool:
    spec = DATASETS[name]
    if spec.kind == "embedded":
        return True
    return (Path(root) / name / "edges.txt").exists()


def verify_prepared(name: str, root) -> list[str]:
    """Compare a prepared dataset against its reference statistics.

    Returns a list of discrepancy messages (empty when everything checks
    out).  Modularity is compared within +/-0.01.
    """
    spec = DATASETS[name]
    net, truth = load_prepared(name, root)
    problems = []
    if net.node_count != spec.expected_nodes:
        problems.append(f"{name}: {net.node_count} nodes, expected {spec.expected_nodes}")
    if net.n_edges != spec.expected_links:
        problems.append(f"{name}: {net.n_edges} links, expected {spec.expected_links}")
    if truth is not None and truth.n_classes != spec.expected_classes:
        problems.append(
            f"{name}: {truth.n_classes} classes, expected {spec.expected_classes}"
        )
    if spec.expected_modularity is not None and truth is not None:
        part = truth.as_array(net.node_count)
        if (part >= 0).all():
            q = modularity(net, part)
            if abs(q - spec.expected_modularity) > 0.01:
                problems.append(
                    f"{name}: ground modularity {q:.3f}, expected "
                    f"{spec.expected_modularity:.3f}"
                )
    return problems


# ---------------------------------------------------------------------------
# fetching
# ---------------------------------------------------------------------------


def _download(urls) -> bytes:
    last_error = None
    for url in urls:
        try:
            req = urllib.request.Request(url, headers={"User-Agent": "linkmix/0.1"})
            with urllib.request.urlopen(req, timeout=60) as resp:
                return resp.read()
        except Exception as exc:  # noqa: BLE001 - report the last cause
            last_error = exc
    raise RuntimeError(f"could not download any of {urls}: {last_error}")


def fetch_datasets(dest: Path, names=None) -> int:
    """Download, convert, and verify the requested datasets.

    Needs outbound network access; environments without it can drop
    pre-converted ``edges.txt``/``labels.txt`` files under
    ``<dest>/<name>/`` instead and run the verification alone.
    """
    names = list(names) if names else list(DATASETS)
    unknown = [n for n in names if n not in DATASETS]
    if unknown:
        raise ValueError(f"unknown datasets: {unknown}; known: {sorted(DATASETS)}")

    status = 0
    for name in names:
        spec = DATASETS[name]
        base = Path(dest) / name
        if spec.kind == "embedded":
            net, truth = karate_club()
            base.mkdir(parents=True, exist_ok=True)
            with open(base / "edges.txt", "w", encoding="utf-8") as fh:
                for i, j in net.edges:
                    fh.write(f"{i} {j}\n")
            with open(base / "labels.txt", "w", encoding="utf-8") as fh:
                for i in range(net.node_count):
                    fh.write(f"{i} {truth.class_names[truth.classes[i]]}\n")
        elif dataset_available(name, dest):
            print(f"{name}: already prepared, verifying only")
        else:
            try:
                blob = _download(spec.urls)
            except RuntimeError as exc:
                print(f"{name}: FAILED to download ({exc})")
                status = 1
                continue
            if spec.kind == "gml":
                with zipfile.ZipFile(io.BytesIO(blob)) as zf:
                    gml_names = [n for n in zf.namelist() if n.endswith(".gml")]
                    text = zf.read(gml_names[0]).decode("utf-8", errors="replace")
                convert_gml(text, base)
            else:
                members = {}
                with tarfile.open(fileobj=io.BytesIO(blob), mode="r:gz") as tf:
                    for member in tf.getmembers():
                        if member.isfile():
                            members[Path(member.name).name] = tf.extractfile(member).read()
                convert_linqs(members, name, base)

        with open(base / "meta.json", "w", encoding="utf-8") as fh:
            json.dump(
                {"name": name, "directed": spec.directed, "preprocess": list(spec.preprocess)},
                fh, indent=2, sort_keys=True,
            )
            fh.write("\n")

        problems = verify_prepared(name, dest)
        net, truth = load_prepared(name, dest)
        line = f"{name}: {net.node_count} nodes, {net.n_edges} links"
        if truth is not None:
            part = truth.as_array(net.node_count)
            if (part >= 0).all():
                line += f", ground modularity {modularity(net, part):+.3f}"
        print(line + ("" if not problems else "  [DISCREPANCIES]"))
        for p in problems:
            print(f"  ! {p}")
            status = 1
    return status
