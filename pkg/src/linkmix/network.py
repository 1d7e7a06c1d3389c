"""Edge-list networks, ground-truth labels, and graph preprocessing.

Networks are stored as dense-integer edge lists.  Original node identifiers
(arbitrary strings) are mapped to indices ``0..node_count-1`` in first
appearance order and kept around so results can be reported against the
input identifiers.
"""

from __future__ import annotations

import collections
from dataclasses import dataclass
import numpy as np

COMMENT_PREFIXES = ("#", "%")


class EdgeListError(ValueError):
    """Malformed edge-list or label file."""


class EmptyNetworkError(ValueError):
    """File contained no edges."""


@dataclass(frozen=True)
class Network:
    """An immutable node-indexed multigraph.

    Parameters
    ----------
    node_count : int
        Number of vertices; all endpoint indices are below this.
    edges : ndarray of shape (L, 2)
        One row per link.  Repeated rows encode multi-edges, rows with equal
        entries encode self-loops.  For undirected networks each edge is
        stored once with ``i <= j``.
    directed : bool
        Whether link orientation is meaningful.
    node_names : list of str, optional
        Original identifier for each node index.
    """

    node_count: int
    edges: np.ndarray
    directed: bool
    node_names: list[str] | None = None

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=np.int64)
        if edges.ndim != 2 or edges.shape[1] != 2:
            raise ValueError(f"edges must have shape (L, 2), got {edges.shape}")
        if self.node_count <= 0:
            raise ValueError("node_count must be positive")
        if edges.size and (edges.min() < 0 or edges.max() >= self.node_count):
            raise ValueError("edge endpoint out of range")
        if not self.directed and edges.size:
            # canonical orientation: smaller index first
            lo = edges.min(axis=1)
            hi = edges.max(axis=1)
            edges = np.column_stack([lo, hi])
        if self.node_names is not None and len(self.node_names) != self.node_count:
            raise ValueError("node_names length must equal node_count")
        edges.setflags(write=False)
        object.__setattr__(self, "edges", edges)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def degrees(self) -> np.ndarray:
        """Endpoint counts per node; a self-loop contributes 2."""
        return np.bincount(self.edges.ravel(), minlength=self.node_count)

    def name_of(self, index: int) -> str:
        if self.node_names is None:
            return str(index)
        return self.node_names[index]


@dataclass(frozen=True)
class GroundTruth:
    """Known node classes used for evaluation.

    ``classes`` maps node index -> class index; class indices are contiguous
    integers starting at 0, in first appearance order of ``class_names``.
    """

    classes: dict[int, int]
    class_names: list[str]

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    def as_array(self, node_count: int) -> np.ndarray:
        """Dense class array with -1 for unlabeled nodes."""
        out = np.full(node_count, -1, dtype=np.int64)
        for i, c in self.classes.items():
            out[i] = c
        return out


def _data_lines(path):
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith(COMMENT_PREFIXES):
                continue
            yield lineno, line


def load_edge_list(path, directed: bool) -> Network:
    """Parse a whitespace-separated edge list.

    Each data line is ``<src> <dst> [multiplicity]``; node tokens are
    arbitrary strings, mapped to dense indices in first appearance order.  A
    line with multiplicity ``w`` produces ``w`` copies of the edge.
    Self-loops are kept.  Lines starting with ``#`` or ``%`` are comments.
    """
    index: dict[str, int] = {}
    names: list[str] = []
    src: list[int] = []
    dst: list[int] = []

    def node_id(token: str) -> int:
        i = index.get(token)
        if i is None:
            i = len(names)
            index[token] = i
            names.append(token)
        return i

    for lineno, line in _data_lines(path):
        parts = line.split()
        if len(parts) not in (2, 3):
            raise EdgeListError(
                f"{path}:{lineno}: expected 'src dst [multiplicity]', got {line!r}"
            )
        a, b = node_id(parts[0]), node_id(parts[1])
        mult = 1
        if len(parts) == 3:
            try:
                mult = int(parts[2])
            except ValueError:
                raise EdgeListError(
                    f"{path}:{lineno}: multiplicity {parts[2]!r} is not an integer"
                ) from None
            if mult <= 0:
                raise EdgeListError(
                    f"{path}:{lineno}: multiplicity must be positive, got {mult}"
                )
        src.extend([a] * mult)
        dst.extend([b] * mult)

    if not src:
        raise EmptyNetworkError(f"{path}: no edges found")
    edges = np.column_stack([np.array(src, dtype=np.int64), np.array(dst, dtype=np.int64)])
    return Network(node_count=len(names), edges=edges, directed=directed, node_names=names)


def write_edge_list(net: Network, path) -> None:
    """Write one ``<src> <dst>`` line per link, using original names."""
    with open(path, "w", encoding="utf-8") as fh:
        for i, j in net.edges:
            fh.write(f"{net.name_of(int(i))} {net.name_of(int(j))}\n")


def load_labels(path, net: Network) -> GroundTruth:
    """Parse ``<node-id> <class-name>`` lines against an existing network.

    Class names are mapped to dense class indices in first appearance order.
    Node ids not present in the network raise; missing labels are allowed
    (nodes may stay unlabeled).
    """
    if net.node_names is not None:
        lookup = {name: i for i, name in enumerate(net.node_names)}
    else:
        lookup = {str(i): i for i in range(net.node_count)}
    class_index: dict[str, int] = {}
    class_names: list[str] = []
    classes: dict[int, int] = {}
    for lineno, line in _data_lines(path):
        parts = line.split()
        if len(parts) != 2:
            raise EdgeListError(
                f"{path}:{lineno}: expected '<node-id> <class-name>', got {line!r}"
            )
        node_token, cls_token = parts
        if node_token not in lookup:
            raise EdgeListError(
                f"{path}:{lineno}: unknown node id {node_token!r}"
            )
        c = class_index.get(cls_token)
        if c is None:
            c = len(class_names)
            class_index[cls_token] = c
            class_names.append(cls_token)
        classes[lookup[node_token]] = c
    return GroundTruth(classes=classes, class_names=class_names)


def symmetrize(net: Network) -> Network:
    """Collapse a directed network into a simple undirected one.

    Duplicate ``(i, j)``/``(j, i)`` pairs collapse to a single undirected
    edge; repeated self-loops collapse too.  Idempotent on undirected input.
    """
    edges = net.edges
    lo = edges.min(axis=1)
    hi = edges.max(axis=1)
    unique = np.unique(np.column_stack([lo, hi]), axis=0)
    return Network(
        node_count=net.node_count,
        edges=unique,
        directed=False,
        node_names=net.node_names,
    )


def connected_components(net: Network) -> np.ndarray:
    """Component id per node under undirected connectivity (BFS)."""
    comp = np.full(net.node_count, -1, dtype=np.int64)
    adj = [[] for _ in range(net.node_count)]
    for i, j in net.edges:
        adj[i].append(int(j))
        adj[j].append(int(i))
    current = 0
    for start in range(net.node_count):
        if comp[start] != -1:
            continue
        comp[start] = current
        queue = collections.deque([start])
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                if comp[v] == -1:
                    comp[v] = current
                    queue.append(v)
        current += 1
    return comp


def extract_giant_component(net: Network) -> tuple[Network, np.ndarray]:
    """Induced subgraph on the largest connected component.

    Connectivity is undirected regardless of ``net.directed``.  The largest
    component is by node count, ties broken by link count.  Returns the
    reindexed subnetwork and an old->new index map (-1 for dropped nodes),
    which callers use to re-filter ground-truth labels.
    """
    comp = connected_components(net)
    n_comp = int(comp.max()) + 1
    node_counts = np.bincount(comp, minlength=n_comp)
    edge_counts = np.bincount(comp[net.edges[:, 0]], minlength=n_comp)
    # lexicographic: node count first, link count as tie-break
    best = max(range(n_comp), key=lambda c: (node_counts[c], edge_counts[c]))

    keep = comp == best
    mapping = np.full(net.node_count, -1, dtype=np.int64)
    mapping[keep] = np.arange(int(keep.sum()))
    mask = keep[net.edges[:, 0]]
    sub_edges = mapping[net.edges[mask]]
    names = None
    if net.node_names is not None:
        names = [net.node_names[i] for i in np.flatnonzero(keep)]
    sub = Network(
        node_count=int(keep.sum()),
        edges=sub_edges,
        directed=net.directed,
        node_names=names,
    )
    return sub, mapping


def filter_ground_truth(gt: GroundTruth, mapping: np.ndarray) -> GroundTruth:
    """Re-index labels through an old->new node map, dropping removed nodes."""
    classes = {
        int(mapping[i]): c for i, c in gt.classes.items() if mapping[i] >= 0
    }
    return GroundTruth(classes=classes, class_names=list(gt.class_names))
