"""Input validation helpers shared by the estimators and the CLI."""

from __future__ import annotations

import numbers

import numpy as np

from .network import Network


def as_edge_array(X) -> np.ndarray:
    """Coerce array-like input to an (L, 2) int64 edge array."""
    edges = np.asarray(X)
    if edges.ndim != 2 or edges.shape[1] != 2:
        raise ValueError(f"expected an (L, 2) edge array, got shape {edges.shape}")
    if edges.shape[0] == 0:
        raise ValueError("edge array is empty")
    if not np.issubdtype(edges.dtype, np.integer):
        rounded = np.asarray(edges, dtype=np.int64)
        if not np.array_equal(rounded, edges):
            raise ValueError("edge endpoints must be integers")
        edges = rounded
    if edges.min() < 0:
        raise ValueError("edge endpoints must be nonnegative")
    return edges.astype(np.int64)


def as_network(X, directed: bool) -> Network:
    """Accept a Network or an edge array; arrays get a minimal Network."""
    if isinstance(X, Network):
        return X
    edges = as_edge_array(X)
    return Network(node_count=int(edges.max()) + 1, edges=edges, directed=directed)


def check_positive(name: str, value) -> float:
    if not isinstance(value, numbers.Real) or not value > 0:
        raise ValueError(f"{name} must be a positive number, got {value!r}")
    return float(value)
