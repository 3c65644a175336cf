"""
Network representation: a square adjacency matrix with an edge kind and a directedness flag.
"""
from dataclasses import dataclass
from enum import Enum

import numpy as np

from utils.validators import NetworkFormatError


class EdgeKind(str, Enum):
    BINARY = 'binary'
    COUNT = 'count'


@dataclass(frozen=True, eq=False)
class Network:
    """
    Immutable adjacency matrix y_ij with zero diagonal.

    Binary networks hold entries in {0, 1}; undirected networks are symmetric.
    Construction validates both and freezes the underlying array.
    """
    edges: np.ndarray
    kind: EdgeKind = EdgeKind.BINARY
    directed: bool = False

    def __post_init__(self):
        edges = np.asarray(self.edges)
        if edges.ndim != 2 or edges.shape[0] != edges.shape[1]:
            raise NetworkFormatError(f"adjacency matrix must be square, got shape {edges.shape}")
        if edges.shape[0] < 1:
            raise NetworkFormatError("network must have at least one node")
        if not np.all(np.isfinite(edges)):
            raise NetworkFormatError("adjacency matrix contains non-finite entries")
        if np.any(edges != np.round(edges)):
            raise NetworkFormatError("edge values must be integers")
        if np.any(edges < 0):
            raise NetworkFormatError("edge values must be non-negative")

        edges = edges.astype(np.int64)
        loops = np.flatnonzero(np.diag(edges))
        if loops.size:
            raise NetworkFormatError(f"self-loop on node(s) {loops.tolist()} (diagonal must be zero)")

        kind = EdgeKind(self.kind)
        if kind == EdgeKind.BINARY and np.any(edges > 1):
            raise NetworkFormatError("binary network has entries greater than 1")
        if not self.directed and not np.array_equal(edges, edges.T):
            raise NetworkFormatError("undirected network must have a symmetric adjacency matrix")

        edges.setflags(write=False)
        object.__setattr__(self, 'edges', edges)
        object.__setattr__(self, 'kind', kind)
        object.__setattr__(self, 'directed', bool(self.directed))

    @property
    def n(self):
        return self.edges.shape[0]

    @property
    def n_pairs(self):
        """Number of ordered pairs i != j."""
        return self.n * (self.n - 1)

    def offdiag_mask(self):
        return ~np.eye(self.n, dtype=bool)

    def offdiag_values(self):
        """Off-diagonal entries in row-major order over ordered pairs."""
        return self.edges[self.offdiag_mask()]

    def binarized(self):
        """Binary indicator matrix (entries > 0)."""
        return (self.edges > 0).astype(np.int64)

    def symmetrized_binary(self):
        """Binary undirected adjacency: i~j if either direction has an edge."""
        b = self.binarized()
        return np.maximum(b, b.T)

    def __eq__(self, other):
        if not isinstance(other, Network):
            return NotImplemented
        return (self.kind == other.kind and self.directed == other.directed
                and np.array_equal(self.edges, other.edges))

    def __hash__(self):
        return hash((self.kind, self.directed, self.edges.tobytes()))

    def __repr__(self):
        kind = self.kind.value
        direction = 'directed' if self.directed else 'undirected'
        return f"Network(n={self.n}, kind={kind}, {direction}, edges={int(np.count_nonzero(self.edges))})"
