"""Sparse symmetric graphs with cached degrees and volume."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, TextIO

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import norm as sparse_norm

DEFAULT_DENSE_LIMIT = 2000


class GraphError(ValueError):
    """Raised when a graph violates a structural invariant."""


class EdgeListParseError(ValueError):
    def __init__(self, lineno: int, line: str, reason: str):
        super().__init__(f"line {lineno}: {reason}: {line.rstrip()!r}")
        self.lineno = lineno


class DenseLimitError(MemoryError):
    """Raised when an operation would materialize a dense matrix above the limit."""


def check_dense_limit(n: int, dense_limit: int | None) -> None:
    limit = DEFAULT_DENSE_LIMIT if dense_limit is None else dense_limit
    if n > limit:
        raise DenseLimitError(f"n={n} exceeds dense_limit={limit}")


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected weighted graph stored as a symmetric CSR matrix.

    Self-loops are allowed (summary graphs carry intra-supernode mass on the
    diagonal, augmented graphs carry the added identity) but every node must
    have strictly positive degree.
    """

    adjacency: sp.csr_matrix
    degrees: np.ndarray
    volume: float
    labels: np.ndarray | None = None

    @classmethod
    def from_adjacency(cls, adjacency, labels=None) -> "Graph":
        a = sp.csr_matrix(adjacency, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise GraphError(f"adjacency must be square, got shape {a.shape}")
        if a.shape[0] < 1:
            raise GraphError("graph must have at least one node")
        a.sum_duplicates()
        a.eliminate_zeros()
        a.sort_indices()
        if a.nnz and (a.data < 0).any():
            raise GraphError("edge weights must be non-negative")
        if not np.isfinite(a.data).all():
            raise GraphError("edge weights must be finite")
        if (a != a.T).nnz:
            raise GraphError("adjacency is not symmetric")
        degrees = np.asarray(a.sum(axis=1)).ravel()
        isolated = np.flatnonzero(degrees <= 0)
        if isolated.size:
            raise GraphError(
                f"{isolated.size} isolated node(s), first is {int(isolated[0])}"
            )
        degrees.setflags(write=False)
        if labels is not None:
            labels = np.asarray(labels)
            if labels.shape != (a.shape[0],):
                raise GraphError("labels must have one entry per node")
        return cls(a, degrees, float(degrees.sum()), labels)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple], labels=None) -> "Graph":
        """Build from (i, j) or (i, j, w) tuples; repeated pairs accumulate."""
        rows, cols, vals = [], [], []
        for e in edges:
            i, j = int(e[0]), int(e[1])
            w = float(e[2]) if len(e) > 2 else 1.0
            if i == j:
                raise GraphError(f"self-loop on node {i}")
            rows += [i, j]
            cols += [j, i]
            vals += [w, w]
        a = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
        return cls.from_adjacency(a, labels=labels)

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    @property
    def num_edges(self) -> int:
        """Undirected edge count, self-loops counted once."""
        a = self.adjacency
        loops = int(np.count_nonzero(a.diagonal()))
        return (a.nnz - loops) // 2 + loops

    @property
    def has_self_loops(self) -> bool:
        return bool(np.any(self.adjacency.diagonal() != 0))

    @property
    def d_min(self) -> float:
        return float(self.degrees.min())

    def edges(self) -> np.ndarray:
        """Upper-triangular (i, j, w) rows with i < j."""
        upper = sp.triu(self.adjacency, k=1).tocoo()
        return np.column_stack([upper.row, upper.col, upper.data])

    def toarray(self, dense_limit: int | None = None) -> np.ndarray:
        check_dense_limit(self.n, dense_limit)
        return self.adjacency.toarray()


def load_edge_list(
    stream: TextIO | Iterable[str], weighted: bool = False, reindex: bool = False
) -> Graph:
    """Parse a whitespace-separated edge list.

    Lines starting with ``#`` and blank lines are skipped. Without
    ``weighted`` a third column is ignored and every edge counts 1. Duplicate
    lines (in either orientation) accumulate weight.

    With ``reindex`` the distinct ids are compacted to ``0..k-1`` in
    ascending order and the original ids are kept in ``Graph.labels``;
    otherwise the graph spans ``0..max_id`` and gaps are isolated nodes,
    which is an error.
    """
    src, dst, wts = [], [], []
    for lineno, line in enumerate(stream, start=1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        parts = s.split()
        if len(parts) not in (2, 3):
            raise EdgeListParseError(lineno, line, "expected 2 or 3 columns")
        try:
            i, j = int(parts[0]), int(parts[1])
        except ValueError:
            raise EdgeListParseError(lineno, line, "node ids must be integers") from None
        if i < 0 or j < 0:
            raise EdgeListParseError(lineno, line, "node ids must be non-negative")
        if i == j:
            raise EdgeListParseError(lineno, line, "self-loops are not allowed")
        w = 1.0
        if weighted and len(parts) == 3:
            try:
                w = float(parts[2])
            except ValueError:
                raise EdgeListParseError(lineno, line, "weight must be a real") from None
            if not (w > 0 and np.isfinite(w)):
                raise EdgeListParseError(lineno, line, "weight must be positive")
        src.append(i)
        dst.append(j)
        wts.append(w)
    if not src:
        raise GraphError("edge list is empty")
    src_a, dst_a = np.asarray(src), np.asarray(dst)
    labels = None
    if reindex:
        labels, inverse = np.unique(np.concatenate([src_a, dst_a]), return_inverse=True)
        src_a, dst_a = inverse[: len(src)], inverse[len(src):]
        n = len(labels)
    else:
        n = int(max(src_a.max(), dst_a.max())) + 1
    w_a = np.asarray(wts)
    a = sp.coo_matrix(
        (np.concatenate([w_a, w_a]), (np.concatenate([src_a, dst_a]), np.concatenate([dst_a, src_a]))),
        shape=(n, n),
    ).tocsr()
    return Graph.from_adjacency(a, labels=labels)


def read_edge_list(path, weighted: bool = False, reindex: bool = False) -> Graph:
    with open(path, encoding="utf-8") as fh:
        return load_edge_list(fh, weighted=weighted, reindex=reindex)


def write_edge_list(g: Graph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# src\tdst\tweight\n")
        for i, j, w in g.edges():
            fh.write(f"{int(i)}\t{int(j)}\t{float(w)!r}\n")


def augment(g: Graph) -> Graph:
    """Return the graph with a unit self-loop added to every node."""
    if g.has_self_loops:
        raise GraphError("graph already has self-loops; refusing to augment twice")
    return Graph.from_adjacency(g.adjacency + sp.identity(g.n, format="csr"), labels=g.labels)


def normalized_adjacency(g: Graph) -> sp.csr_matrix:
    """D^{-1/2} A D^{-1/2} as a sparse matrix."""
    s = sp.diags(1.0 / np.sqrt(g.degrees))
    return sp.csr_matrix(s @ g.adjacency @ s)


def frobenius_norm(m) -> float:
    if sp.issparse(m):
        return float(sparse_norm(m, "fro"))
    return float(np.linalg.norm(np.asarray(m), "fro"))
