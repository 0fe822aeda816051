"""Partitions, summary graphs and configuration-model reconstruction."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, TextIO

import numpy as np
import scipy.sparse as sp

from .graph import Graph, check_dense_limit


class PartitionError(ValueError):
    pass


class Role(str, enum.Enum):
    MEMBERSHIP = "P"
    RECONSTRUCTION = "Q"
    RESTORATION = "R"


@dataclass(frozen=True, eq=False)
class Partition:
    """Total, surjective assignment of nodes to supernodes ``0..n_supernodes-1``."""

    assign: np.ndarray
    n_supernodes: int

    def __post_init__(self):
        assign = np.asarray(self.assign)
        if assign.ndim != 1 or assign.size == 0:
            raise PartitionError("assignment must be a non-empty vector")
        if not np.issubdtype(assign.dtype, np.integer):
            raise PartitionError("assignment must be integer valued")
        if assign.min() < 0 or assign.max() >= self.n_supernodes:
            raise PartitionError("supernode index out of range")
        if np.unique(assign).size != self.n_supernodes:
            raise PartitionError("every supernode must contain at least one node")
        assign = assign.astype(np.int64)
        assign.setflags(write=False)
        object.__setattr__(self, "assign", assign)

    @classmethod
    def from_assignment(cls, assign) -> "Partition":
        """Relabel arbitrary labels to ``0..k-1`` in order of first appearance."""
        assign = np.asarray(assign)
        _, first, inverse = np.unique(assign, return_index=True, return_inverse=True)
        order = np.argsort(np.argsort(first))
        return cls(order[inverse.ravel()], len(first))

    @classmethod
    def singleton(cls, n: int) -> "Partition":
        return cls(np.arange(n), n)

    @classmethod
    def all_in_one(cls, n: int) -> "Partition":
        return cls(np.zeros(n, dtype=np.int64), 1)

    @property
    def n(self) -> int:
        return self.assign.size

    def blocks(self) -> list[np.ndarray]:
        order = np.argsort(self.assign, kind="stable")
        bounds = np.cumsum(np.bincount(self.assign, minlength=self.n_supernodes))[:-1]
        return np.split(order, bounds)

    def block_sizes(self) -> np.ndarray:
        return np.bincount(self.assign, minlength=self.n_supernodes)


def read_partition(stream: TextIO | Iterable[str]) -> Partition:
    """Parse ``node<TAB>supernode`` lines; every node 0..n-1 must appear once."""
    pairs = {}
    for lineno, line in enumerate(stream, start=1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        parts = s.split()
        if len(parts) != 2:
            raise PartitionError(f"line {lineno}: expected 'node supernode'")
        try:
            node, sup = int(parts[0]), int(parts[1])
        except ValueError:
            raise PartitionError(f"line {lineno}: ids must be integers") from None
        if node < 0 or sup < 0:
            raise PartitionError(f"line {lineno}: ids must be non-negative")
        if node in pairs:
            raise PartitionError(f"line {lineno}: node {node} assigned twice")
        pairs[node] = sup
    if not pairs:
        raise PartitionError("partition file is empty")
    n = max(pairs) + 1
    if len(pairs) != n:
        missing = sorted(set(range(n)) - set(pairs))
        raise PartitionError(f"node {missing[0]} has no supernode")
    assign = np.array([pairs[i] for i in range(n)], dtype=np.int64)
    return Partition(assign, int(assign.max()) + 1)


def load_partition(path) -> Partition:
    with open(path, encoding="utf-8") as fh:
        return read_partition(fh)


def write_partition(p: Partition, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for i, s in enumerate(p.assign):
            fh.write(f"{i}\t{int(s)}\n")


@dataclass(frozen=True, eq=False)
class LinearMap:
    """Sparse rectangular map tagged with the role it plays."""

    role: Role
    matrix: sp.csr_matrix

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def __matmul__(self, other):
        return self.matrix @ other

    @property
    def T(self):
        return self.matrix.T


def _node_to_supernode_map(p: Partition, values: np.ndarray, role: Role) -> LinearMap:
    m = sp.csr_matrix(
        (values, (np.arange(p.n), p.assign)), shape=(p.n, p.n_supernodes)
    )
    return LinearMap(role, m)


def membership_matrix(p: Partition) -> LinearMap:
    """n_s x n indicator with P[s, i] = 1 iff node i is in supernode s."""
    m = sp.csr_matrix(
        (np.ones(p.n), (p.assign, np.arange(p.n))), shape=(p.n_supernodes, p.n)
    )
    return LinearMap(Role.MEMBERSHIP, m)


@dataclass(frozen=True, eq=False)
class SummaryGraph:
    graph: Graph
    partition: Partition
    source_n: int

    @property
    def super_degrees(self) -> np.ndarray:
        return self.graph.degrees

    @property
    def n_supernodes(self) -> int:
        return self.graph.n


def _check_partition(g: Graph, p: Partition) -> None:
    if p.n != g.n:
        raise PartitionError(f"partition covers {p.n} nodes, graph has {g.n}")


def summarize(g: Graph, p: Partition) -> SummaryGraph:
    """Collapse each block to a supernode: A_s = P A P^T."""
    _check_partition(g, p)
    pm = membership_matrix(p).matrix
    a_s = pm @ g.adjacency @ pm.T
    return SummaryGraph(Graph.from_adjacency(a_s), p, g.n)


def super_degrees(g: Graph, p: Partition) -> np.ndarray:
    return np.bincount(p.assign, weights=g.degrees, minlength=p.n_supernodes)


def degree_ratios(g: Graph, p: Partition) -> np.ndarray:
    """d_i / d_s for the supernode s holding node i."""
    _check_partition(g, p)
    return g.degrees / super_degrees(g, p)[p.assign]


def reconstruction_matrix(g: Graph, p: Partition) -> LinearMap:
    """Q[i, s] = d_i / d_s for i in block s; columns sum to one."""
    return _node_to_supernode_map(p, degree_ratios(g, p), Role.RECONSTRUCTION)


class ReconstructedAdjacency:
    """A_r = Q A_s Q^T kept in factored form.

    Products cost O(nnz(A_s) + n) per column; ``toarray`` materializes the
    structurally dense n x n matrix and is guarded by the dense limit.
    """

    def __init__(self, q: LinearMap, summary_adjacency: sp.csr_matrix):
        self.q = q.matrix
        self.a_s = summary_adjacency
        n = self.q.shape[0]
        self.shape = (n, n)

    def __matmul__(self, x):
        return self.q @ (self.a_s @ (self.q.T @ x))

    def __rmatmul__(self, x):
        return ((x @ self.q) @ self.a_s) @ self.q.T

    def rowsums(self) -> np.ndarray:
        return np.asarray(self @ np.ones(self.shape[1])).ravel()

    def toarray(self, dense_limit: int | None = None) -> np.ndarray:
        check_dense_limit(self.shape[0], dense_limit)
        left = self.q @ self.a_s.toarray()
        return np.asarray(sp.csr_matrix(self.q) @ left.T).T

    @property
    def T(self):
        return self


def reconstruct(s: SummaryGraph, q: LinearMap) -> ReconstructedAdjacency:
    if q.role is not Role.RECONSTRUCTION:
        raise ValueError(f"expected a reconstruction map, got role {q.role.value}")
    if q.shape != (s.source_n, s.n_supernodes):
        raise ValueError(f"map shape {q.shape} incompatible with summary")
    return ReconstructedAdjacency(q, s.graph.adjacency)


def heavy_edge_matching(g: Graph, target_nodes: int, seed: int = 0) -> Partition:
    """Coarsen by rounds of greedy heavy-edge matching.

    Each round visits the inter-supernode edges of the current summary in
    order of decreasing weight (equal weights in a seeded random order) and
    merges both endpoints when neither has been matched this round. Merging
    stops as soon as the supernode count reaches ``target_nodes``; rounds
    repeat until then or until no inter-supernode edge remains.
    """
    if not 1 <= target_nodes <= g.n:
        raise ValueError(f"target_nodes must be in [1, {g.n}], got {target_nodes}")
    rng = np.random.default_rng(seed)
    assign = np.arange(g.n)
    count = g.n
    adj = g.adjacency
    while count > target_nodes:
        upper = sp.triu(adj, k=1).tocoo()
        if upper.nnz == 0:
            break
        perm = rng.permutation(upper.nnz)
        rows, cols, w = upper.row[perm], upper.col[perm], upper.data[perm]
        order = np.argsort(-w, kind="stable")
        matched = np.zeros(count, dtype=bool)
        merge_into = np.arange(count)
        for e in order:
            i, j = rows[e], cols[e]
            if matched[i] or matched[j]:
                continue
            matched[i] = matched[j] = True
            merge_into[j] = i
            count -= 1
            if count <= target_nodes:
                break
        coarse = Partition.from_assignment(merge_into)
        assign = coarse.assign[assign]
        pm = membership_matrix(coarse).matrix
        adj = sp.csr_matrix(pm @ adj @ pm.T)
    return Partition.from_assignment(assign)
