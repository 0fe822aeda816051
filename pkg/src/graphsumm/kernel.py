"""Generalized kernel matrices, restoration maps and their error analysis."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np
import scipy.sparse as sp

from .graph import Graph, check_dense_limit, frobenius_norm
from .summarize import (
    LinearMap,
    Partition,
    ReconstructedAdjacency,
    Role,
    SummaryGraph,
    _node_to_supernode_map,
    degree_ratios,
    reconstruct,
    reconstruction_matrix,
    summarize,
)

EPS_FLOOR = 1e-30


@dataclass(frozen=True)
class KernelParams:
    """Exponent ``c`` in [0, 1] and power ``tau`` >= 1."""

    c: float
    tau: int = 1

    def __post_init__(self):
        if not 0.0 <= self.c <= 1.0:
            raise ValueError(f"c must lie in [0, 1], got {self.c}")
        if int(self.tau) != self.tau or self.tau < 1:
            raise ValueError(f"tau must be a positive integer, got {self.tau}")


@dataclass(frozen=True, eq=False)
class KernelMatrix:
    values: np.ndarray
    params: KernelParams
    source: str = "original"


def kernel_matrix(
    adjacency, degrees, params: KernelParams, source: str = "original", dense_limit=None
) -> KernelMatrix:
    """(D^-c A D^(c-1))^tau D^(1-2c) as a dense matrix.

    ``adjacency`` may be anything supporting ``@`` with a dense block: a
    sparse matrix, an ndarray or a :class:`ReconstructedAdjacency`. The
    power is built by tau successive products against a diagonal seed, never
    by forming a dense matrix power.
    """
    d = np.asarray(degrees, dtype=np.float64)
    if d.ndim != 1 or adjacency.shape != (d.size, d.size):
        raise ValueError("adjacency must be square and match the degree vector")
    if (d <= 0).any():
        raise ValueError("degrees must be strictly positive")
    check_dense_limit(d.size, dense_limit)
    c = params.c
    left = d ** (-c)
    right = d ** (c - 1.0)
    x = np.diag(d ** (1.0 - 2.0 * c))
    for _ in range(params.tau):
        x = left[:, None] * np.asarray(adjacency @ (right[:, None] * x))
    return KernelMatrix(x, params, source)


def graph_kernel(g: Graph, params: KernelParams, dense_limit=None) -> KernelMatrix:
    return kernel_matrix(g.adjacency, g.degrees, params, "original", dense_limit)


def summary_kernel(s: SummaryGraph, params: KernelParams) -> KernelMatrix:
    return kernel_matrix(s.graph.adjacency, s.graph.degrees, params, "summary", dense_limit=np.inf)


def restoration_matrix(g: Graph, p: Partition, c: float) -> LinearMap:
    """R[i, s] = (d_i / d_s)^(1-c) for the block s holding node i.

    At c = 1 this is the plain indicator; at c = 1/2 its columns are
    orthonormal.
    """
    if not 0.0 <= c <= 1.0:
        raise ValueError(f"c must lie in [0, 1], got {c}")
    return _node_to_supernode_map(p, degree_ratios(g, p) ** (1.0 - c), Role.RESTORATION)


def restore_kernel(k_s: KernelMatrix, r: LinearMap) -> KernelMatrix:
    """R K_s R^T."""
    if r.role is not Role.RESTORATION:
        raise ValueError(f"expected a restoration map, got role {r.role.value}")
    if r.shape[1] != k_s.values.shape[0]:
        raise ValueError(f"restoration map {r.shape} incompatible with kernel {k_s.values.shape}")
    rk = np.asarray(r.matrix @ k_s.values)
    return KernelMatrix(np.asarray(r.matrix @ rk.T).T, k_s.params, "reconstructed")


def relative_error(actual: np.ndarray, reference: np.ndarray) -> float:
    return frobenius_norm(actual - reference) / max(frobenius_norm(reference), EPS_FLOOR)


def reconstructed_adjacency(g: Graph, p: Partition) -> ReconstructedAdjacency:
    return reconstruct(summarize(g, p), reconstruction_matrix(g, p))


def verify_theorem1(g: Graph, p: Partition, params: KernelParams, dense_limit=None) -> float:
    """Relative Frobenius gap between K(A_r) and R K(G_s) R^T.

    A_r is materialized densely, so the two sides share no intermediate
    beyond the summary adjacency.
    """
    check_dense_limit(g.n, dense_limit)
    s = summarize(g, p)
    a_r = reconstruct(s, reconstruction_matrix(g, p)).toarray(dense_limit)
    k_r = kernel_matrix(a_r, g.degrees, params, "reconstructed", dense_limit)
    restored = restore_kernel(summary_kernel(s, params), restoration_matrix(g, p, params.c))
    return relative_error(restored.values, k_r.values)


def verify_lemma_a1(g: Graph, p: Partition) -> float:
    """Max entrywise error of Q^T D^-1 Q = D_s^-1."""
    q = reconstruction_matrix(g, p).matrix
    lhs = (q.T @ sp.diags(1.0 / g.degrees) @ q).toarray()
    rhs = np.diag(1.0 / summarize(g, p).super_degrees)
    return float(np.abs(lhs - rhs).max())


def verify_lemma_a2(g: Graph, p: Partition, c: float) -> float:
    """Max entrywise error of R D_s^-c = D^-c Q."""
    r = restoration_matrix(g, p, c).matrix
    q = reconstruction_matrix(g, p).matrix
    d_s = summarize(g, p).super_degrees
    lhs = (r @ sp.diags(d_s ** (-c))).toarray()
    rhs = (sp.diags(g.degrees ** (-c)) @ q).toarray()
    return float(np.abs(lhs - rhs).max())


@dataclass
class BoundReport:
    actual_error: float
    bound: float
    constant_used: float
    normalized_diff: float
    d_min: float
    dmin_constant: float | None = None
    dmin_bound: float | None = None

    def holds(self, rel_tol: float = 1e-9) -> bool:
        return self.actual_error <= self.bound * (1.0 + rel_tol)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def normalized_difference(g: Graph, a_r: np.ndarray) -> float:
    """|| D^-1/2 (A - A_r) D^-1/2 ||_F with D the degrees of ``g``."""
    s = 1.0 / np.sqrt(g.degrees)
    diff = g.adjacency.toarray() - a_r
    return frobenius_norm(s[:, None] * diff * s[None, :])


def theorem2_bound(
    g: Graph, p: Partition, params: KernelParams, dense_limit=None, a_r=None
) -> BoundReport:
    """Kernel error from replacing A by A_r, against tau * C * ||normalized diff||.

    The operative constant is max_i d_i^(1-2c), the squared spectral norm of
    D^(1/2-c). The alternative constant d_min^(-1-2c) is reported next to it
    for comparison; the 4-cycle split into two edges already exceeds it.
    """
    check_dense_limit(g.n, dense_limit)
    if a_r is None:
        a_r = reconstructed_adjacency(g, p).toarray(dense_limit)
    k = graph_kernel(g, params, dense_limit).values
    k_r = kernel_matrix(a_r, g.degrees, params, "reconstructed", dense_limit).values
    actual = frobenius_norm(k - k_r)
    diff = normalized_difference(g, a_r)
    constant = float(np.max(g.degrees ** (1.0 - 2.0 * params.c)))
    dmin_constant = g.d_min ** (-1.0 - 2.0 * params.c)
    return BoundReport(
        actual_error=actual,
        bound=constant * params.tau * diff,
        constant_used=constant,
        normalized_diff=diff,
        d_min=g.d_min,
        dmin_constant=dmin_constant,
        dmin_bound=dmin_constant * params.tau * diff,
    )
