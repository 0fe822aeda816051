"""DeepWalk/LINE embeddings by explicit factorization, and their restoration."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import TextIO

import numpy as np

from .graph import Graph, check_dense_limit
from .summarize import LinearMap, Role, SummaryGraph

DENSE_SVD_MAX_DIM = 500


@dataclass(frozen=True)
class FactorizeParams:
    window: int = 10
    negative: float = 1.0
    dim: int = 32
    seed: int = 0
    log_mode: str = "truncated"
    epsilon: float = 1e-8

    def __post_init__(self):
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if not self.negative > 0:
            raise ValueError("negative must be > 0")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.log_mode not in ("truncated", "shifted"):
            raise ValueError(f"unknown log_mode {self.log_mode!r}")


@dataclass(frozen=True, eq=False)
class EmbeddingMatrix:
    values: np.ndarray
    provenance: str = "direct"

    @property
    def shape(self):
        return self.values.shape

    def gram(self) -> np.ndarray:
        return self.values @ self.values.T


def deepwalk_target(adjacency, degrees, volume: float, window: int, negative: float,
                    dense_limit=None) -> np.ndarray:
    """Pre-log matrix (vol / bT) * sum_{t=1..T} (D^-1 A)^t D^-1."""
    d = np.asarray(degrees, dtype=np.float64)
    check_dense_limit(d.size, dense_limit)
    inv = 1.0 / d
    x = np.diag(inv)
    total = np.zeros_like(x)
    for _ in range(window):
        x = inv[:, None] * np.asarray(adjacency @ x)
        total += x
    return (volume / (negative * window)) * total


def log_transform(s: np.ndarray, log_mode: str = "truncated", epsilon: float = 1e-8) -> np.ndarray:
    if log_mode == "truncated":
        return np.log(np.maximum(s, 1.0))
    if log_mode == "shifted":
        return np.log(s + epsilon)
    raise ValueError(f"unknown log_mode {log_mode!r}")


def deepwalk_matrix(g: Graph, params: FactorizeParams, dense_limit=None) -> np.ndarray:
    s = deepwalk_target(g.adjacency, g.degrees, g.volume, params.window, params.negative,
                        dense_limit)
    return log_transform(s, params.log_mode, params.epsilon)


def line_matrix(g: Graph, params: FactorizeParams, dense_limit=None) -> np.ndarray:
    return deepwalk_matrix(g, replace(params, window=1), dense_limit)


def summary_deepwalk_matrix(s: SummaryGraph, params: FactorizeParams) -> np.ndarray:
    # vol(G_s) == vol(G), so the summary's own volume is the right factor
    return deepwalk_matrix(s.graph, params, dense_limit=np.inf)


def _flip_signs(u: np.ndarray, vt: np.ndarray):
    """Make the largest-magnitude entry of each left vector positive."""
    idx = np.argmax(np.abs(u), axis=0)
    signs = np.sign(u[idx, np.arange(u.shape[1])])
    signs[signs == 0] = 1.0
    return u * signs, vt * signs[:, None]


def randomized_svd(m: np.ndarray, k: int, oversample: int = 10, n_iter: int = 7,
                   seed: int = 0):
    """Rank-k truncated SVD by randomized subspace iteration.

    Each power step re-orthonormalizes with QR to keep small singular
    directions from being swamped.
    """
    m = np.asarray(m, dtype=np.float64)
    rows, cols = m.shape
    if not 1 <= k <= min(rows, cols):
        raise ValueError(f"rank {k} out of range for shape {m.shape}")
    width = min(k + oversample, min(rows, cols))
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(m @ rng.standard_normal((cols, width)))
    for _ in range(n_iter):
        z, _ = np.linalg.qr(m.T @ q)
        q, _ = np.linalg.qr(m @ z)
    ub, s, vt = np.linalg.svd(q.T @ m, full_matrices=False)
    u, vt = _flip_signs(q @ ub[:, :k], vt[:k])
    return u, s[:k], vt


def exact_svd(m: np.ndarray, k: int):
    m = np.asarray(m, dtype=np.float64)
    if not 1 <= k <= min(m.shape):
        raise ValueError(f"rank {k} out of range for shape {m.shape}")
    u, s, vt = np.linalg.svd(m, full_matrices=False)
    u, vt = _flip_signs(u[:, :k], vt[:k])
    return u, s[:k], vt


def truncated_svd(m: np.ndarray, k: int, seed: int = 0, method: str = "auto"):
    if method == "auto":
        method = "exact" if min(np.shape(m)) <= DENSE_SVD_MAX_DIM else "randomized"
    if method == "exact":
        return exact_svd(m, k)
    if method == "randomized":
        return randomized_svd(m, k, seed=seed)
    raise ValueError(f"unknown svd method {method!r}")


def factorize(m: np.ndarray, d: int, seed: int = 0, method: str = "auto",
              provenance: str = "direct") -> EmbeddingMatrix:
    """Embeddings U_d sqrt(S_d) from a rank-d truncated SVD of ``m``."""
    u, s, _ = truncated_svd(m, d, seed=seed, method=method)
    return EmbeddingMatrix(u * np.sqrt(s), provenance)


def restore_embeddings(e_s: EmbeddingMatrix, r: LinearMap) -> EmbeddingMatrix:
    """R E_s: each node takes its supernode's row scaled by its R entry."""
    if r.role is not Role.RESTORATION:
        raise ValueError(f"expected a restoration map, got role {r.role.value}")
    if r.shape[1] != e_s.values.shape[0]:
        raise ValueError(f"restoration map {r.shape} incompatible with embeddings {e_s.shape}")
    return EmbeddingMatrix(np.asarray(r.matrix @ e_s.values), "restored")


def embed_direct(g: Graph, params: FactorizeParams, method: str = "deepwalk",
                 dense_limit=None) -> EmbeddingMatrix:
    if method == "line":
        m = line_matrix(g, params, dense_limit)
    else:
        m = deepwalk_matrix(g, params, dense_limit)
    return factorize(m, params.dim, params.seed)


def write_embeddings(e: EmbeddingMatrix, stream: TextIO, labels=None) -> None:
    vals = e.values
    header = "\t".join(["node"] + [f"dim_{k}" for k in range(vals.shape[1])])
    stream.write(header + "\n")
    ids = range(vals.shape[0]) if labels is None else labels
    for node, row in zip(ids, vals):
        stream.write("\t".join([str(node)] + [format(float(x), ".17g") for x in row]) + "\n")


def read_embeddings(stream: TextIO) -> EmbeddingMatrix:
    header = stream.readline().rstrip("\n").split("\t")
    if not header or header[0] != "node":
        raise ValueError("embedding file must start with a 'node' header")
    dim = len(header) - 1
    rows = {}
    for lineno, line in enumerate(stream, start=2):
        if not line.strip():
            continue
        parts = line.rstrip("\n").split("\t")
        if len(parts) != dim + 1:
            raise ValueError(f"line {lineno}: expected {dim + 1} columns")
        rows[int(parts[0])] = [float(x) for x in parts[1:]]
    n = len(rows)
    if sorted(rows) != list(range(n)):
        raise ValueError("node ids must be exactly 0..n-1")
    return EmbeddingMatrix(np.array([rows[i] for i in range(n)], dtype=np.float64).reshape(n, dim))
