"""Random instances, link-prediction evaluation and the verification suite."""

from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components, minimum_spanning_tree
from scipy.stats import rankdata

from .factorize import (
    FactorizeParams,
    deepwalk_matrix,
    deepwalk_target,
    factorize,
    restore_embeddings,
    summary_deepwalk_matrix,
)
from .gcn import GcnModel, gcn_check
from .graph import Graph, GraphError
from .kernel import (
    KernelParams,
    kernel_matrix,
    normalized_difference,
    relative_error,
    restoration_matrix,
    restore_kernel,
    summary_kernel,
    graph_kernel,
    verify_lemma_a1,
    verify_lemma_a2,
)
from .summarize import (
    Partition,
    heavy_edge_matching,
    reconstruct,
    reconstruction_matrix,
    summarize,
)

MAX_GRAPH_ATTEMPTS = 16


def random_graph(n: int, p: float, seed: int = 0) -> Graph:
    """Largest connected component of G(n, p), re-indexed to 0..k-1.

    If the component has fewer than two nodes the draw is repeated with the
    next derived seed, up to 16 attempts.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    if not 0 < p <= 1:
        raise ValueError("p must lie in (0, 1]")
    iu, ju = np.triu_indices(n, k=1)
    children = np.random.SeedSequence(seed).spawn(MAX_GRAPH_ATTEMPTS)
    for child in children:
        rng = np.random.default_rng(child)
        keep = rng.random(iu.size) < p
        rows, cols = iu[keep], ju[keep]
        a = sp.coo_matrix(
            (np.ones(2 * rows.size), (np.concatenate([rows, cols]), np.concatenate([cols, rows]))),
            shape=(n, n),
        ).tocsr()
        _, labels = connected_components(a, directed=False)
        largest = np.argmax(np.bincount(labels))
        nodes = np.flatnonzero(labels == largest)
        if nodes.size >= 2:
            return Graph.from_adjacency(a[nodes][:, nodes], labels=nodes)
    raise GraphError(f"no component with >= 2 nodes after {MAX_GRAPH_ATTEMPTS} attempts")


def random_partition(n: int, k: int, seed: int = 0) -> Partition:
    """Seeded surjective assignment of n nodes to k supernodes."""
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}], got {k}")
    rng = np.random.default_rng(seed)
    assign = rng.integers(0, k, size=n)
    assign[rng.permutation(n)[:k]] = np.arange(k)
    return Partition(assign, k)


# -- link prediction ---------------------------------------------------------


@dataclass(frozen=True, eq=False)
class EdgeSplit:
    train: Graph
    positives: np.ndarray
    negatives: np.ndarray


def split_edges(g: Graph, holdout_frac: float, seed: int = 0) -> EdgeSplit:
    """Hold out edges outside a random spanning forest, plus as many non-edges.

    Keeping a spanning forest means no node loses all of its edges and no
    component is split, so the training graph stays valid.
    """
    if not 0 < holdout_frac <= 0.5:
        raise ValueError("holdout_frac must lie in (0, 0.5]")
    rng = np.random.default_rng(seed)
    edges = g.edges()
    m = len(edges)
    n_hold = int(round(holdout_frac * m))
    if n_hold < 1:
        raise ValueError(f"graph has too few edges ({m}) to hold out a fraction {holdout_frac}")
    i, j = edges[:, 0].astype(np.int64), edges[:, 1].astype(np.int64)
    keys = rng.random(m) + 1.0
    forest = minimum_spanning_tree(sp.coo_matrix((keys, (i, j)), shape=(g.n, g.n))).tocoo()
    in_forest = set(zip(np.minimum(forest.row, forest.col).tolist(), np.maximum(forest.row, forest.col).tolist()))
    candidates = np.array([e for e in range(m) if (i[e], j[e]) not in in_forest], dtype=np.int64)
    if candidates.size < n_hold:
        raise ValueError(
            f"only {candidates.size} edges can be removed without isolating nodes, need {n_hold}"
        )
    held = np.sort(rng.choice(candidates, size=n_hold, replace=False))
    mask = np.ones(m, dtype=bool)
    mask[held] = False
    w = edges[mask, 2]
    train = Graph.from_adjacency(
        sp.coo_matrix(
            (np.concatenate([w, w]), (np.concatenate([i[mask], j[mask]]), np.concatenate([j[mask], i[mask]]))),
            shape=(g.n, g.n),
        ),
        labels=g.labels,
    )
    existing = set(zip(i.tolist(), j.tolist()))
    max_pairs = g.n * (g.n - 1) // 2 - m
    if max_pairs < n_hold:
        raise ValueError("graph is too dense to sample enough non-edges")
    negatives = []
    seen = set()
    while len(negatives) < n_hold:
        a, b = rng.integers(0, g.n, size=2).tolist()
        if a == b:
            continue
        a, b = min(a, b), max(a, b)
        if (a, b) in existing or (a, b) in seen:
            continue
        seen.add((a, b))
        negatives.append((a, b))
    return EdgeSplit(train, np.column_stack([i[held], j[held]]), np.array(negatives, dtype=np.int64))


def roc_auc(pos_scores, neg_scores) -> float:
    """Mann-Whitney AUC; a tied positive/negative pair earns half credit."""
    pos = np.asarray(pos_scores, dtype=np.float64)
    neg = np.asarray(neg_scores, dtype=np.float64)
    if pos.size == 0 or neg.size == 0:
        raise ValueError("need at least one positive and one negative score")
    ranks = rankdata(np.concatenate([pos, neg]))
    u = ranks[: pos.size].sum() - pos.size * (pos.size + 1) / 2.0
    return float(u / (pos.size * neg.size))


def score_pairs(e: np.ndarray, pairs: np.ndarray) -> np.ndarray:
    return np.einsum("ij,ij->i", e[pairs[:, 0]], e[pairs[:, 1]])


def link_prediction_auc(g: Graph, e, holdout_frac: float, seed: int = 0) -> float:
    """AUC of dot-product scores on the split produced by ``split_edges(g, holdout_frac, seed)``.

    For an unbiased estimate ``e`` should have been learned on that split's
    training graph.
    """
    values = getattr(e, "values", e)
    if values.shape[0] != g.n:
        raise ValueError(f"embeddings have {values.shape[0]} rows, graph has {g.n} nodes")
    split = split_edges(g, holdout_frac, seed)
    return roc_auc(score_pairs(values, split.positives), score_pairs(values, split.negatives))


# -- verification suite ------------------------------------------------------

DEFAULT_TOLERANCES = {
    "degree_preservation": 1e-12,
    "reconstruction_degree_identity": 1e-12,
    "restoration_scaling_identity": 1e-12,
    "kernel_restoration": 1e-10,
    "kernel_error_bound": 1e-9,
    "deepwalk_prelog_restoration": 1e-10,
    "deepwalk_singleton_exact": 0.0,
    "restored_rows_per_supernode": 0.0,
    "gcn_bound": 1e-9,
    "gcn_orthonormal": 1e-12,
    "gcn_layer_growth": 1e-12,
    "gcn_propagation": 1e-10,
    "roundoff": 1e-12,
}


@dataclass
class VerifyConfig:
    n: int = 200
    edge_prob: float = 0.05
    seeds: list = field(default_factory=lambda: [0, 1, 2, 3, 4])
    c_grid: list = field(default_factory=lambda: [0.0, 0.25, 0.5, 0.75, 1.0])
    tau_grid: list = field(default_factory=lambda: [1, 2, 5])
    n_s: int = 50
    window_grid: list = field(default_factory=lambda: [1, 5])
    negative: float = 1.0
    dim: int = 32
    gcn_layers: list = field(default_factory=lambda: [1, 2, 3])
    gcn_feature_dim: int = 16
    gcn_hidden_dim: int = 16
    partitioner: str = "random"
    bound_constant: str = "corrected"
    include_fixtures: bool = True
    dense_limit: int = 2000
    tolerances: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n < 4:
            raise ValueError("n must be >= 4")
        if not 0 < self.edge_prob <= 1:
            raise ValueError("edge_prob must lie in (0, 1]")
        for name in ("seeds", "c_grid", "tau_grid", "window_grid", "gcn_layers"):
            if not getattr(self, name):
                raise ValueError(f"{name} must be non-empty")
        if self.partitioner not in ("random", "matching", "singleton"):
            raise ValueError(f"unknown partitioner {self.partitioner!r}")
        if self.bound_constant not in ("corrected", "dmin"):
            raise ValueError("bound_constant must be 'corrected' or 'dmin'")
        unknown = set(self.tolerances) - set(DEFAULT_TOLERANCES)
        if unknown:
            raise ValueError(f"unknown tolerance keys {sorted(unknown)}")

    def tol(self, name: str) -> float:
        return float(self.tolerances.get(name, DEFAULT_TOLERANCES[name]))

    @classmethod
    def from_dict(cls, d: dict) -> "VerifyConfig":
        return cls(**d)


@dataclass
class CheckRecord:
    name: str
    instance: str
    measured: float | None
    limit: float | None
    passed: bool
    error: str | None = None

    def to_dict(self) -> dict:
        d = {
            "name": self.name,
            "instance": self.instance,
            "measured": self.measured,
            "limit": self.limit,
            "pass": self.passed,
        }
        if self.error is not None:
            d["error"] = self.error
        return d


@dataclass
class VerifyReport:
    checks: list
    timestamp: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list:
        return [c for c in self.checks if not c.passed]

    def to_dict(self, with_timestamp: bool = True) -> dict:
        d = {"checks": [c.to_dict() for c in self.checks], "pass": self.passed}
        if with_timestamp:
            d["timestamp"] = self.timestamp
        return d

    def to_json(self, with_timestamp: bool = True) -> str:
        return json.dumps(self.to_dict(with_timestamp), indent=2, sort_keys=True)


def _finite(x: float) -> float | None:
    return float(x) if math.isfinite(x) else None


class _Recorder:
    def __init__(self):
        self.records = []

    def upper(self, name, instance, measured, limit):
        """Record a check that passes when measured <= limit."""
        self.records.append(
            CheckRecord(name, instance, _finite(measured), _finite(limit), bool(measured <= limit))
        )

    def failed(self, name, instance, exc):
        self.records.append(CheckRecord(name, instance, None, None, False, f"{type(exc).__name__}: {exc}"))


def fixtures() -> list:
    """(label, graph, partition) triples with hand-computable values."""
    k3 = Graph.from_edges(3, [(0, 1), (1, 2), (2, 0)])
    c4 = Graph.from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0)])
    star = Graph.from_edges(4, [(0, 1), (0, 2), (0, 3)])
    edge = Graph.from_edges(2, [(0, 1)])
    return [
        ("K3/all-in-one", k3, Partition.all_in_one(3)),
        ("C4/P2", c4, Partition(np.array([0, 0, 1, 1]), 2)),
        ("K1,3/all-in-one", star, Partition.all_in_one(4)),
        ("K2/singleton", edge, Partition.singleton(2)),
    ]


def _partition_for(cfg: VerifyConfig, g: Graph, seed: int) -> Partition:
    k = min(cfg.n_s, g.n)
    if cfg.partitioner == "singleton":
        return Partition.singleton(g.n)
    if cfg.partitioner == "matching":
        return heavy_edge_matching(g, k, seed)
    return random_partition(g.n, k, seed)


def _check_instance(cfg: VerifyConfig, rec: _Recorder, label: str, g: Graph, p: Partition,
                    seed: int) -> None:
    limit = cfg.dense_limit
    s = summarize(g, p)
    q = reconstruction_matrix(g, p)
    a_r_op = reconstruct(s, q)
    rec.upper("degree_preservation", label,
              float(np.abs(a_r_op.rowsums() - g.degrees).max()), cfg.tol("degree_preservation"))
    rec.upper("reconstruction_degree_identity", label, verify_lemma_a1(g, p), cfg.tol("reconstruction_degree_identity"))
    for c in cfg.c_grid:
        rec.upper("restoration_scaling_identity", f"{label} c={c}", verify_lemma_a2(g, p, c), cfg.tol("restoration_scaling_identity"))

    a_r = a_r_op.toarray(limit)
    norm_diff = normalized_difference(g, a_r)
    for c in cfg.c_grid:
        r = restoration_matrix(g, p, c)
        for tau in cfg.tau_grid:
            params = KernelParams(c, tau)
            inst = f"{label} c={c} tau={tau}"
            k_r = kernel_matrix(a_r, g.degrees, params, "reconstructed", limit).values
            restored = restore_kernel(summary_kernel(s, params), r).values
            rec.upper("kernel_restoration", inst, relative_error(restored, k_r), cfg.tol("kernel_restoration"))
            actual = np.linalg.norm(graph_kernel(g, params, limit).values - k_r)
            if cfg.bound_constant == "dmin":
                constant = g.d_min ** (-1.0 - 2.0 * c)
            else:
                constant = float(np.max(g.degrees ** (1.0 - 2.0 * c)))
            bound = constant * tau * norm_diff
            floor = cfg.tol("roundoff") * np.linalg.norm(k_r)
            rec.upper("kernel_error_bound", inst, actual, bound * (1.0 + cfg.tol("kernel_error_bound")) + floor)

    r1 = restoration_matrix(g, p, 1.0)
    for window in cfg.window_grid:
        inst = f"{label} T={window}"
        direct = deepwalk_target(a_r, g.degrees, g.volume, window, cfg.negative, limit)
        summ = deepwalk_target(s.graph.adjacency, s.graph.degrees, s.graph.volume, window,
                               cfg.negative, dense_limit=np.inf)
        expanded = np.asarray(r1.matrix @ np.asarray(r1.matrix @ summ).T).T
        rec.upper("deepwalk_prelog_restoration", inst, relative_error(expanded, direct), cfg.tol("deepwalk_prelog_restoration"))

    dim = min(cfg.dim, s.n_supernodes)
    fparams = FactorizeParams(window=max(cfg.window_grid), negative=cfg.negative, dim=dim, seed=seed)
    e_s = factorize(summary_deepwalk_matrix(s, fparams), dim, seed)
    restored_e = restore_embeddings(e_s, r1).values
    spread = 0.0
    for block in p.blocks():
        rows = restored_e[block]
        spread = max(spread, float(np.abs(rows - rows[0]).max()))
    rec.upper("restored_rows_per_supernode", label, spread, cfg.tol("restored_rows_per_supernode"))

    rng = np.random.default_rng(seed)
    x = rng.standard_normal((g.n, cfg.gcn_feature_dim))
    for k in cfg.gcn_layers:
        inst = f"{label} K={k}"
        dims = [cfg.gcn_feature_dim] + [cfg.gcn_hidden_dim] * k
        model = GcnModel.random(dims, seed=seed * 1000 + k)
        chk = gcn_check(g, p, model, x, limit)
        floor = cfg.tol("roundoff") * chk.layer_norms[-1]
        rec.upper("gcn_bound", inst, chk.report.actual_error,
                  chk.report.bound * (1.0 + cfg.tol("gcn_bound")) + floor)
        rec.upper("gcn_orthonormal", inst, chk.orthonormality_error, cfg.tol("gcn_orthonormal"))
        growth = max(
            chk.layer_norms[l + 1] - chk.layer_norms[l] * chk.weight_norms[l]
            for l in range(k)
        )
        scale = max(max(chk.layer_norms), 1e-30)
        rec.upper("gcn_layer_growth", inst, growth / scale, cfg.tol("gcn_layer_growth"))
        rec.upper("gcn_propagation", inst, chk.propagation_identity_error, cfg.tol("gcn_propagation"))


def _check_singleton_deepwalk(cfg: VerifyConfig, rec: _Recorder, label: str, g: Graph) -> None:
    p = Partition.singleton(g.n)
    s = summarize(g, p)
    r1 = restoration_matrix(g, p, 1.0)
    for window in cfg.window_grid:
        params = FactorizeParams(window=window, negative=cfg.negative, dim=1)
        m = deepwalk_matrix(g, params, cfg.dense_limit)
        m_s = summary_deepwalk_matrix(s, params)
        restored = np.asarray(r1.matrix @ np.asarray(r1.matrix @ m_s).T).T
        rec.upper("deepwalk_singleton_exact", f"{label} T={window}",
                  float(np.abs(restored - m).max()), cfg.tol("deepwalk_singleton_exact"))


def _run_guarded(rec: _Recorder, name: str, label: str, fn, *args) -> None:
    try:
        fn(*args)
    except (MemoryError, ValueError, np.linalg.LinAlgError) as exc:
        rec.failed(name, label, exc)


def run_verify_suite(cfg: VerifyConfig | None = None) -> VerifyReport:
    """Evaluate every identity and bound over fixtures and the random instance grid."""
    cfg = cfg or VerifyConfig()
    rec = _Recorder()
    instances = []
    if cfg.include_fixtures:
        for label, g, p in fixtures():
            if cfg.partitioner == "singleton":
                p = Partition.singleton(g.n)
                label = label.split("/")[0] + "/singleton"
            instances.append((label, g, p, 0))
    for seed in cfg.seeds:
        label = f"G({cfg.n},{cfg.edge_prob}) seed={seed}"
        try:
            g = random_graph(cfg.n, cfg.edge_prob, seed)
            p = _partition_for(cfg, g, seed)
        except (ValueError, MemoryError) as exc:
            rec.failed("instance", label, exc)
            continue
        instances.append((f"{label} n_s={p.n_supernodes}", g, p, seed))
    for label, g, p, seed in instances:
        _run_guarded(rec, "instance", label, _check_instance, cfg, rec, label, g, p, seed)
        _run_guarded(rec, "deepwalk_singleton_exact", label, _check_singleton_deepwalk, cfg, rec, label, g)
    rec.records.sort(key=lambda c: (c.name, c.instance))
    return VerifyReport(rec.records, timestamp=time.time())


def config_to_json(cfg: VerifyConfig) -> str:
    return json.dumps(asdict(cfg), indent=2, sort_keys=True)
