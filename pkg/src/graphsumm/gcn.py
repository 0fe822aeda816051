"""GCN forward propagation on original and summary graphs, and the embedding error bound."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .factorize import EmbeddingMatrix
from .graph import Graph, augment, check_dense_limit, frobenius_norm, normalized_adjacency
from .kernel import BoundReport, restoration_matrix
from .summarize import LinearMap, Partition, Role, SummaryGraph, reconstruct, reconstruction_matrix, summarize


@dataclass(frozen=True, eq=False)
class GcnModel:
    weights: list
    dims: list = field(default_factory=list)
    seed: int | None = None

    def __post_init__(self):
        if not self.weights:
            raise ValueError("a model needs at least one layer")
        ws = [np.asarray(w, dtype=np.float64) for w in self.weights]
        for k in range(1, len(ws)):
            if ws[k].shape[0] != ws[k - 1].shape[1]:
                raise ValueError(
                    f"layer {k} expects {ws[k].shape[0]} inputs, previous layer gives {ws[k - 1].shape[1]}"
                )
        object.__setattr__(self, "weights", ws)
        object.__setattr__(self, "dims", [ws[0].shape[0]] + [w.shape[1] for w in ws])

    @property
    def num_layers(self) -> int:
        return len(self.weights)

    @classmethod
    def random(cls, dims, seed: int = 0) -> "GcnModel":
        """Gaussian weights with std 1/sqrt(fan_in)."""
        if len(dims) < 2:
            raise ValueError("dims must list input size and at least one output size")
        rng = np.random.default_rng(seed)
        ws = [rng.normal(0.0, 1.0 / np.sqrt(a), size=(a, b)) for a, b in zip(dims[:-1], dims[1:])]
        return cls(ws, seed=seed)

    def to_json(self) -> str:
        if self.seed is None:
            raise ValueError("only seeded models can be serialized")
        return json.dumps({"dims": self.dims, "seed": self.seed})

    @classmethod
    def from_json(cls, text: str) -> "GcnModel":
        cfg = json.loads(text)
        return cls.random(cfg["dims"], int(cfg.get("seed", 0)))


def relu(x):
    return np.maximum(x, 0.0)


def propagate(prop, x: np.ndarray, model: GcnModel, return_layers: bool = False):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] != prop.shape[0]:
        raise ValueError(f"features of shape {x.shape} do not match {prop.shape[0]} nodes")
    if x.shape[1] != model.dims[0]:
        raise ValueError(f"features have width {x.shape[1]}, model expects {model.dims[0]}")
    layers = [x]
    for w in model.weights:
        x = relu(np.asarray(prop @ (x @ w)))
        layers.append(x)
    return layers if return_layers else x


def gcn_forward(g: Graph, x, model: GcnModel, return_layers: bool = False):
    """E^(k+1) = relu(D~^-1/2 A~ D~^-1/2 E^(k) W^(k)) with A~ = A + I."""
    x = x.values if isinstance(x, EmbeddingMatrix) else x
    out = propagate(normalized_adjacency(augment(g)), x, model, return_layers)
    return out if return_layers else EmbeddingMatrix(out, "direct")


def augmented_summary(g: Graph, p: Partition) -> SummaryGraph:
    """Summary of the augmented graph: A~_s = P (A + I) P^T."""
    return summarize(augment(g), p)


def augmented_restoration(g: Graph, p: Partition) -> LinearMap:
    return restoration_matrix(augment(g), p, 0.5)


def gcn_forward_summary(s: SummaryGraph, x_s, model: GcnModel, return_layers: bool = False):
    """Same recursion on an already-augmented summary; no extra self-loops are added."""
    x_s = x_s.values if isinstance(x_s, EmbeddingMatrix) else x_s
    out = propagate(normalized_adjacency(s.graph), x_s, model, return_layers)
    return out if return_layers else EmbeddingMatrix(out, "summary")


def summary_features(x, r: LinearMap) -> EmbeddingMatrix:
    """X_s = R^T X."""
    x = x.values if isinstance(x, EmbeddingMatrix) else np.asarray(x, dtype=np.float64)
    if r.role is not Role.RESTORATION:
        raise ValueError(f"expected a restoration map, got role {r.role.value}")
    if r.shape[0] != x.shape[0]:
        raise ValueError(f"restoration map {r.shape} incompatible with features {x.shape}")
    return EmbeddingMatrix(np.asarray(r.matrix.T @ x), "summary")


def gcn_restore(e_s, r: LinearMap) -> EmbeddingMatrix:
    """R E_s, the least-squares solution of R^T E = E_s when R^T R = I."""
    e_s = e_s.values if isinstance(e_s, EmbeddingMatrix) else e_s
    if r.role is not Role.RESTORATION:
        raise ValueError(f"expected a restoration map, got role {r.role.value}")
    if r.shape[1] != e_s.shape[0]:
        raise ValueError(f"restoration map {r.shape} incompatible with embeddings {e_s.shape}")
    return EmbeddingMatrix(np.asarray(r.matrix @ e_s), "restored")


def orthonormality_error(r: LinearMap) -> float:
    rtr = (r.matrix.T @ r.matrix).toarray()
    return float(np.abs(rtr - np.eye(rtr.shape[0])).max())


@dataclass
class GcnCheck:
    report: BoundReport
    layer_norms: list
    weight_norms: list
    orthonormality_error: float
    propagation_identity_error: float

    def layer_growth_ok(self, rel_tol: float = 1e-12) -> bool:
        return all(
            self.layer_norms[k + 1] <= self.layer_norms[k] * self.weight_norms[k] * (1 + rel_tol)
            for k in range(len(self.weight_norms))
        )


def gcn_check(g: Graph, p: Partition, model: GcnModel, x, dense_limit=None) -> GcnCheck:
    """Run both GCNs with shared weights and collect the bound and its side conditions."""
    check_dense_limit(g.n, dense_limit)
    x = x.values if isinstance(x, EmbeddingMatrix) else np.asarray(x, dtype=np.float64)
    g_aug = augment(g)
    s_aug = summarize(g_aug, p)
    r = restoration_matrix(g_aug, p, 0.5)

    layers = gcn_forward(g, x, model, return_layers=True)
    e_s = gcn_forward_summary(s_aug, summary_features(x, r), model)
    restored = gcn_restore(e_s, r).values
    actual = frobenius_norm(layers[-1] - restored)

    a_r = reconstruct(s_aug, reconstruction_matrix(g_aug, p)).toarray(dense_limit)
    inv_sqrt = 1.0 / np.sqrt(g_aug.degrees)
    n_full = inv_sqrt[:, None] * g_aug.adjacency.toarray() * inv_sqrt[None, :]
    n_rec = inv_sqrt[:, None] * a_r * inv_sqrt[None, :]
    diff = frobenius_norm(n_full - n_rec)
    weight_norms = [frobenius_norm(w) for w in model.weights]
    x_norm = frobenius_norm(x)
    constant = float(np.prod(weight_norms)) * x_norm

    n_s = normalized_adjacency(s_aug.graph).toarray()
    rn = np.asarray(r.matrix @ n_s)
    via_summary = np.asarray(r.matrix @ rn.T).T
    prop_err = frobenius_norm(n_rec - via_summary) / max(frobenius_norm(n_rec), 1e-30)

    report = BoundReport(
        actual_error=actual,
        bound=diff * constant,
        constant_used=constant,
        normalized_diff=diff,
        d_min=g_aug.d_min,
    )
    return GcnCheck(
        report=report,
        layer_norms=[frobenius_norm(e) for e in layers],
        weight_norms=weight_norms,
        orthonormality_error=orthonormality_error(r),
        propagation_identity_error=prop_err,
    )


def gcn_bound(g: Graph, p: Partition, model: GcnModel, x, dense_limit=None) -> BoundReport:
    return gcn_check(g, p, model, x, dense_limit).report
