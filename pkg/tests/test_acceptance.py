"""Exit criteria. Each test records one PASS/FAIL line, printed in the terminal summary."""

import json
import time

import numpy as np
import pytest

from graphsumm.cli import main
from graphsumm.factorize import (
    FactorizeParams,
    deepwalk_matrix,
    deepwalk_target,
    factorize,
    randomized_svd,
    restore_embeddings,
    summary_deepwalk_matrix,
)
from graphsumm.gcn import GcnModel, gcn_check
from graphsumm.harness import random_graph, random_partition, roc_auc, score_pairs, split_edges
from graphsumm.kernel import (
    KernelParams,
    relative_error,
    restoration_matrix,
    theorem2_bound,
    verify_lemma_a1,
    verify_lemma_a2,
    verify_theorem1,
)
from graphsumm.summarize import (
    Partition,
    heavy_edge_matching,
    reconstruct,
    reconstruction_matrix,
    summarize,
)

C_GRID = (0.0, 0.25, 0.5, 0.75, 1.0)
TAU_GRID = (1, 2, 5)
NS_CYCLE = (10, 50, 150)


@pytest.fixture(scope="module")
def grid():
    """50 (graph, partition) pairs with n=200, p=0.05, n_s cycling through 10/50/150."""
    pairs = []
    for k in range(50):
        g = random_graph(200, 0.05, seed=k)
        pairs.append((g, random_partition(g.n, min(NS_CYCLE[k % 3], g.n), seed=k)))
    return pairs


def test_01_kernel_restoration_exact(grid, acceptance):
    t0 = time.perf_counter()
    worst = max(
        verify_theorem1(g, p, KernelParams(c, tau)) for g, p in grid for c in C_GRID for tau in TAU_GRID
    )
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-10 and elapsed < 30
    acceptance(1, "kernel restoration is exact", ok, f"max rel err {worst:.2e} <= 1e-10, {elapsed:.1f}s < 30s")
    assert worst <= 1e-10
    assert elapsed < 30


def test_02_degree_identities(grid, acceptance):
    a1 = max(verify_lemma_a1(g, p) for g, p in grid)
    a2 = max(verify_lemma_a2(g, p, c) for g, p in grid for c in (0.0, 0.5, 1.0))
    ok = a1 <= 1e-12 and a2 <= 1e-12
    acceptance(2, "reconstruction identities", ok, f"Q^T D^-1 Q {a1:.2e}, R D_s^-c {a2:.2e} <= 1e-12")
    assert ok


def test_03_degree_preservation(grid, acceptance):
    worst = 0.0
    for g, p in grid:
        a_r = reconstruct(summarize(g, p), reconstruction_matrix(g, p))
        worst = max(worst, float(np.abs(a_r.rowsums() - g.degrees).max()))
    acceptance(3, "degree preservation", worst <= 1e-12, f"max |rowsum - d| {worst:.2e} <= 1e-12")
    assert worst <= 1e-12


def test_04_kernel_error_bound(grid, c4, p2, acceptance):
    worst_ratio, violations = 0.0, 0
    for g, p in grid:
        for c in C_GRID:
            for tau in TAU_GRID:
                rep = theorem2_bound(g, p, KernelParams(c, tau))
                violations += not rep.holds(1e-9)
                worst_ratio = max(worst_ratio, rep.actual_error / rep.bound)
    fixture = theorem2_bound(c4, p2, KernelParams(1.0, 1))
    fixture_ok = (
        abs(fixture.actual_error - 0.5) <= 1e-12
        and abs(fixture.bound - 0.5) <= 1e-12
        and abs(fixture.dmin_bound - 0.125) <= 1e-12
    )
    acceptance(
        4,
        "kernel error bound (max-degree constant)",
        fixture_ok and violations == 0,
        f"{violations} violations, max actual/bound {worst_ratio:.3f}; C4/P2 actual {fixture.actual_error:.12g}, "
        f"bound {fixture.bound:.12g}, d_min-constant bound {fixture.dmin_bound:.12g}",
    )
    assert violations == 0
    assert fixture_ok


def test_05_deepwalk_prelog_restoration(grid, acceptance):
    worst = 0.0
    for g, p in grid:
        s = summarize(g, p)
        a_r = reconstruct(s, reconstruction_matrix(g, p)).toarray()
        r = restoration_matrix(g, p, 1.0).toarray()
        for window in (1, 5):
            direct = deepwalk_target(a_r, g.degrees, g.volume, window, 1.0)
            summ = deepwalk_target(s.graph.adjacency, s.super_degrees, s.graph.volume, window, 1.0)
            worst = max(worst, relative_error(r @ summ @ r.T, direct))
    singleton_gap = 0.0
    for g, _ in grid[:10]:
        p = Partition.singleton(g.n)
        s = summarize(g, p)
        r = restoration_matrix(g, p, 1.0).matrix
        for window in (1, 5):
            params = FactorizeParams(window=window, dim=1)
            m_s = summary_deepwalk_matrix(s, params)
            restored = np.asarray(r @ np.asarray(r @ m_s).T).T
            singleton_gap = max(singleton_gap, float(np.abs(restored - deepwalk_matrix(g, params)).max()))
    ok = worst <= 1e-10 and singleton_gap == 0.0
    acceptance(5, "DeepWalk pre-log restoration", ok, f"max rel err {worst:.2e} <= 1e-10, singleton gap {singleton_gap}")
    assert ok


def test_06_gcn_error_bound(acceptance):
    worst_ratio, worst_orth, growth_ok, checks, violations = 0.0, 0.0, True, 0, 0
    for seed in range(20):
        g = random_graph(200, 0.05, seed=1000 + seed)
        p = random_partition(g.n, 50, seed=seed)
        rng = np.random.default_rng(seed)
        x = rng.standard_normal((g.n, 16))
        for layers in (1, 2, 3):
            model = GcnModel.random([16] + [16] * layers, seed=seed * 10 + layers)
            chk = gcn_check(g, p, model, x)
            violations += not chk.report.holds(1e-9)
            worst_ratio = max(worst_ratio, chk.report.actual_error / chk.report.bound)
            worst_orth = max(worst_orth, chk.orthonormality_error)
            growth_ok &= chk.layer_growth_ok()
            checks += 1
    ok = violations == 0 and worst_orth <= 1e-12 and growth_ok
    acceptance(
        6, "GCN embedding error bound", ok,
        f"{checks} runs, {violations} violations, max actual/bound {worst_ratio:.3f}, max |R^T R - I| {worst_orth:.2e}, layer growth ok={growth_ok}",
    )
    assert ok


def test_07_randomized_svd_quality(acceptance):
    worst = 0.0
    for seed in range(5):
        m = np.random.default_rng(seed).standard_normal((200, 200))
        u, s, vt = randomized_svd(m, 32, seed=seed)
        err = np.linalg.norm(m - (u * s) @ vt)
        opt = np.sqrt((np.linalg.svd(m, compute_uv=False)[32:] ** 2).sum())
        worst = max(worst, err / opt)
    acceptance(7, "randomized SVD quality", worst <= 1.10, f"max err/optimal {worst:.4f} <= 1.10")
    assert worst <= 1.10


def test_08_end_to_end_verify(tmp_path, acceptance):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n": 1000, "edge_prob": 0.01, "n_s": 250, "dim": 32}))
    out = tmp_path / "report.json"
    t0 = time.perf_counter()
    code = main(["verify", "--config", str(cfg), "--out", str(out)])
    elapsed = time.perf_counter() - t0
    report = json.loads(out.read_text())
    ok = code == 0 and report["pass"] and elapsed < 60
    acceptance(8, "end-to-end verify (n=1000)", ok,
               f"exit {code}, {len(report['checks'])} checks, {elapsed:.1f}s < 60s")
    assert ok


def test_09_link_prediction_sanity(acceptance):
    g = random_graph(1000, 0.01, seed=0)
    direct, restored = [], []
    for seed in range(5):
        split = split_edges(g, 0.1, seed)
        train = split.train
        params = FactorizeParams(window=10, dim=32, seed=seed)
        e = factorize(deepwalk_matrix(train, params), 32, seed).values
        p = heavy_edge_matching(train, train.n // 2, seed)
        e_s = factorize(summary_deepwalk_matrix(summarize(train, p), params), 32, seed)
        e_r = restore_embeddings(e_s, restoration_matrix(train, p, 1.0)).values
        for store, emb in ((direct, e), (restored, e_r)):
            store.append(roc_auc(score_pairs(emb, split.positives), score_pairs(emb, split.negatives)))
    gap = abs(np.mean(direct) - np.mean(restored))
    acceptance(9, "link-prediction sanity (non-gating)", gap <= 0.10,
               f"direct AUC {np.mean(direct):.3f}, restored AUC {np.mean(restored):.3f}, gap {gap:.3f} <= 0.10")
