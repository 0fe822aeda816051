"""Command-line pipeline: summarize, embed, restore, verify, eval."""

from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from .factorize import (
    EmbeddingMatrix,
    FactorizeParams,
    deepwalk_matrix,
    factorize,
    line_matrix,
    read_embeddings,
    restore_embeddings,
    summary_deepwalk_matrix,
    write_embeddings,
)
from .gcn import GcnModel, gcn_forward, gcn_forward_summary, summary_features
from .graph import augment, read_edge_list
from .harness import VerifyConfig, link_prediction_auc, run_verify_suite
from .kernel import restoration_matrix
from .summarize import heavy_edge_matching, load_partition, summarize, write_partition

log = logging.getLogger("graphsumm")


def _load_graph(args):
    return read_edge_list(args.graph, weighted=args.weighted)


def _write_embeddings(e: EmbeddingMatrix, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        write_embeddings(e, fh)


def cmd_summarize(args) -> int:
    g = _load_graph(args)
    p = heavy_edge_matching(g, args.target_nodes, args.seed)
    write_partition(p, args.out)
    log.info("summarized %d nodes into %d supernodes", g.n, p.n_supernodes)
    return 0


def _gcn_features(n: int, width: int, seed: int) -> np.ndarray:
    return np.random.default_rng(seed).standard_normal((n, width))


def cmd_embed(args) -> int:
    g = _load_graph(args)
    params = FactorizeParams(window=args.window, negative=args.neg, dim=args.dim, seed=args.seed,
                             log_mode=args.log_mode)
    if args.method == "gcn":
        model = GcnModel.random([args.features] + [args.dim] * args.layers, seed=args.seed)
        x = _gcn_features(g.n, args.features, args.seed)
        if args.direct:
            e = gcn_forward(g, x, model)
        else:
            p = load_partition(args.partition)
            g_aug = augment(g)
            r = restoration_matrix(g_aug, p, 0.5)
            e = gcn_forward_summary(summarize(g_aug, p), summary_features(x, r), model)
    else:
        if args.method == "line":
            params = FactorizeParams(window=1, negative=args.neg, dim=args.dim, seed=args.seed,
                                     log_mode=args.log_mode)
        if args.direct:
            m = line_matrix(g, params, args.dense_limit) if args.method == "line" else \
                deepwalk_matrix(g, params, args.dense_limit)
            provenance = "direct"
        else:
            s = summarize(g, load_partition(args.partition))
            m = summary_deepwalk_matrix(s, params)
            provenance = "summary"
        e = factorize(m, min(args.dim, m.shape[0]), args.seed, provenance=provenance)
    _write_embeddings(e, args.out)
    log.info("wrote %d x %d embeddings to %s", *e.values.shape, args.out)
    return 0


def cmd_restore(args) -> int:
    g = _load_graph(args)
    p = load_partition(args.partition)
    with open(args.embeddings, encoding="utf-8") as fh:
        e_s = read_embeddings(fh)
    base = augment(g) if args.augment else g
    r = restoration_matrix(base, p, args.c)
    _write_embeddings(restore_embeddings(e_s, r), args.out)
    return 0


def cmd_verify(args) -> int:
    cfg = VerifyConfig()
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            cfg = VerifyConfig.from_dict(json.load(fh))
    report = run_verify_suite(cfg)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(report.to_json())
    failures = report.failures()
    log.info("%d checks, %d failed", len(report.checks), len(failures))
    for rec in failures[:20]:
        log.warning("FAIL %s [%s] measured=%s limit=%s %s", rec.name, rec.instance, rec.measured,
                    rec.limit, rec.error or "")
    return 0 if report.passed else 1


def cmd_eval(args) -> int:
    g = _load_graph(args)
    with open(args.embeddings, encoding="utf-8") as fh:
        e = read_embeddings(fh)
    auc = link_prediction_auc(g, e, args.holdout, args.seed)
    print(json.dumps({"auc": auc}))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="graphsumm", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def graph_arg(sp):
        sp.add_argument("--graph", required=True, help="edge list file")
        sp.add_argument("--weighted", action="store_true", help="read a third weight column")

    sp = sub.add_parser("summarize", help="coarsen a graph by heavy-edge matching")
    graph_arg(sp)
    sp.add_argument("--target-nodes", type=int, required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_summarize)

    sp = sub.add_parser("embed", help="learn embeddings on the graph or its summary")
    graph_arg(sp)
    mode = sp.add_mutually_exclusive_group(required=True)
    mode.add_argument("--partition", help="embed the summary induced by this partition")
    mode.add_argument("--direct", action="store_true", help="embed the original graph")
    sp.add_argument("--method", choices=["deepwalk", "line", "gcn"], default="deepwalk")
    sp.add_argument("--dim", type=int, required=True)
    sp.add_argument("--window", type=int, default=10)
    sp.add_argument("--neg", type=float, default=1.0)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--log-mode", choices=["truncated", "shifted"], default="truncated")
    sp.add_argument("--layers", type=int, default=2, help="GCN layer count")
    sp.add_argument("--features", type=int, default=64, help="GCN random feature width")
    sp.add_argument("--dense-limit", type=int, default=2000)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_embed)

    sp = sub.add_parser("restore", help="map summary embeddings back to original nodes")
    graph_arg(sp)
    sp.add_argument("--embeddings", required=True)
    sp.add_argument("--partition", required=True)
    sp.add_argument("--c", type=float, required=True, help="1 for DeepWalk/LINE, 0.5 for GCN")
    sp.add_argument("--augment", action="store_true",
                    help="use self-loop augmented degrees (GCN summaries)")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_restore)

    sp = sub.add_parser("verify", help="run the numerical verification suite")
    sp.add_argument("--config", help="JSON file with VerifyConfig fields")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("eval", help="link-prediction ROC-AUC of embeddings")
    graph_arg(sp)
    sp.add_argument("--embeddings", required=True)
    sp.add_argument("--holdout", type=float, required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
