import json

import numpy as np
import pytest

from graphsumm.cli import main
from graphsumm.factorize import read_embeddings
from graphsumm.graph import write_edge_list
from graphsumm.harness import random_graph
from graphsumm.summarize import Partition, load_partition, write_partition


@pytest.fixture
def graph_file(tmp_path):
    g = random_graph(80, 0.08, seed=0)
    path = tmp_path / "g.tsv"
    write_edge_list(g, path)
    return g, path


def read(path):
    with open(path) as fh:
        return read_embeddings(fh)


def gram_gap(a, b):
    ga, gb = a @ a.T, b @ b.T
    return np.linalg.norm(ga - gb) / np.linalg.norm(gb)


def test_summarize_writes_partition(graph_file, tmp_path):
    g, path = graph_file
    out = tmp_path / "p.tsv"
    assert main(["summarize", "--graph", str(path), "--target-nodes", "20", "--seed", "1", "--out", str(out)]) == 0
    p = load_partition(out)
    assert p.n == g.n and p.n_supernodes <= 20


@pytest.mark.parametrize("method", ["deepwalk", "line", "gcn"])
def test_singleton_pipeline_matches_direct(graph_file, tmp_path, method):
    g, path = graph_file
    part = tmp_path / "singleton.tsv"
    write_partition(Partition.singleton(g.n), part)
    direct, summ, restored = tmp_path / "d.tsv", tmp_path / "s.tsv", tmp_path / "r.tsv"
    common = ["--graph", str(path), "--method", method, "--dim", "8", "--window", "3", "--seed", "2"]
    assert main(["embed", *common, "--direct", "--out", str(direct)]) == 0
    assert main(["embed", *common, "--partition", str(part), "--out", str(summ)]) == 0
    c = "0.5" if method == "gcn" else "1"
    extra = ["--augment"] if method == "gcn" else []
    assert main(["restore", "--graph", str(path), "--embeddings", str(summ), "--partition", str(part),
                 "--c", c, *extra, "--out", str(restored)]) == 0
    assert gram_gap(read(restored).values, read(direct).values) <= 1e-8


def test_summary_embed_restore_shapes(graph_file, tmp_path):
    g, path = graph_file
    part, summ, restored = tmp_path / "p.tsv", tmp_path / "s.tsv", tmp_path / "r.tsv"
    main(["summarize", "--graph", str(path), "--target-nodes", "30", "--out", str(part)])
    n_s = load_partition(part).n_supernodes
    main(["embed", "--graph", str(path), "--partition", str(part), "--dim", "8", "--out", str(summ)])
    assert read(summ).shape == (n_s, 8)
    main(["restore", "--graph", str(path), "--embeddings", str(summ), "--partition", str(part),
          "--c", "1", "--out", str(restored)])
    e = read(restored).values
    assert e.shape == (g.n, 8)
    assign = load_partition(part).assign
    for s in range(n_s):
        rows = e[assign == s]
        assert (rows == rows[0]).all()


def test_verify_exit_codes(tmp_path):
    ok_cfg = tmp_path / "ok.json"
    ok_cfg.write_text(json.dumps({"n": 40, "edge_prob": 0.2, "n_s": 10, "seeds": [0]}))
    out = tmp_path / "report.json"
    assert main(["verify", "--config", str(ok_cfg), "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert report["pass"] is True and report["checks"]

    bad_cfg = tmp_path / "bad.json"
    bad_cfg.write_text(json.dumps({"n": 40, "edge_prob": 0.2, "n_s": 10, "seeds": [0],
                                   "bound_constant": "dmin"}))
    assert main(["verify", "--config", str(bad_cfg), "--out", str(out)]) == 1
    assert json.loads(out.read_text())["pass"] is False


def test_eval_prints_auc(graph_file, tmp_path, capsys):
    g, path = graph_file
    emb = tmp_path / "e.tsv"
    main(["embed", "--graph", str(path), "--direct", "--dim", "8", "--out", str(emb)])
    assert main(["eval", "--graph", str(path), "--embeddings", str(emb), "--holdout", "0.2", "--seed", "1"]) == 0
    auc = json.loads(capsys.readouterr().out)["auc"]
    assert 0.0 <= auc <= 1.0


def test_embed_requires_mode(graph_file):
    _, path = graph_file
    with pytest.raises(SystemExit):
        main(["embed", "--graph", str(path), "--dim", "4", "--out", "x"])
