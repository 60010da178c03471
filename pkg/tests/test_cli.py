import csv
import json

import numpy as np
import pytest

from tightsample import cli, ingest, sbm
from tightsample.interactions import Scheme, calibrate_records, read_weight_csv


def run_cli(*argv):
    return cli.main([str(a) for a in argv])


@pytest.fixture
def net_dir(tmp_path):
    out = tmp_path / "net"
    assert run_cli("gen-sbm", "--sizes", "100x4", "--k-intra", "8",
                   "--r", "4", "--seed", "7", "--out", out) == 0
    return out


def seed_args(net_dir):
    labels = {}
    with open(net_dir / "labels.csv") as fh:
        for row in csv.DictReader(fh):
            labels.setdefault(int(row["block"]), row["node"])
    return ",".join(labels[b] for b in sorted(labels))


def test_gen_sbm_outputs(net_dir):
    edges = sbm.read_edges_tsv(net_dir / "edges.tsv")
    assert len(edges) > 1000
    cfg, seed_cfg = sbm.read_config(net_dir / "sbm.cfg")
    assert cfg.block_sizes == (100,) * 4
    with open(net_dir / "labels.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 400


def test_gen_sbm_from_shipped_demo_config(tmp_path):
    out = tmp_path / "demo"
    assert run_cli("gen-sbm", "--config", cli.demo_config_path(),
                   "--out", out) == 0
    cfg, seed_cfg = sbm.read_config(out / "sbm.cfg")
    assert cfg.block_sizes == (200,) * 8
    assert seed_cfg.per_block == (1,) * 8


def test_sample_shipped_demo_exhausts_at_node_count(tmp_path):
    net = tmp_path / "demo"
    run_cli("gen-sbm", "--config", cli.demo_config_path(), "--out", net)
    labels = {}
    with open(net / "labels.csv") as fh:
        for row in csv.DictReader(fh):
            labels.setdefault(int(row["block"]), row["node"])
    seeds = ",".join(labels[b] for b in sorted(labels))
    out = tmp_path / "run"
    assert run_cli("sample", "--undirected", net / "edges.tsv",
                   "--seeds", seeds, "--strategy", "MAS",
                   "--budget", "5000", "--seed", "1", "--out", out) == 0
    rows = list(csv.DictReader(open(out / "trace.csv")))
    assert len(rows) <= 1600 - 8  # can never exceed nodes minus seeds


def test_sample_run_and_trace_budget(net_dir, tmp_path):
    out = tmp_path / "run"
    assert run_cli("sample", "--undirected", net_dir / "edges.tsv",
                   "--seeds", seed_args(net_dir), "--strategy", "MAS",
                   "--budget", "50", "--seed", "3", "--out", out) == 0
    rows = list(csv.DictReader(open(out / "trace.csv")))
    assert len(rows) == 50
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["strategy"] == "MAS"
    assert manifest["rng_seed"] == 3
    log = list(csv.DictReader(open(out / "access_log.csv")))
    assert len(log) == 4 + 50  # seeds + selections


def test_sample_reproducible_from_manifest(net_dir, tmp_path):
    out1, out2 = tmp_path / "r1", tmp_path / "r2"
    run_cli("sample", "--undirected", net_dir / "edges.tsv",
            "--seeds", seed_args(net_dir), "--strategy", "RS_DW",
            "--budget", "80", "--seed", "11", "--out", out1)
    assert run_cli("sample", "--from-manifest", out1 / "manifest.json",
                   "--out", out2) == 0
    assert (out1 / "trace.csv").read_bytes() == (out2 / "trace.csv").read_bytes()
    assert (out1 / "discovered.tsv").read_bytes() == \
        (out2 / "discovered.tsv").read_bytes()


def test_sample_demo_budget_cap(net_dir, tmp_path):
    # budget beyond the reachable frontier: trace stops early
    out = tmp_path / "cap"
    assert run_cli("sample", "--undirected", net_dir / "edges.tsv",
                   "--seeds", seed_args(net_dir), "--strategy", "MAS",
                   "--budget", "1000", "--seed", "1", "--out", out) == 0
    rows = list(csv.DictReader(open(out / "trace.csv")))
    assert len(rows) <= 400 - 4


def test_sample_config_errors_exit_2(net_dir, tmp_path):
    assert run_cli("sample", "--undirected", net_dir / "edges.tsv",
                   "--seeds", "0", "--strategy", "DFS",
                   "--budget", "5", "--out", tmp_path / "x") == 2
    assert run_cli("sample", "--undirected", net_dir / "edges.tsv",
                   "--seeds", "0", "--strategy", "MAS",
                   "--out", tmp_path / "y") == 2


def test_sample_missing_file_exits_3(tmp_path):
    assert run_cli("sample", "--undirected", tmp_path / "missing.tsv",
                   "--seeds", "0", "--strategy", "MAS", "--budget", "5",
                   "--out", tmp_path / "z") == 3


def test_metrics_two_runs_min_common_comparison(net_dir, tmp_path):
    seeds = seed_args(net_dir)
    for strat, steps in (("MAS", 60), ("RS_DU", 80)):
        run_cli("sample", "--undirected", net_dir / "edges.tsv",
                "--seeds", seeds, "--strategy", strat, "--budget", steps,
                "--seed", "5", "--out", tmp_path / strat)
    out = tmp_path / "eval"
    assert run_cli("metrics", tmp_path / "MAS", tmp_path / "RS_DU",
                   "--labels", net_dir / "labels.csv", "--out", out) == 0
    rows = list(csv.DictReader(open(out / "comparison.csv")))
    assert [r["strategy"] for r in rows] == ["MAS", "RS_DU"]
    assert all(int(r["common_size"]) == 64 for r in rows)  # 4 seeds + 60
    assert (out / "evolution_MAS.csv").exists()
    assert (out / "report_MAS.json").exists()


def test_sweep_runs_cartesian_product(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.WORKERS_ENV, "1")
    out = tmp_path / "sweep"
    assert run_cli("sweep", "--sizes", "60x4", "--k-intra", "6",
                   "--r-list", "1,4", "--strategies", "MAS,RO",
                   "--repeats", "3", "--budget", "40", "--seed", "2",
                   "--purity-window", "30", "--out", out) == 0
    rows = list(csv.DictReader(open(out / "sweep.csv")))
    assert len(rows) == 2 * 2 * 3
    mas4 = [float(r["max_window_purity"]) for r in rows
            if r["strategy"] == "MAS" and float(r["r"]) == 4.0]
    ro4 = [float(r["max_window_purity"]) for r in rows
           if r["strategy"] == "RO" and float(r["r"]) == 4.0]
    assert np.mean(mas4) > np.mean(ro4)


def test_sweep_writes_cell_dirs_by_default(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.WORKERS_ENV, "2")
    out = tmp_path / "sweep"
    assert run_cli("sweep", "--sizes", "50x2", "--k-intra", "5",
                   "--r-list", "2", "--strategies", "MAS", "--repeats", "2",
                   "--budget", "20", "--seed", "4", "--out", out) == 0
    assert (out / "r2_rep0_MAS" / "trace.csv").exists()
    assert (out / "r2_rep1_MAS" / "discovered.tsv").exists()


def test_sweep_twelve_cells_make_twelve_run_dirs(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.WORKERS_ENV, "2")
    out = tmp_path / "sweep"
    assert run_cli("sweep", "--sizes", "40x4", "--k-intra", "4",
                   "--r-list", "1,4", "--strategies", "MAS,RO",
                   "--repeats", "3", "--budget", "15", "--seed", "6",
                   "--out", out) == 0
    run_dirs = [d for d in out.iterdir() if d.is_dir()]
    assert len(run_dirs) == 12


def test_sweep_json_format(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.WORKERS_ENV, "1")
    out = tmp_path / "sweep"
    assert run_cli("sweep", "--sizes", "50x2", "--k-intra", "5",
                   "--r-list", "2", "--strategies", "RO", "--repeats", "1",
                   "--budget", "10", "--seed", "4", "--no-keep-runs",
                   "--format", "json", "--out", out) == 0
    rows = json.loads((out / "sweep.json").read_text())
    assert len(rows) == 1 and rows[0]["strategy"] == "RO"


def test_metrics_json_format(net_dir, tmp_path):
    run_cli("sample", "--undirected", net_dir / "edges.tsv",
            "--seeds", seed_args(net_dir), "--strategy", "MAS",
            "--budget", "30", "--seed", "5", "--out", tmp_path / "run")
    out = tmp_path / "eval"
    assert run_cli("metrics", tmp_path / "run", "--format", "json",
                   "--out", out) == 0
    rows = json.loads((out / "comparison.json").read_text())
    assert rows[0]["strategy"] == "MAS"


def test_sample_random_tie_break_recorded_and_reproducible(net_dir, tmp_path):
    out1, out2 = tmp_path / "t1", tmp_path / "t2"
    run_cli("sample", "--undirected", net_dir / "edges.tsv",
            "--seeds", seed_args(net_dir), "--strategy", "MAS",
            "--budget", "40", "--seed", "9", "--tie-break", "random",
            "--out", out1)
    manifest = json.loads((out1 / "manifest.json").read_text())
    assert manifest["tie_break"] == "random"
    assert run_cli("sample", "--from-manifest", out1 / "manifest.json",
                   "--out", out2) == 0
    assert (out1 / "trace.csv").read_bytes() == (out2 / "trace.csv").read_bytes()


def test_sweep_bad_worker_env_exits_2(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.WORKERS_ENV, "zero")
    assert run_cli("sweep", "--sizes", "50x2", "--r-list", "1",
                   "--budget", "5", "--out", tmp_path / "s") == 2


def test_sample_events_backing_with_calibrated_weights(tmp_path, monkeypatch):
    rng = np.random.default_rng(91)
    corpus = ingest.synthetic_corpus(rng, n_authors=6, n_interactors=80,
                                     n_tweets=100, n_events=600)
    events_path = tmp_path / "events.jsonl"
    ingest.write_events_jsonl(events_path, corpus)
    cal = tmp_path / "cal"
    assert run_cli("calibrate", events_path, "--scheme", "nested",
                   "--out", cal) == 0
    seeds = ",".join(sorted({e.author for e in corpus})[:3])
    out1 = tmp_path / "run1"
    assert run_cli("sample", "--events", events_path, "--seeds", seeds,
                   "--strategy", "MAS", "--weights",
                   cal / "weights_nested.csv", "--budget", "40",
                   "--seed", "2", "--out", out1) == 0
    # replay from a different working directory
    elsewhere = tmp_path / "elsewhere"
    elsewhere.mkdir()
    monkeypatch.chdir(elsewhere)
    out2 = tmp_path / "run2"
    assert run_cli("sample", "--from-manifest", out1 / "manifest.json",
                   "--out", out2) == 0
    assert (out1 / "trace.csv").read_bytes() == (out2 / "trace.csv").read_bytes()


def test_calibrate_fixture_corpus(tmp_path):
    rng = np.random.default_rng(31)
    corpus = ingest.synthetic_corpus(rng, n_events=400)
    events_path = tmp_path / "events.jsonl"
    ingest.write_events_jsonl(events_path, corpus)
    out = tmp_path / "cal"
    assert run_cli("calibrate", events_path, "--scheme", "distinct",
                   "--out", out) == 0
    loaded = read_weight_csv(out / "weights_distinct.csv")["distinct"]
    expected = calibrate_records([e.record() for e in corpus], Scheme.DISTINCT)
    for x, star in expected.eta_star.values.items():
        assert loaded.eta_star.values[x] == pytest.approx(star, rel=1e-4)
    summary = json.loads((out / "calibration_summary.json").read_text())
    assert summary["events"] == len(corpus)


def test_calibrate_af_gives_seven_patterns(tmp_path):
    rng = np.random.default_rng(77)
    corpus = ingest.synthetic_corpus(rng, n_events=800)
    events_path = tmp_path / "events.jsonl"
    ingest.write_events_jsonl(events_path, corpus)
    out = tmp_path / "cal"
    assert run_cli("calibrate", events_path, "--scheme", "af", "--out", out) == 0
    loaded = read_weight_csv(out / "weights_af.csv")["af"]
    assert len(loaded.eta_star.values) == 7


def test_calibrate_empty_corpus_exits_2(tmp_path):
    empty = tmp_path / "empty.jsonl"
    empty.write_text("")
    assert run_cli("calibrate", empty, "--out", tmp_path / "cal") == 2


def test_calibrate_twelve_event_fixture_matches_hand_computation(tmp_path):
    """Small corpus checked against an independent dict-based computation."""
    rows = []
    fixture = [
        ("t1", "a1", "u1", ["like"]),
        ("t1", "a1", "u2", ["like", "retweet"]),
        ("t2", "a1", "u3", ["reply"]),
        ("t2", "a1", "u1", ["like"]),
        ("t3", "a2", "u2", ["quote"]),
        ("t3", "a2", "u4", ["like"]),
        ("t4", "a2", "u5", ["like", "reply"]),
        ("t5", "a2", "u1", ["retweet"]),
        ("t6", "a3", "u2", ["like"]),
        ("t6", "a3", "u6", ["like", "retweet", "reply"]),
        ("t7", "a3", "u4", ["like"]),
        ("t8", "a3", "u1", ["quote", "retweet"]),
    ]
    path = tmp_path / "events.jsonl"
    with open(path, "w") as fh:
        for tweet, author, interactor, types in fixture:
            fh.write(json.dumps({"tweet_id": tweet, "author": author,
                                 "interactor": interactor, "types": types}) + "\n")
    out = tmp_path / "cal"
    assert run_cli("calibrate", path, "--scheme", "distinct", "--out", out) == 0
    loaded = read_weight_csv(out / "weights_distinct.csv")["distinct"]

    # independent recomputation from the raw fixture
    bit = {"like": 8, "retweet": 4, "reply": 2, "quote": 1}
    events = [(a, j, sum(bit[t] for t in ts)) for _t, a, j, ts in fixture]
    n = len(events)
    patterns = sorted({p for _a, _j, p in events})
    eta = {x: 100 * sum(p == x for _a, _j, p in events) / n for x in patterns}
    authors = sorted({a for a, _j, _p in events})
    eta_src = {x: 100 * np.mean([
        sum(p == x for a2, _j, p in events if a2 == a)
        / sum(a2 == a for a2, _j, _p in events) for a in authors])
        for x in patterns}
    users = sorted({j for _a, j, _p in events})
    eta_tgt = {x: 100 * np.mean([
        sum(p == x for _a, j2, p in events if j2 == j)
        / sum(j2 == j for _a, j2, _p in events) for j in users])
        for x in patterns}
    for x in patterns:
        star = (eta[x] + eta_src[x] + eta_tgt[x]) / 3
        assert loaded.eta_star.values[x] == pytest.approx(star, rel=1e-4), x


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        run_cli("--version")
    assert exc.value.code == 0
