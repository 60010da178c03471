"""Command-line orchestration: calibrate, gen-sbm, sample, metrics, sweep.

Every run records its rng seed and inputs in a manifest so it can be
reproduced byte-for-byte. Figures are not rendered; all outputs are CSV or
JSON for downstream plotting.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import json
import os
import sys
from importlib import metadata, resources
from pathlib import Path

import numpy as np

from . import graph, ingest, interactions, metrics, sampler, sbm
from .oracle import GraphOracle
from .util import ConfigError, DataError

WORKERS_ENV = "TIGHTSAMPLE_WORKERS"


def _version() -> str:
    try:
        return metadata.version("tightsample")
    except metadata.PackageNotFoundError:
        return "0.0.0"


def _out_dir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _parse_sizes(text: str) -> tuple[int, ...]:
    """Block sizes as '400,800,1200' or the shorthand '200x8'."""
    text = text.strip()
    if "x" in text and "," not in text:
        size, _, count = text.partition("x")
        return (int(size),) * int(count)
    return tuple(int(s) for s in text.split(","))


def _parse_float_list(text: str) -> list[float]:
    return [float(x) for x in text.split(",")]


def _load_weights(selector: str):
    """'unit', a scheme tag of the shipped tables, or a weight-CSV path."""
    if selector == "unit":
        return interactions.UnitWeights()
    if selector in ("distinct", "nested", "af"):
        return interactions.load_reference_tables()[selector].weights
    path = Path(selector)
    if not path.exists():
        raise ConfigError(f"weight table not found: {selector}")
    tables = interactions.read_weight_csv(path)
    if len(tables) == 1:
        return next(iter(tables.values())).weights
    raise ConfigError(f"{selector} holds several schemes; pass scheme "
                      f"explicitly as one of {sorted(tables)}")


# ---------------------------------------------------------------------------
# calibrate


def cmd_calibrate(args) -> int:
    events = ingest.parse_events(args.events, fmt=args.events_format)
    seeds = None
    if args.seeds_file:
        seeds = [line.strip() for line in open(args.seeds_file) if line.strip()]
    corpus_filter = ingest.CorpusFilter(trim_quantile=args.trim)
    filtered = ingest.apply_filters(events, seeds, corpus_filter)
    if not filtered.events:
        raise ConfigError("empty corpus")
    scheme = interactions.Scheme.parse(args.scheme)
    cal = interactions.calibrate_records(
        (e.record() for e in filtered.events), scheme)
    out = _out_dir(args.out)
    table_path = out / f"weights_{scheme.value}.csv"
    interactions.write_weight_csv(table_path, cal)
    summary = {
        "scheme": scheme.value,
        "events": len(filtered.events),
        "seeds": len(filtered.seeds),
        "patterns": len(cal.eta_star.values),
        "filter_report": filtered.report,
        "weight_table": str(table_path),
    }
    (out / "calibration_summary.json").write_text(json.dumps(summary, indent=2))
    print(f"calibrated {len(filtered.events)} events "
          f"({scheme.value}, {len(cal.eta_star.values)} patterns) -> {table_path}")
    for x in sorted(cal.eta_star.values):
        print(f"  {interactions.pattern_str(x, scheme.width)}  "
              f"eta*={cal.eta_star.values[x]:9.4f}  "
              f"w*={cal.weights.omega_star[x]:8.2f}")
    return 0


# ---------------------------------------------------------------------------
# gen-sbm


def cmd_gen_sbm(args) -> int:
    if args.config:
        cfg, seed_cfg = sbm.read_config(args.config)
        if args.seed is not None:
            cfg = sbm.BlockModelConfig(cfg.block_sizes, cfg.k_intra, cfg.r, args.seed)
    else:
        if not args.sizes:
            raise ConfigError("gen-sbm needs --sizes or --config")
        cfg = sbm.BlockModelConfig(
            block_sizes=_parse_sizes(args.sizes), k_intra=args.k_intra,
            r=args.r, rng_seed=args.seed if args.seed is not None else 0)
        seed_cfg = None
    matrix = sbm.derive_block_matrix(cfg)
    edges, labels = sbm.generate(matrix, cfg.block_sizes, cfg.rng_seed)
    out = _out_dir(args.out)
    sbm.write_edges_tsv(out / "edges.tsv", edges)
    graph.write_labels_csv(out / "labels.csv", {v: int(labels[v])
                                                for v in range(len(labels))})
    sbm.write_config(out / "sbm.cfg", cfg, seed_cfg)
    stats = sbm.realized_block_stats(edges, labels)
    print(f"generated {len(labels)} nodes, {len(edges)} undirected edges "
          f"-> {out}/edges.tsv")
    print(f"  mean intra-block degree: "
          f"{np.round(stats['mean_intra_degree'], 3).tolist()}")
    return 0


# ---------------------------------------------------------------------------
# sample


def _oracle_from_descriptor(desc: dict, base: Path) -> GraphOracle:
    kind = desc.get("kind")
    path = desc.get("path")
    if path is not None:
        path = Path(path)
        if not path.is_absolute():
            path = base / path
    if kind == "undirected":
        edges = sbm.read_edges_tsv(path)
        return GraphOracle.from_undirected_edges(
            edges, n_nodes=desc.get("n_nodes"),
            descriptor={"kind": "undirected", "path": str(desc["path"]),
                        "n_nodes": desc.get("n_nodes")})
    if kind == "edgelist":
        return GraphOracle.from_edgelist(path)
    if kind == "events":
        events = ingest.parse_events(path, fmt=desc.get("format"))
        return GraphOracle.from_events(
            events, descriptor={"kind": "events", "path": str(desc["path"]),
                                "format": desc.get("format")})
    raise ConfigError(f"unknown oracle kind {kind!r}")


def _build_oracle(args) -> GraphOracle:
    picked = [name for name in ("undirected", "edges", "events")
              if getattr(args, name, None)]
    if len(picked) != 1:
        raise ConfigError("pass exactly one of --undirected/--edges/--events")
    # manifests must replay from any directory, so record absolute paths
    if args.undirected:
        desc = {"kind": "undirected", "path": str(Path(args.undirected).resolve()),
                "n_nodes": None}
    elif args.edges:
        desc = {"kind": "edgelist", "path": str(Path(args.edges).resolve())}
    else:
        desc = {"kind": "events", "path": str(Path(args.events).resolve()),
                "format": args.events_format}
    return _oracle_from_descriptor(desc, Path.cwd())


def _read_seeds(args) -> list:
    if args.seeds and args.seeds_file:
        raise ConfigError("pass --seeds or --seeds-file, not both")
    if args.seeds:
        return [s.strip() for s in args.seeds.split(",") if s.strip()]
    if args.seeds_file:
        return [line.strip() for line in open(args.seeds_file) if line.strip()]
    raise ConfigError("no seeds given")


def _coerce_seed_ids(seeds, oracle: GraphOracle) -> list:
    """Seed tokens arrive as strings; integer-keyed oracles need ints."""
    coerced = []
    for s in seeds:
        if isinstance(s, str) and s not in oracle.ids and s.lstrip("-").isdigit() \
                and int(s) in oracle.ids:
            coerced.append(int(s))
        else:
            coerced.append(s)
    return coerced


def _execute_sample(manifest: dict, out: Path, base: Path) -> sampler.SampleTrace:
    oracle = _oracle_from_descriptor(manifest["oracle"], base)
    weights = _load_weights(manifest["weights"])
    seeds = _coerce_seed_ids(manifest["seeds"], oracle)
    state = sampler.init(seeds, oracle, weights)
    trace = sampler.run(state, manifest["strategy"], steps=manifest["budget"],
                        target_size=manifest.get("target_size"),
                        rng_seed=manifest["rng_seed"],
                        tie_break=manifest.get("tie_break", "ordered"))
    trace.write_csv(out / "trace.csv", oracle.ids)
    graph.write_edge_tsv(state.discovered, out / "discovered.tsv", oracle.ids)
    oracle.write_access_log(out / "access_log.csv")
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2))
    summary = {
        "insiders": len(state.insiders),
        "discovered_nodes": len(state.discovered.nodes),
        "discovered_edges": state.discovered.n_edges(),
        "init_boundary": trace.init_boundary,
        "final_boundary": state.boundary,
        "stop_reason": trace.reason,
    }
    (out / "run_summary.json").write_text(json.dumps(summary, indent=2))
    return trace


def cmd_sample(args) -> int:
    out = _out_dir(args.out)
    if args.from_manifest:
        manifest_path = Path(args.from_manifest)
        manifest = json.loads(manifest_path.read_text())
        trace = _execute_sample(manifest, out, manifest_path.parent)
    else:
        if args.strategy not in sampler.STRATEGIES:
            raise ConfigError(f"unknown strategy {args.strategy!r}; "
                              f"expected one of {sampler.STRATEGIES}")
        if args.budget is None and args.target_size is None:
            raise ConfigError("need --budget or --target-size")
        oracle = _build_oracle(args)
        weights_ref = args.weights
        if weights_ref not in ("unit", "distinct", "nested", "af"):
            weights_ref = str(Path(weights_ref).resolve())
        manifest = {
            "strategy": args.strategy,
            "rng_seed": args.seed if args.seed is not None else 0,
            "weights": weights_ref,
            "oracle": dict(oracle.descriptor),
            "seeds": _read_seeds(args),
            "budget": args.budget,
            "target_size": args.target_size,
            "tie_break": args.tie_break,
            "version": _version(),
        }
        if manifest["oracle"].get("path") is None:
            raise ConfigError("oracle backing must be file-based for a manifest")
        trace = _execute_sample(manifest, out, Path.cwd())
    print(f"{manifest['strategy']}: {len(trace.rows)} timesteps "
          f"({trace.reason}) -> {out}/trace.csv")
    return 0


# ---------------------------------------------------------------------------
# metrics


def _load_run(run_dir: Path):
    trace_path = run_dir / "trace.csv"
    edges_path = run_dir / "discovered.tsv"
    manifest_path = run_dir / "manifest.json"
    if not trace_path.exists() or not edges_path.exists():
        raise DataError(f"{run_dir} is not a run directory "
                        f"(need trace.csv and discovered.tsv)")
    manifest = json.loads(manifest_path.read_text()) if manifest_path.exists() else {}
    g, ids = graph.read_edge_tsv(edges_path)
    seeds = [ids.intern(str(s)) for s in manifest.get("seeds", [])]
    rows = []
    with open(trace_path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            rows.append(sampler.TraceRow(
                int(row["timestep"]), ids.intern(row["node_ext_id"]),
                float(row["priority"]), float(row["boundary"]),
                int(row["new_nodes"]), int(row["new_edges"])))
    summary_path = run_dir / "run_summary.json"
    summary = json.loads(summary_path.read_text()) if summary_path.exists() else {}
    trace = sampler.SampleTrace(manifest.get("strategy", run_dir.name),
                                tuple(seeds),
                                float(summary.get("init_boundary", 0.0)), rows)
    for v in trace.seeds:
        g.mark_insider(v)
    for row in rows:
        g.mark_insider(row.node)
    return trace, g, ids


def cmd_metrics(args) -> int:
    run_dirs = [Path(d) for d in args.runs]
    runs = [_load_run(d) for d in run_dirs]
    out = _out_dir(args.out)
    snapshots = metrics.min_common_snapshot([(t, g) for t, g, _ids in runs])
    common_size = min(t.final_size() for t, _g, _ids in runs)

    comparison = []
    for (trace, _g, _ids), sub, run_dir in zip(runs, snapshots, run_dirs):
        report = metrics.metrics_report(sub)
        (out / f"report_{run_dir.name}.json").write_text(
            json.dumps(report, indent=2))
        comparison.append({"run": run_dir.name, "strategy": trace.strategy,
                           "common_size": common_size, **report})
    if args.format == "json":
        comparison_path = out / "comparison.json"
        comparison_path.write_text(json.dumps(comparison, indent=2))
    else:
        comparison_path = out / "comparison.csv"
        with open(comparison_path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(comparison[0]))
            writer.writeheader()
            writer.writerows(comparison)

    if args.labels:
        raw_labels = graph.read_labels_csv(args.labels)
        for (trace, _g, ids), run_dir in zip(runs, run_dirs):
            labels = {ids.resolve(ext): comm for ext, comm in raw_labels.items()
                      if ext in ids}
            series = metrics.community_evolution(trace, labels)
            series.write_csv(out / f"evolution_{run_dir.name}.csv")
    print(f"compared {len(runs)} runs at common size {common_size} "
          f"-> {comparison_path}")
    return 0


# ---------------------------------------------------------------------------
# sweep


def _sweep_cell(payload: dict) -> dict:
    """One (r, strategy, repeat) cell; module-level for process pools."""
    cfg = sbm.BlockModelConfig(
        block_sizes=tuple(payload["sizes"]), k_intra=payload["k_intra"],
        r=payload["r"], rng_seed=payload["graph_seed"])
    matrix = sbm.derive_block_matrix(cfg)
    edges, labels = sbm.generate(matrix, cfg.block_sizes, cfg.rng_seed)
    seed_cfg = sbm.SeedConfig(per_block=tuple(payload["seeds_per_block"]),
                              rng_seed=payload["seed_rng"])
    seeds = sbm.select_seeds(labels, seed_cfg)
    oracle = GraphOracle.from_undirected_edges(edges, n_nodes=len(labels))
    state = sampler.init(seeds, oracle)
    trace = sampler.run(state, payload["strategy"], steps=payload["budget"],
                        rng_seed=payload["run_seed"])
    blocks = [int(labels[v]) for v in trace.selected()]
    window = min(payload["purity_window"], max(len(blocks), 1))
    purity = metrics.max_window_purity(blocks, window) if blocks else 0.0
    out_dir = payload.get("out_dir")
    if out_dir:
        cell_dir = _out_dir(Path(out_dir) /
                            f"r{payload['r']:g}_rep{payload['repeat']}_{payload['strategy']}")
        trace.write_csv(cell_dir / "trace.csv", oracle.ids)
        graph.write_edge_tsv(state.discovered, cell_dir / "discovered.tsv", oracle.ids)
    return {
        "r": payload["r"], "strategy": payload["strategy"],
        "repeat": payload["repeat"], "run_seed": payload["run_seed"],
        "steps": len(trace.rows), "insiders": trace.final_size(),
        "final_boundary": trace.rows[-1].boundary if trace.rows else state.boundary,
        "max_window_purity": purity,
    }


def _worker_count(n_cells: int) -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            count = int(env)
        except ValueError:
            raise ConfigError(f"{WORKERS_ENV} must be an integer, got {env!r}")
        if count < 1:
            raise ConfigError(f"{WORKERS_ENV} must be >= 1")
        return min(count, n_cells)
    return max(1, min(4, os.cpu_count() or 1, n_cells))


def cmd_sweep(args) -> int:
    sizes = _parse_sizes(args.sizes)
    r_list = _parse_float_list(args.r_list)
    strategies = [s.strip() for s in args.strategies.split(",")]
    for s in strategies:
        if s not in sampler.STRATEGIES:
            raise ConfigError(f"unknown strategy {s!r}")
    base_seed = args.seed if args.seed is not None else 0
    seeds_per_block = (_parse_sizes(args.seeds_per_block)
                       if args.seeds_per_block else (1,) * len(sizes))
    out = _out_dir(args.out)

    cells = []
    for ri, r in enumerate(r_list):
        for rep in range(args.repeats):
            graph_seed = base_seed * 1_000_003 + ri * 1_009 + rep
            for si, strategy in enumerate(strategies):
                cells.append({
                    "sizes": list(sizes), "k_intra": args.k_intra, "r": r,
                    "graph_seed": graph_seed, "seed_rng": graph_seed + 777,
                    "run_seed": graph_seed * 31 + si,
                    "seeds_per_block": list(seeds_per_block),
                    "strategy": strategy, "repeat": rep,
                    "budget": args.budget, "purity_window": args.purity_window,
                    "out_dir": str(out) if args.keep_runs else None,
                })

    workers = _worker_count(len(cells))
    if workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_cell, cells))
    else:
        results = [_sweep_cell(cell) for cell in cells]

    results.sort(key=lambda row: (row["r"], row["strategy"], row["repeat"]))
    if args.format == "json":
        agg_path = out / "sweep.json"
        agg_path.write_text(json.dumps(results, indent=2))
    else:
        agg_path = out / "sweep.csv"
        with open(agg_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["r", "strategy", "repeat", "run_seed", "steps",
                             "insiders", "final_boundary", "max_window_purity"])
            for row in results:
                writer.writerow([row["r"], row["strategy"], row["repeat"],
                                 row["run_seed"], row["steps"], row["insiders"],
                                 repr(row["final_boundary"]),
                                 repr(row["max_window_purity"])])
    print(f"swept {len(cells)} cells with {workers} worker(s) -> {agg_path}")
    return 0


# ---------------------------------------------------------------------------
# demo data


def demo_config_path() -> Path:
    """The shipped 8x200 demo blockmodel configuration."""
    ref = resources.files("tightsample.data").joinpath("demo_sbm.cfg")
    with resources.as_file(ref) as path:
        return Path(path)


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tightsample",
        description="Tight snowball sampling of unbounded directed networks")
    parser.add_argument("--version", action="version", version=_version())
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", help="derive pattern weights from an event log")
    p.add_argument("events", help="engagement event log (JSONL or CSV)")
    p.add_argument("--scheme", default="distinct",
                   help="distinct | nested | af | af-distinct")
    p.add_argument("--events-format", choices=["jsonl", "csv"], default=None)
    p.add_argument("--seeds-file", default=None,
                   help="optional seed-author list, one id per line")
    p.add_argument("--trim", type=float, default=1.0,
                   help="keep the lower fraction of tweets by interaction count")
    p.add_argument("--out", default="calibration")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("gen-sbm", help="generate a planted-community test network")
    p.add_argument("--sizes", default=None, help="block sizes: '200x8' or '400,800'")
    p.add_argument("--k-intra", type=float, default=10.0)
    p.add_argument("--r", type=float, default=4.0)
    p.add_argument("--config", default=None, help="key=value config file")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default="sbm_out")
    p.set_defaults(func=cmd_gen_sbm)

    p = sub.add_parser("sample", help="run one sampling strategy against an oracle")
    p.add_argument("--undirected", default=None,
                   help="undirected edge TSV (served in both directions)")
    p.add_argument("--edges", default=None, help="directed edge-list TSV")
    p.add_argument("--events", default=None, help="engagement event log")
    p.add_argument("--events-format", choices=["jsonl", "csv"], default=None)
    p.add_argument("--seeds", default=None, help="comma-separated seed ids")
    p.add_argument("--seeds-file", default=None)
    p.add_argument("--strategy", default="MAS")
    p.add_argument("--weights", default="unit",
                   help="'unit', a shipped scheme tag, or a weight-CSV path")
    p.add_argument("--budget", type=int, default=None, help="max timesteps")
    p.add_argument("--target-size", type=int, default=None)
    p.add_argument("--seed", type=int, default=None, help="rng seed")
    p.add_argument("--tie-break", choices=["ordered", "random"],
                   default="ordered",
                   help="argmax tie handling for MAS/RI_MAS")
    p.add_argument("--from-manifest", default=None,
                   help="reproduce a run from its manifest.json")
    p.add_argument("--out", default="sample_out")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("metrics", help="evaluate one or more finished runs")
    p.add_argument("runs", nargs="+", help="run directories from 'sample'")
    p.add_argument("--labels", default=None, help="node,community CSV")
    p.add_argument("--format", choices=["csv", "json"], default="csv",
                   help="comparison table format")
    p.add_argument("--out", default="metrics_out")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("sweep", help="cartesian sweep over r values and strategies")
    p.add_argument("--sizes", required=True)
    p.add_argument("--k-intra", type=float, default=10.0)
    p.add_argument("--r-list", required=True, help="comma-separated r values")
    p.add_argument("--strategies", default="MAS,RO")
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--budget", type=int, required=True)
    p.add_argument("--seeds-per-block", default=None,
                   help="per-block seed counts, e.g. '1x8'")
    p.add_argument("--purity-window", type=int, default=180)
    p.add_argument("--keep-runs", action=argparse.BooleanOptionalAction,
                   default=True,
                   help="write a run directory (trace, edges) per cell")
    p.add_argument("--format", choices=["csv", "json"], default="csv",
                   help="aggregate table format")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default="sweep_out")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
