"""Post-hoc evaluation of traces and sampled subgraphs.

Clustering follows the directed convention frozen against a brute-force
triad enumeration: the neighborhood N(i) is the union of in- and
out-neighbors, the numerator counts ordered neighbor pairs joined by a
directed edge, and the denominator is deg(i)(deg(i)-1) with deg = |N(i)|.
The global coefficient is computed on the undirected simple projection.
Shortest paths are directed and averaged over reachable ordered pairs only,
with the reachable fraction reported alongside.
"""

from __future__ import annotations

import csv
import warnings
from collections import deque
from dataclasses import dataclass

import numpy as np

from .graph import DiscoveredGraph, induced_subgraph
from .sampler import SampleTrace
from .util import ConfigError, DataError


def _directed_adjacency(g: DiscoveredGraph):
    """Simple directed view: per-node out- and in-neighbor sets."""
    out: dict[int, set[int]] = {v: set() for v in g.nodes}
    inc: dict[int, set[int]] = {v: set() for v in g.nodes}
    for s, t in g.edges:
        out[s].add(t)
        inc[t].add(s)
    return out, inc


def clustering_local(g: DiscoveredGraph):
    """Per-node directed local clustering and its mean.

    Nodes with fewer than two distinct neighbors contribute 0.
    """
    if not g.nodes:
        raise DataError("empty graph")
    out, inc = _directed_adjacency(g)
    per_node: dict[int, float] = {}
    for v in g.nodes:
        nbrs = (out[v] | inc[v]) - {v}
        deg = len(nbrs)
        if deg < 2:
            per_node[v] = 0.0
            continue
        links = 0
        for j in nbrs:
            links += len(out[j] & nbrs)
        per_node[v] = links / (deg * (deg - 1))
    mean = sum(per_node.values()) / len(per_node)
    return per_node, mean


def clustering_global(g: DiscoveredGraph) -> float:
    """Transitivity on the undirected projection: 3*triangles / triplets."""
    if not g.nodes:
        raise DataError("empty graph")
    und: dict[int, set[int]] = {v: set() for v in g.nodes}
    for s, t in g.edges:
        if s != t:
            und[s].add(t)
            und[t].add(s)
    triplets = sum(len(nbrs) * (len(nbrs) - 1) // 2 for nbrs in und.values())
    if triplets == 0:
        warnings.warn("graph has no connected triplets; global clustering is 0",
                      stacklevel=2)
        return 0.0
    closed = 0
    for v, nbrs in und.items():
        for j in nbrs:
            if j > v:
                closed += len(nbrs & und[j])
    # closed == 3 * triangles: each triangle is seen from all three of its edges
    return closed / triplets


@dataclass
class PathStats:
    mean: float
    reachable_fraction: float
    reachable_pairs: int


def avg_shortest_path(g: DiscoveredGraph) -> PathStats:
    """Directed BFS from every node; averages over reachable ordered pairs."""
    if not g.nodes:
        raise DataError("empty graph")
    out, _inc = _directed_adjacency(g)
    nodes = list(g.nodes)
    total = 0
    pairs = 0
    for src in nodes:
        dist = {src: 0}
        queue = deque([src])
        while queue:
            v = queue.popleft()
            d = dist[v] + 1
            for nxt in out[v]:
                if nxt not in dist:
                    dist[nxt] = d
                    queue.append(nxt)
        total += sum(dist.values())
        pairs += len(dist) - 1
    n = len(nodes)
    possible = n * (n - 1)
    if pairs == 0:
        raise DataError("no reachable ordered pairs; average path undefined")
    return PathStats(total / pairs, pairs / possible if possible else 0.0, pairs)


def degree_stats(g: DiscoveredGraph) -> dict:
    """Mean directed degree, by edge count and by aggregated edge weight."""
    n = len(g.nodes)
    if n == 0:
        raise DataError("empty graph")
    m = len(g.edges)
    weight = sum(e.weight for e in g.edges.values())
    return {"n": n, "m": m, "avg_degree": m / n, "avg_weighted_degree": weight / n}


def metrics_report(g: DiscoveredGraph) -> dict:
    """The standard JSON report for one sampled subgraph."""
    _per_node, cc_local = clustering_local(g)
    cc_global = clustering_global(g)
    try:
        paths = avg_shortest_path(g)
        mean_path: float | None = paths.mean
        reachable = paths.reachable_fraction
    except DataError:
        mean_path, reachable = None, 0.0
    deg = degree_stats(g)
    return {
        "cc_local": cc_local,
        "cc_global": cc_global,
        "avg_shortest_path": mean_path,
        "reachable_fraction": reachable,
        "avg_degree": deg["avg_degree"],
        "n": deg["n"],
        "m": deg["m"],
    }


# ---------------------------------------------------------------------------
# trace-level evaluation


@dataclass
class EvolutionSeries:
    """Cumulative per-community insider counts; index 0 is the seeded state."""

    timesteps: list[int]
    counts: dict
    boundary: list[float]

    def totals(self) -> list[int]:
        return [sum(series[t] for series in self.counts.values())
                for t in range(len(self.timesteps))]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["timestep", "community", "count", "boundary"])
            for idx, t in enumerate(self.timesteps):
                for comm in sorted(self.counts, key=str):
                    writer.writerow([t, comm, self.counts[comm][idx],
                                     repr(self.boundary[idx])])


def community_evolution(trace: SampleTrace, labels) -> EvolutionSeries:
    """Per-timestep cumulative community membership of the insider set.

    ``labels`` maps internal node id -> community; unlabeled nodes fall into
    the "unknown" community.
    """
    communities = sorted({labels.get(v, "unknown")
                          for v in list(trace.seeds) + trace.selected()}, key=str)
    length = len(trace.rows) + 1
    counts = {c: [0] * length for c in communities}
    for v in trace.seeds:
        counts[labels.get(v, "unknown")][0] += 1
    for idx, row in enumerate(trace.rows, start=1):
        for c in communities:
            counts[c][idx] = counts[c][idx - 1]
        counts[labels.get(row.node, "unknown")][idx] += 1
    return EvolutionSeries(list(range(length)), counts, trace.boundary_series())


def inflection_candidates(boundary, window: int, z_threshold: float) -> list[int]:
    """Timesteps whose forward boundary jump stands out from the trailing window.

    A timestep t is flagged when the forward difference b[t+1]-b[t] exceeds
    the trailing window's mean difference by more than z_threshold trailing
    standard deviations (any increase counts when the trail is flat).
    Series shorter than the window yield no candidates.
    """
    if window < 2:
        raise ConfigError("window must be >= 2")
    if hasattr(boundary, "boundary"):
        boundary = boundary.boundary
    b = np.asarray(boundary, dtype=float)
    diffs = np.diff(b)
    flagged = []
    for t in range(window, diffs.size):
        trail = diffs[t - window:t]
        mu = trail.mean()
        sigma = trail.std()
        d = diffs[t]
        if sigma > 0.0:
            if d - mu > z_threshold * sigma:
                flagged.append(t)
        elif d > mu:
            flagged.append(t)
    return flagged


def window_purity(block_sequence, window: int) -> list[tuple[int, float]]:
    """Majority-share of the most recent ``window`` selections, per timestep.

    ``block_sequence`` is the block/community label of each selected node in
    order; entries start at timestep == window.
    """
    if window < 1:
        raise ConfigError("window must be >= 1")
    out = []
    for t in range(window, len(block_sequence) + 1):
        recent = block_sequence[t - window:t]
        counts: dict = {}
        for b in recent:
            counts[b] = counts.get(b, 0) + 1
        out.append((t, max(counts.values()) / window))
    return out


def max_window_purity(block_sequence, window: int) -> float:
    series = window_purity(block_sequence, window)
    return max((p for _t, p in series), default=0.0)


def min_common_snapshot(runs) -> list[DiscoveredGraph]:
    """Truncate runs to the smallest final insider count and induce subgraphs.

    ``runs`` is a list of (trace, discovered_graph) pairs. Every edge between
    two insiders was discovered no later than the younger endpoint joined, so
    inducing on the truncated insider set reproduces the sampled subgraph at
    that common size exactly.
    """
    runs = list(runs)
    if not runs:
        raise DataError("no traces to compare")
    size = min(trace.final_size() for trace, _g in runs)
    return [induced_subgraph(g, set(trace.insiders_at(size))) for trace, g in runs]
