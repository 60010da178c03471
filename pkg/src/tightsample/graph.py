"""Node-id interning, multiplex edge records, and the discovered subgraph.

All internal node ids are dense integers assigned by :class:`IdMap`;
external ids (strings or ints) appear only at I/O boundaries.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

from .util import ConfigError, DataError

EDGE_SELECTORS = ("all", "boundary", "internal")


class IdMap:
    """Bijection between external ids and dense internal integers 0..n-1."""

    def __init__(self):
        self._ext2int: dict = {}
        self._int2ext: list = []

    def intern(self, ext) -> int:
        """Return the internal id for ``ext``, assigning a new one if needed."""
        internal = self._ext2int.get(ext)
        if internal is None:
            internal = len(self._int2ext)
            self._ext2int[ext] = internal
            self._int2ext.append(ext)
        return internal

    def resolve(self, ext) -> int:
        """Internal id for a known external id; KeyError if never interned."""
        return self._ext2int[ext]

    def external(self, internal: int):
        return self._int2ext[internal]

    def __contains__(self, ext) -> bool:
        return ext in self._ext2int

    def __len__(self) -> int:
        return len(self._int2ext)


@dataclass
class MultiEdge:
    """One directed edge source->target aggregating all engagement events.

    ``events`` holds (tweet_id, pattern) entries; ``weight`` is the sum of the
    active weight table over those patterns. ``event_count`` overrides
    ``len(events)`` for edges restored from a TSV export, where only the
    count survives.
    """

    source: int
    target: int
    events: tuple = ()
    weight: float = 0.0
    event_count: int | None = None

    @property
    def n_events(self) -> int:
        return self.event_count if self.event_count is not None else len(self.events)


class DiscoveredGraph:
    """The portion of the unbounded network revealed so far.

    Nodes are flagged insider/outsider; every edge's target is an insider
    because edges are only discovered by querying insiders' in-neighborhoods.
    Single-writer: callers serialize mutations; reads are safe once a
    mutation completes.
    """

    def __init__(self):
        self.nodes: set[int] = set()
        self.insiders: set[int] = set()
        self.edges: dict[tuple[int, int], MultiEdge] = {}
        self._in: dict[int, set[int]] = {}

    @classmethod
    def from_edge_pairs(cls, pairs, weight: float = 1.0) -> "DiscoveredGraph":
        """Build an all-insider graph from (source, target) pairs (test/metrics aid)."""
        g = cls()
        for s, t in pairs:
            g.add_node(s, insider=True)
            g.add_node(t, insider=True)
            g.add_events(s, t, events=((None, 0),), weight=weight)
        return g

    def add_node(self, v: int, insider: bool = False) -> None:
        self.nodes.add(v)
        if insider:
            self.insiders.add(v)

    def mark_insider(self, v: int) -> None:
        self.nodes.add(v)
        self.insiders.add(v)

    def is_insider(self, v: int) -> bool:
        return v in self.insiders

    def add_events(self, source: int, target: int, events: tuple, weight: float,
                   event_count: int | None = None) -> MultiEdge:
        """Accumulate events onto the (source, target) edge, creating it if new."""
        if source == target:
            raise DataError(f"self-loop rejected: {source}")
        key = (source, target)
        edge = self.edges.get(key)
        if edge is None:
            edge = MultiEdge(source, target, tuple(events), weight, event_count)
            self.edges[key] = edge
            self._in.setdefault(target, set()).add(source)
        else:
            edge.events = edge.events + tuple(events)
            edge.weight += weight
            if event_count is not None:
                edge.event_count = (edge.event_count or 0) + event_count
        return edge

    def in_sources(self, target: int) -> set[int]:
        return self._in.get(target, set())

    def n_edges(self) -> int:
        return len(self.edges)

    def edge_class(self, edge: MultiEdge) -> str:
        return "internal" if edge.source in self.insiders else "boundary"


def induced_insider_subgraph(g: DiscoveredGraph) -> DiscoveredGraph:
    """Subgraph on insider nodes with exactly the edges between insiders."""
    sub = DiscoveredGraph()
    for v in g.insiders:
        sub.add_node(v, insider=True)
    for (s, t), edge in g.edges.items():
        if s in g.insiders and t in g.insiders:
            sub.add_events(s, t, edge.events, edge.weight, edge.event_count)
    return sub


def induced_subgraph(g: DiscoveredGraph, keep: set[int]) -> DiscoveredGraph:
    """Subgraph on ``keep`` (all marked insider), edges with both endpoints kept."""
    sub = DiscoveredGraph()
    for v in keep:
        sub.add_node(v, insider=True)
    for (s, t), edge in g.edges.items():
        if s in keep and t in keep:
            sub.add_events(s, t, edge.events, edge.weight, edge.event_count)
    return sub


def total_edge_weight(g: DiscoveredGraph, selector: str = "all") -> float:
    """Sum of edge weights over a selector class.

    ``boundary`` counts outsider->insider edges, ``internal`` counts
    insider->insider edges; with unit weights both reduce to edge counts.
    """
    if selector not in EDGE_SELECTORS:
        raise ConfigError(f"unknown edge selector {selector!r}; use one of {EDGE_SELECTORS}")
    total = 0.0
    for (s, _t), edge in g.edges.items():
        if selector == "boundary" and s in g.insiders:
            continue
        if selector == "internal" and s not in g.insiders:
            continue
        total += edge.weight
    return total


def write_edge_tsv(g: DiscoveredGraph, path, ids: IdMap) -> None:
    """TSV export ``source target weight n_events``, ordered by (target, source)."""
    rows = sorted(g.edges, key=lambda st: (st[1], st[0]))
    with open(path, "w", newline="") as fh:
        for s, t in rows:
            edge = g.edges[(s, t)]
            fh.write(f"{ids.external(s)}\t{ids.external(t)}\t"
                     f"{edge.weight!r}\t{edge.n_events}\n")


def read_edge_tsv(path, ids: IdMap | None = None) -> tuple[DiscoveredGraph, IdMap]:
    """Rebuild a graph from :func:`write_edge_tsv` output (roles left unset)."""
    if ids is None:
        ids = IdMap()
    g = DiscoveredGraph()
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise DataError(f"cannot read edge list: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 4:
                raise DataError(f"{path}:{lineno}: expected 4 tab-separated fields")
            s = ids.intern(parts[0])
            t = ids.intern(parts[1])
            g.add_node(s)
            g.add_node(t)
            g.add_events(s, t, events=(), weight=float(parts[2]),
                         event_count=int(parts[3]))
    return g, ids


def write_labels_csv(path, labels: dict) -> None:
    """``node,block`` CSV, node order sorted by external id string."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["node", "block"])
        for node in sorted(labels, key=str):
            writer.writerow([node, labels[node]])


def read_labels_csv(path) -> dict[str, int]:
    """Read a ``node,community`` (or ``node,block``) CSV into a dict."""
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise DataError(f"cannot read labels: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or len(header) < 2:
            raise DataError(f"{path}: missing header row")
        labels = {}
        for row in reader:
            if len(row) < 2:
                raise DataError(f"{path}: short row {row!r}")
            labels[row[0]] = int(row[1])
    return labels
