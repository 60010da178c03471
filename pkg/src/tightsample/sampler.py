"""Tight-sampling engine: expand a seed set one node per timestep.

The state tracks insiders (the sample), outsiders (discovered in-neighbors
not yet sampled) with their priorities, and the weighted directed boundary:
the total weight of discovered outsider->insider edges. Maximum-adjacency
search picks the outsider with the largest priority; the other strategies
are random baselines sharing the same incremental bookkeeping.

Priorities only ever grow while a node stays an outsider, so the selection
heap uses lazy deletion: every priority change pushes a fresh entry and
stale entries are discarded on pop.
"""

from __future__ import annotations

import csv
import heapq
from dataclasses import dataclass, field

import numpy as np

from .graph import DiscoveredGraph, IdMap
from .interactions import UnitWeights
from .util import ConfigError, IndexedSet

STRATEGIES = ("MAS", "RI_MAS", "RO", "RI_RO", "RS_DU", "RS_DW", "RS_SU", "RS_SW")


class FrontierExhausted(RuntimeError):
    """No outsiders remain; the discovered frontier is empty."""


@dataclass
class TraceRow:
    timestep: int
    node: int
    priority: float
    boundary: float
    new_nodes: int
    new_edges: int


@dataclass
class SampleTrace:
    """Per-timestep record of one sampling run."""

    strategy: str
    seeds: tuple[int, ...]
    init_boundary: float
    rows: list[TraceRow] = field(default_factory=list)
    reason: str | None = None
    rng_seed: int | None = None

    def selected(self) -> list[int]:
        return [row.node for row in self.rows]

    def boundary_series(self) -> list[float]:
        """Boundary value per timestep, index 0 = state after seeding."""
        return [self.init_boundary] + [row.boundary for row in self.rows]

    def final_size(self) -> int:
        return len(self.seeds) + len(self.rows)

    def insiders_at(self, size: int) -> list[int]:
        """The first ``size`` insiders in inclusion order (seeds first)."""
        if size < len(self.seeds):
            raise ConfigError("size smaller than the seed set")
        return list(self.seeds) + [r.node for r in self.rows[:size - len(self.seeds)]]

    def write_csv(self, path, ids: IdMap) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["timestep", "node_ext_id", "priority", "boundary",
                             "new_nodes", "new_edges"])
            for r in self.rows:
                writer.writerow([r.timestep, ids.external(r.node), repr(r.priority),
                                 repr(r.boundary), r.new_nodes, r.new_edges])


class SampleState:
    """Mutable sampling state; confine one instance to one thread."""

    def __init__(self, oracle, weights):
        self.oracle = oracle
        self.weights = weights
        self.discovered = DiscoveredGraph()
        self.insiders: dict[int, int] = {}        # node -> inclusion timestep
        self.outsiders: dict[int, float] = {}     # node -> priority
        self.disc_time: dict[int, int] = {}       # outsider -> discovery timestep
        self.out_targets: dict[int, set[int]] = {}  # outsider -> insiders it points to
        self.frontier_of: dict[int, set[int]] = {}  # insider -> outsider in-neighbors
        self.eligible = IndexedSet()               # insiders with outsider in-neighbors
        self.outsider_set = IndexedSet()
        self._heap: list[tuple[float, int, int]] = []
        self.boundary = 0.0
        self.timestep = 0
        self.seeds: tuple[int, ...] = ()

    # -- bookkeeping -----------------------------------------------------

    def _absorb_neighbors(self, v: int) -> tuple[int, int]:
        """Query the oracle for ``v`` and fold the answer into the state."""
        new_nodes = new_edges = 0
        for u, events in self.oracle.in_neighbors(v):
            if u == v:
                continue
            w = self.weights.event_weight(events)
            self.discovered.add_node(u)
            self.discovered.add_events(u, v, events, w)
            new_edges += 1
            if u in self.insiders:
                continue
            if u not in self.outsiders:
                self.outsiders[u] = 0.0
                self.disc_time[u] = self.timestep
                self.out_targets[u] = set()
                self.outsider_set.add(u)
                new_nodes += 1
            self.outsiders[u] += w
            self.boundary += w
            self.out_targets[u].add(v)
            frontier = self.frontier_of[v]
            frontier.add(u)
            if len(frontier) == 1:
                self.eligible.add(v)
            heapq.heappush(self._heap, (-self.outsiders[u], self.disc_time[u], u))
        return new_nodes, new_edges

    def _promote(self, node: int) -> float:
        """Move an outsider into the insider set; returns its final priority."""
        priority = self.outsiders.pop(node)
        self.boundary -= priority
        self.outsider_set.discard(node)
        del self.disc_time[node]
        for tgt in self.out_targets.pop(node):
            frontier = self.frontier_of[tgt]
            frontier.discard(node)
            if not frontier:
                self.eligible.discard(tgt)
        self.insiders[node] = self.timestep
        self.discovered.mark_insider(node)
        self.frontier_of[node] = set()
        return priority

    # -- selection -------------------------------------------------------

    def _pop_max(self) -> int:
        while self._heap:
            neg_p, _disc, node = self._heap[0]
            current = self.outsiders.get(node)
            if current is not None and -neg_p == current:
                return node
            heapq.heappop(self._heap)
        raise FrontierExhausted("priority heap drained")

    def _pop_max_random_tie(self, rng) -> int:
        """Uniform pick among all outsiders tied at the maximum priority."""
        best = self._pop_max()
        top = self.outsiders[best]
        tied = []
        spilled = []
        while self._heap:
            entry = heapq.heappop(self._heap)
            neg_p, _disc, node = entry
            if -neg_p != top:
                heapq.heappush(self._heap, entry)
                break
            if self.outsiders.get(node) == top and node not in tied:
                tied.append(node)
            spilled.append(entry)
        choice = tied[int(rng.integers(len(tied)))]
        for entry in spilled:
            heapq.heappush(self._heap, entry)
        return choice

    @staticmethod
    def _argmax_of(candidates, priorities, disc_time) -> int:
        return min(candidates, key=lambda o: (-priorities[o], disc_time[o], o))

    @staticmethod
    def _argmax_random_tie(candidates, priorities, rng) -> int:
        top = max(priorities[o] for o in candidates)
        tied = [o for o in candidates if priorities[o] == top]
        return tied[int(rng.integers(len(tied)))]

    @staticmethod
    def _weighted_pick(candidates, priorities, rng) -> int:
        weights = np.fromiter((priorities[o] for o in candidates), dtype=float,
                              count=len(candidates))
        cumulative = np.cumsum(weights)
        total = cumulative[-1]
        idx = int(np.searchsorted(cumulative, rng.random() * total, side="right"))
        return candidates[min(idx, len(candidates) - 1)]

    def select(self, strategy: str, rng, tie_break: str = "ordered") -> int:
        if strategy not in STRATEGIES:
            raise ConfigError(f"unknown strategy {strategy!r}; "
                              f"expected one of {STRATEGIES}")
        if tie_break not in ("ordered", "random"):
            raise ConfigError(f"unknown tie_break {tie_break!r}")
        if not self.outsiders:
            raise FrontierExhausted("no outsiders to select")
        if strategy == "MAS":
            return self._pop_max() if tie_break == "ordered" \
                else self._pop_max_random_tie(rng)
        if strategy in ("RO", "RS_DU"):
            return self.outsider_set.pick(rng)
        if strategy == "RS_DW":
            return self._weighted_pick(self.outsider_set.items(), self.outsiders, rng)
        # staged strategies: uniform insider with >= 1 outsider in-neighbor
        insider = self.eligible.pick(rng)
        candidates = sorted(self.frontier_of[insider])
        if strategy == "RI_MAS":
            if tie_break == "random":
                return self._argmax_random_tie(candidates, self.outsiders, rng)
            return self._argmax_of(candidates, self.outsiders, self.disc_time)
        if strategy in ("RI_RO", "RS_SU"):
            return candidates[int(rng.integers(len(candidates)))]
        return self._weighted_pick(candidates, self.outsiders, rng)  # RS_SW


def init(seeds, oracle, weights=None) -> SampleState:
    """Seed a sampling state: every seed is queried exactly once.

    ``seeds`` are external ids; edges between seeds land inside the sample,
    not on the boundary.
    """
    seeds = list(seeds)
    if not seeds:
        raise ConfigError("seed set is empty")
    if len(set(seeds)) != len(seeds):
        raise ConfigError("duplicate seeds")
    state = SampleState(oracle, weights if weights is not None else UnitWeights())
    internal = oracle.declare_seeds(seeds)
    state.seeds = tuple(internal)
    for v in internal:
        state.insiders[v] = 0
        state.discovered.mark_insider(v)
        state.frontier_of[v] = set()
    for v in internal:
        state._absorb_neighbors(v)
    return state


def step(state: SampleState, strategy: str, rng,
         tie_break: str = "ordered") -> tuple[int, TraceRow]:
    """Advance one timestep: select, promote, and discover.

    ``tie_break`` applies to the argmax strategies: "ordered" prefers the
    earliest-discovered then smallest-id outsider among ties (reproducible
    traces); "random" draws uniformly among ties for sensitivity studies.
    Raises FrontierExhausted when no outsiders remain.
    """
    node = state.select(strategy, rng, tie_break)
    state.timestep += 1
    priority = state._promote(node)
    new_nodes, new_edges = state._absorb_neighbors(node)
    row = TraceRow(state.timestep, node, priority, state.boundary,
                   new_nodes, new_edges)
    return node, row


def run(state: SampleState, strategy: str, *, steps: int | None = None,
        target_size: int | None = None, rng=None, rng_seed: int | None = None,
        tie_break: str = "ordered", on_step=None) -> SampleTrace:
    """Repeat :func:`step` until the budget is spent or the frontier empties.

    Exactly one of ``steps`` / ``target_size`` bounds the run (``steps`` may
    also cap a ``target_size`` run). Deterministic given ``rng_seed``.
    ``on_step(state, row)`` is called after every timestep when provided.
    """
    if steps is None and target_size is None:
        raise ConfigError("need a budget: steps or target_size")
    if steps is not None and steps < 1:
        raise ConfigError("budget must be >= 1")
    if rng is None:
        rng = np.random.default_rng(rng_seed)
    trace = SampleTrace(strategy, state.seeds, state.boundary, rng_seed=rng_seed)
    while True:
        if steps is not None and len(trace.rows) >= steps:
            trace.reason = "budget"
            break
        if target_size is not None and len(state.insiders) >= target_size:
            trace.reason = "target size"
            break
        try:
            _node, row = step(state, strategy, rng, tie_break)
        except FrontierExhausted:
            trace.reason = "frontier exhausted"
            break
        trace.rows.append(row)
        if on_step is not None:
            on_step(state, row)
    return trace


def audit(state: SampleState) -> float:
    """Recompute priorities and boundary from the discovered graph.

    Returns the largest absolute deviation from the incrementally maintained
    values; raises if the outsider sets themselves disagree.
    """
    recomputed: dict[int, float] = {}
    for (s, t), edge in state.discovered.edges.items():
        if t in state.insiders and s not in state.insiders:
            recomputed[s] = recomputed.get(s, 0.0) + edge.weight
    if set(recomputed) != set(state.outsiders):
        raise AssertionError("outsider sets disagree between graph and state")
    worst = abs(sum(recomputed.values()) - state.boundary)
    for node, value in recomputed.items():
        worst = max(worst, abs(value - state.outsiders[node]))
    return worst
