"""The gateway to the unbounded network.

Samplers never see the full graph; the only retrieval primitive is
``in_neighbors(v)`` for a node that is already discoverable (a declared seed
or a node returned by an earlier answer). Every query is appended to an
access log so tests can audit exactly what a sampling run touched.
"""

from __future__ import annotations

import csv
import threading

from .graph import IdMap
from .interactions import PLAIN_EDGE
from .util import DataError


class UnknownNodeError(DataError):
    """Raised when a query names a node the oracle never revealed."""


class GraphOracle:
    """In-neighborhood oracle over one of three backings.

    Backings: an in-memory generated graph (undirected edges served in both
    directions), a directed edge-list file, or an engagement-event index.
    ``in_neighbors`` is read-only on the backing and safe for concurrent
    callers; the access log append is lock-protected.
    """

    def __init__(self, in_adj: dict, ids: IdMap, kind: str, descriptor: dict):
        self._in = in_adj
        self.ids = ids
        self.kind = kind
        self.descriptor = descriptor
        self._discoverable: set[int] = set()
        self._log: list[int] = []
        self._lock = threading.Lock()

    # -- construction --------------------------------------------------

    @classmethod
    def from_undirected_edges(cls, edges, n_nodes: int | None = None,
                              descriptor: dict | None = None) -> "GraphOracle":
        """Serve an undirected simple graph as two directed plain edges each.

        Nodes are the integers 0..n-1; external and internal ids coincide.
        """
        ids = IdMap()
        if n_nodes is not None:
            for v in range(n_nodes):
                ids.intern(v)
        in_adj: dict[int, list] = {}
        plain = ((None, PLAIN_EDGE),)
        for u, v in edges:
            ui, vi = ids.intern(u), ids.intern(v)
            if ui == vi:
                continue
            in_adj.setdefault(vi, []).append((ui, plain))
            in_adj.setdefault(ui, []).append((vi, plain))
        frozen = {v: tuple(sorted(nbrs)) for v, nbrs in in_adj.items()}
        return cls(frozen, ids, "undirected",
                   descriptor or {"kind": "undirected", "n_nodes": len(ids)})

    @classmethod
    def from_edgelist(cls, path) -> "GraphOracle":
        """Directed edge-list TSV backing: one ``source<TAB>target`` per line."""
        ids = IdMap()
        in_adj: dict[int, list] = {}
        plain = ((None, PLAIN_EDGE),)
        try:
            fh = open(path, newline="")
        except OSError as exc:
            raise DataError(f"cannot read edge list: {exc}") from exc
        with fh:
            for lineno, line in enumerate(fh, 1):
                line = line.rstrip("\n")
                if not line:
                    continue
                parts = line.split("\t")
                if len(parts) < 2:
                    raise DataError(f"{path}:{lineno}: expected source<TAB>target")
                src = ids.intern(parts[0])
                tgt = ids.intern(parts[1])
                if src == tgt:
                    continue
                in_adj.setdefault(tgt, []).append((src, plain))
        frozen = {v: tuple(sorted(set(nbrs))) for v, nbrs in in_adj.items()}
        return cls(frozen, ids, "edgelist", {"kind": "edgelist", "path": str(path)})

    @classmethod
    def from_events(cls, events, descriptor: dict | None = None) -> "GraphOracle":
        """Engagement-event backing, pre-indexed by author at load time.

        ``in_neighbors(author)`` lists every user who engaged with the
        author's tweets, with the per-tweet interaction patterns.
        """
        ids = IdMap()
        per_author: dict[int, dict[int, list]] = {}
        for e in events:
            a = ids.intern(e.author)
            j = ids.intern(e.interactor)
            if a == j:
                continue
            per_author.setdefault(a, {}).setdefault(j, []).append(
                (e.tweet_id, e.pattern))
        in_adj = {}
        for a, by_src in per_author.items():
            in_adj[a] = tuple(
                (j, tuple(sorted(evs, key=lambda tp: str(tp[0]))))
                for j, evs in sorted(by_src.items()))
        return cls(in_adj, ids, "events",
                   descriptor or {"kind": "events", "n_events": sum(
                       len(evs) for by_src in per_author.values()
                       for evs in by_src.values())})

    # -- seed declaration and queries -----------------------------------

    def declare_seeds(self, seed_exts) -> list[int]:
        """Mark seeds discoverable, returning their internal ids in order."""
        internal = []
        for ext in seed_exts:
            if ext not in self.ids:
                raise DataError(f"unknown seed: {ext!r}")
            v = self.ids.resolve(ext)
            self._discoverable.add(v)
            internal.append(v)
        return internal

    def in_neighbors(self, v: int):
        """All known in-neighbors of ``v`` with their event multisets.

        Deterministic order (by internal id). ``v`` must be discoverable.
        """
        if v not in self._discoverable:
            ext = self.ids.external(v) if 0 <= v < len(self.ids) else v
            raise UnknownNodeError(f"node not discoverable: {ext!r}")
        with self._lock:
            self._log.append(v)
        answer = self._in.get(v, ())
        for u, _events in answer:
            self._discoverable.add(u)
        return answer

    # -- audit ----------------------------------------------------------

    @property
    def access_log(self) -> tuple[int, ...]:
        return tuple(self._log)

    @property
    def query_count(self) -> int:
        return len(self._log)

    def write_access_log(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["step", "node_ext_id"])
            for step, v in enumerate(self._log, 1):
                writer.writerow([step, self.ids.external(v)])
