"""Facets (classes of mutually revealing events) and the quotient net."""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from .occnet import EventSet, OccurrenceNet
from .reveals import RevealsMatrix, _row_bits


@dataclass(frozen=True)
class FacetPartition:
    classes: tuple[EventSet, ...]
    class_of: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.classes)

    def members(self, i: int) -> list[int]:
        return list(self.classes[i])

    def listing(self, o: OccurrenceNet) -> str:
        return "\n".join(f"facet {i}: {{{','.join(o.names(self._ranked(o, i)))}}}" for i in range(len(self))) + "\n"

    def braces(self, o: OccurrenceNet) -> str:
        return " ".join("{" + ",".join(o.names(self._ranked(o, i))) + "}" for i in range(len(self)))

    def _ranked(self, o: OccurrenceNet, i: int) -> list[int]:
        return sorted(self.classes[i], key=lambda e: o.rank[e])


def _rev_rank_lists(m: RevealsMatrix) -> list[list[int]]:
    return [_row_bits(m.rev[r]).tolist() for r in range(m.num_events)]


def _tarjan(adj: list[list[int]]) -> list[int]:
    """Component index per node (iterative Tarjan)."""
    n = len(adj)
    index = [-1] * n
    low = [0] * n
    on = [False] * n
    comp = [-1] * n
    stack: list[int] = []
    counter = 0
    ncomp = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on[root] = True
        while work:
            v, i = work[-1]
            if i < len(adj[v]):
                work[-1] = (v, i + 1)
                w = adj[v][i]
                if index[w] == -1:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on[w] = True
                    work.append((w, 0))
                elif on[w]:
                    low[v] = min(low[v], index[w])
                continue
            work.pop()
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
            if low[v] == index[v]:
                while True:
                    w = stack.pop()
                    on[w] = False
                    comp[w] = ncomp
                    if w == v:
                        break
                ncomp += 1
    return comp


def _equal_rows(m: RevealsMatrix) -> list[int]:
    seen: dict[bytes, int] = {}
    comp = []
    for r in range(m.num_events):
        comp.append(seen.setdefault(np.asarray(m.rev[r]).tobytes(), len(seen)))
    return comp


def compute_facets(m: RevealsMatrix, method: str = "auto") -> FacetPartition:
    """Strongly connected components of the reveals digraph.

    Classes are ordered so that revealed classes come first (a class that
    reveals another is listed after it); ties go to the smaller minimum rank.
    With ``method="auto"`` a matrix computed by conflict-set inclusion, which
    is a preorder, is grouped by identical rows; other matrices go through
    Tarjan's algorithm.
    """
    n = m.num_events
    if method == "auto":
        method = "rows" if m.variant == "inclusion" else "tarjan"
    if method == "rows":
        comp = _equal_rows(m)
    elif method == "tarjan":
        comp = _tarjan(_rev_rank_lists(m))
    else:
        raise ValueError(f"unknown method {method!r}")
    ncomp = max(comp, default=-1) + 1
    members: list[list[int]] = [[] for _ in range(ncomp)]
    for r in range(n):
        members[comp[r]].append(r)

    # condensation edges: class A -> B when A reveals B
    out: list[set[int]] = [set() for _ in range(ncomp)]
    for a in range(ncomp):
        rows = members[a] if method == "tarjan" else members[a][:1]
        for r in rows:
            for q in _row_bits(m.rev[r]).tolist():
                b = comp[q]
                if b != a:
                    out[a].add(b)
    pending = [len(o) for o in out]
    into: list[list[int]] = [[] for _ in range(ncomp)]
    for a in range(ncomp):
        for b in out[a]:
            into[b].append(a)
    ready = [(members[a][0], a) for a in range(ncomp) if pending[a] == 0]
    heapq.heapify(ready)
    seq = []
    while ready:
        _, a = heapq.heappop(ready)
        seq.append(a)
        for b in into[a]:
            pending[b] -= 1
            if pending[b] == 0:
                heapq.heappush(ready, (members[b][0], b))
    if len(seq) != ncomp:
        raise RuntimeError("condensation is not acyclic")
    order = m.order
    classes = []
    class_of = [0] * n
    for i, a in enumerate(seq):
        ids = [int(order[r]) for r in members[a]]
        for e in ids:
            class_of[e] = i
        classes.append(EventSet.of(n, ids))
    return FacetPartition(tuple(classes), tuple(class_of))


# -- quotient ---------------------------------------------------------------


@dataclass(frozen=True)
class QuotientNet:
    occ: OccurrenceNet
    members: tuple[tuple[int, ...], ...]  # source events per quotient event, in chain order
    kept_conditions: tuple[int, ...]  # source condition per quotient condition
    dropped_conditions: tuple[int, ...]

    def expand(self, events) -> frozenset[int]:
        """Source events behind a set of quotient events."""
        return frozenset(e for q in events for e in self.members[q])

    def to_dot(self) -> str:
        return self.occ.to_dot(wide=True)


def chain_order(o: OccurrenceNet, members) -> list[int]:
    """Members in a depth-first topological order.

    After an event is emitted, the members it enables are preferred over
    older ready ones, so causal chains stay together.
    """
    inside = set(members)
    pending = {e: sum(1 for p in o.direct_predecessors(e) if p in inside) for e in inside}
    stack = sorted((e for e in inside if pending[e] == 0), key=lambda e: o.rank[e], reverse=True)
    out = []
    while stack:
        e = stack.pop()
        out.append(e)
        ready = []
        for s in o.direct_successors(e):
            if s in inside:
                pending[s] -= 1
                if pending[s] == 0:
                    ready.append(s)
        stack.extend(sorted(ready, key=lambda s: o.rank[s], reverse=True))
    return out


def quotient(o: OccurrenceNet, p: FacetPartition) -> QuotientNet:
    """Contract every facet into one event.

    A condition disappears when its producer and all of its (at least one)
    consumers sit in the same facet; every other condition is kept.
    """
    if len(p.class_of) != o.num_events:
        raise ValueError("partition does not cover the net")
    cls = p.class_of
    kept, dropped = [], []
    for c in o.conditions:
        inner = (
            c.producer is not None
            and c.consumers
            and all(cls[f] == cls[c.producer] for f in c.consumers)
        )
        (dropped if inner else kept).append(c.id)
    where = {c: i for i, c in enumerate(kept)}
    members = [chain_order(o, list(p.classes[i])) for i in range(len(p))]
    events = []
    for i, mem in enumerate(members):
        pre = sorted({where[c] for e in mem for c in o.events[e].pre if c in where})
        post = sorted({where[c] for e in mem for c in o.events[e].post if c in where})
        events.append(("".join(o.events[e].name for e in mem), pre, post))
    q = OccurrenceNet.from_arcs(
        [o.conditions[c].name for c in kept],
        events,
        net=o.net,
        condition_labels=[o.conditions[c].label for c in kept],
    )
    return QuotientNet(q, tuple(tuple(m) for m in members), tuple(kept), tuple(dropped))
