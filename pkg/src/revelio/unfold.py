"""Unfolding prefixes of safe nets under pluggable cutoff criteria."""

from __future__ import annotations

import heapq
import os
import time
from dataclasses import dataclass

import numpy as np

from .net import NetError, PetriNet
from .occnet import EventSet, OccurrenceNet, iter_bits


class UnsafeNetError(NetError):
    pass


class ResourceLimitError(RuntimeError):
    def __init__(self, message: str, timeout: bool = False):
        super().__init__(message)
        self.timeout = timeout


@dataclass(frozen=True)
class CutoffPolicy:
    kind: str  # "level" | "mcmillan" | "height" | "events"
    bound: int = 0

    def __post_init__(self):
        if self.kind not in ("level", "mcmillan", "height", "events"):
            raise ValueError(f"unknown cutoff kind {self.kind!r}")
        if self.kind != "mcmillan" and self.bound < 1:
            raise ValueError(f"{self.kind} bound must be >= 1")

    @classmethod
    def level(cls, i: int) -> "CutoffPolicy":
        return cls("level", i)

    @classmethod
    def mcmillan(cls) -> "CutoffPolicy":
        return cls("mcmillan", 0)

    @classmethod
    def height_bound(cls, h: int) -> "CutoffPolicy":
        return cls("height", h)

    @classmethod
    def event_bound(cls, n: int) -> "CutoffPolicy":
        return cls("events", n)

    @classmethod
    def parse(cls, spec: str) -> "CutoffPolicy":
        """Parse ``level:N``, ``mcmillan``, ``height:N`` or ``events:N``."""
        if spec == "mcmillan":
            return cls.mcmillan()
        kind, _, num = spec.partition(":")
        if kind not in ("level", "height", "events") or not num.isdigit():
            raise ValueError(f"bad cutoff spec {spec!r}")
        return cls(kind, int(num))

    def __str__(self) -> str:
        return "mcmillan" if self.kind == "mcmillan" else f"{self.kind}:{self.bound}"


@dataclass(frozen=True)
class UnfoldingPrefix:
    """A finite prefix of the unfolding of ``net``.

    ``occ`` carries the labelling: condition labels are place ids, event
    labels transition ids.  ``complete_height`` is the largest height up to
    which every event of the full unfolding is present.  ``exhausted`` means
    no extension was left unexplored except below cutoffs.
    """

    occ: OccurrenceNet
    net: PetriNet
    marking_of_event: tuple[frozenset[int], ...]
    cutoff_events: frozenset[int]
    policy: CutoffPolicy
    levels: tuple[int, ...] | None
    complete_height: int
    exhausted: bool

    @property
    def num_events(self) -> int:
        return self.occ.num_events

    @property
    def height(self) -> int:
        return self.occ.prefix_height()

    @property
    def is_full(self) -> bool:
        """True when the prefix is the entire (finite) unfolding."""
        return self.exhausted and not self.cutoff_events

    def label_of_event(self, e: int) -> int:
        return self.occ.events[e].label

    def label_of_condition(self, c: int) -> int:
        return self.occ.conditions[c].label

    def dump(self) -> str:
        """Deterministic text dump, re-readable with :func:`parse_prefix_dump`."""
        return dump_occnet(
            self.occ,
            self.net.name,
            self.cutoff_events,
            policy=self.policy,
            complete_height=self.complete_height,
        )

    def to_dot(self) -> str:
        return self.occ.to_dot(cutoffs=self.cutoff_events)


def dump_occnet(o: OccurrenceNet, title: str, cutoffs=(), **fields) -> str:
    """Prefix-dump text for any occurrence net; ``fields`` go into the header."""
    cut = set(cutoffs)
    policy = fields.pop("policy", None)
    tokens = ["# prefix", title]
    if policy is not None:
        tokens.append(f"policy={policy}")
    tokens += [f"events={o.num_events}", f"conditions={o.num_conditions}"]
    tokens += [f"{k}={v}" for k, v in fields.items() if v is not None]
    head = " ".join(tokens)
    out = [head]
    for c in o.conditions:
        prod = "-" if c.producer is None else f"e{c.producer}"
        out.append(f"c{c.id} {c.name} {prod}")
    for e in o.events:
        pre = ",".join(str(c) for c in e.pre)
        post = ",".join(str(c) for c in e.post)
        line = f"e{e.id} {e.name} pre={{{pre}}} post={{{post}}}"
        if e.id in cut:
            line += " cutoff"
        out.append(line)
    return "\n".join(out) + "\n"


def parse_prefix_dump(text: str) -> tuple[OccurrenceNet, frozenset[int], dict[str, str]]:
    """Read a prefix dump back as an unlabelled occurrence net (names only).

    Returns the net, the cutoff event ids and the header fields.
    """
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("# prefix"):
        raise ValueError("not a prefix dump")
    header = dict(tok.split("=", 1) for tok in lines[0].split()[3:] if "=" in tok)
    cond_names: dict[int, str] = {}
    events: list[tuple[int, str, list[int], list[int]]] = []
    cutoffs = set()
    for ln in lines[1:]:
        if ln.startswith("#"):
            continue
        parts = ln.split()
        if parts[0].startswith("c"):
            cond_names[int(parts[0][1:])] = parts[1]
        elif parts[0].startswith("e"):
            eid = int(parts[0][1:])
            pre = _id_list(parts[2], "pre=")
            post = _id_list(parts[3], "post=")
            events.append((eid, parts[1], pre, post))
            if len(parts) > 4 and parts[4] == "cutoff":
                cutoffs.add(eid)
        else:
            raise ValueError(f"bad prefix line {ln!r}")
    if sorted(cond_names) != list(range(len(cond_names))):
        raise ValueError("condition ids must be dense")
    events.sort()
    if [e[0] for e in events] != list(range(len(events))):
        raise ValueError("event ids must be dense")
    occ = OccurrenceNet.from_arcs(
        [cond_names[i] for i in range(len(cond_names))],
        [(name, pre, post) for _, name, pre, post in events],
        validate=False,
    )
    return occ, frozenset(cutoffs), header


def _id_list(tok: str, prefix: str) -> list[int]:
    if not tok.startswith(prefix + "{") or not tok.endswith("}"):
        raise ValueError(f"bad id list {tok!r}")
    body = tok[len(prefix) + 1 : -1]
    return [int(x) for x in body.split(",")] if body else []


DEFAULT_MEM_LIMIT = 2 << 30


def _bit_indices(words: np.ndarray) -> np.ndarray:
    """Positions of the set bits in a uint64 word array."""
    return np.flatnonzero(np.unpackbits(np.ascontiguousarray(words).view(np.uint8), bitorder="little"))


class _Builder:
    def __init__(self, net: PetriNet, policy: CutoffPolicy, max_events: int, timeout: float | None):
        self.net = net
        self.policy = policy
        self.max_events = max_events
        self.deadline = None if timeout is None else time.monotonic() + timeout
        self.track_cones = policy.kind in ("level", "mcmillan")
        self.consumers = [net.consumers(p) for p in range(net.num_places)]
        self.m0 = net.initial_marking
        # conditions
        self.c_place: list[int] = []
        self.c_producer: list[int | None] = []
        # co relation as a growable square bit matrix; column updates are vectorised
        self.co = np.zeros((256, 4), dtype=np.uint64)
        self.place_all = np.zeros((net.num_places, 4), dtype=np.uint64)
        self.place_active = np.zeros((net.num_places, 4), dtype=np.uint64)
        self.c0_bits = 0
        # events
        self.e_trans: list[int] = []
        self.e_pre: list[tuple[int, ...]] = []
        self.e_post: list[tuple[int, ...]] = []
        self.e_height: list[int] = []
        self.e_prod: list[int] = []
        self.e_cons: list[int] = []
        self.e_cone: list[int] = []
        self.e_marking: list[frozenset[int]] = []
        self.e_level: list[int] = []
        self.cutoffs: set[int] = set()
        self.by_marking: dict[frozenset[int], list[int]] = {}
        self.best_size: dict[frozenset[int], int] = {}
        self.heap: list[tuple] = []
        self.beyond_bound = False
        self.mem_limit = int(os.environ.get("REVELIO_MAX_MEM") or DEFAULT_MEM_LIMIT)

    def _grow(self, need: int) -> None:
        cap = self.co.shape[0]
        if need <= cap:
            return
        while cap < need:
            cap = (cap * 3 // 2 + 63) // 64 * 64
        words = cap // 64
        if cap * words * 8 > self.mem_limit:
            raise ResourceLimitError(
                f"co-relation matrix for {cap} conditions exceeds the memory cap of {self.mem_limit} bytes"
            )
        co = np.zeros((cap, words), dtype=np.uint64)
        co[: self.co.shape[0], : self.co.shape[1]] = self.co
        self.co = co
        for name in ("place_all", "place_active"):
            old = getattr(self, name)
            grown = np.zeros((old.shape[0], words), dtype=np.uint64)
            grown[:, : old.shape[1]] = old
            setattr(self, name, grown)

    def _new_condition(self, place: int, producer: int | None, co: np.ndarray, active: bool) -> int:
        c = len(self.c_place)
        if np.any(co & self.place_all[place]):
            raise UnsafeNetError(
                f"place {self.net.place_names[place]!r} can hold two tokens (concurrent conditions share its label)"
            )
        self.c_place.append(place)
        self.c_producer.append(producer)
        self.co[c] = co
        bit = np.uint64(1 << (c & 63))
        self.place_all[place, c >> 6] |= bit
        if active:
            self.place_active[place, c >> 6] |= bit
        return c

    def _push_extensions(self, c: int) -> None:
        p = self.c_place[c]
        w = c >> 6
        base = self.co[c, : w + 1].copy()
        base[w] &= np.uint64((1 << (c & 63)) - 1)
        for t in self.consumers[p]:
            others = sorted(self.net.pre[t] - {p})
            self._combine(t, others, 0, base, [c], w + 1)

    def _combine(self, t: int, others: list[int], k: int, mask: np.ndarray, chosen: list[int], nw: int) -> None:
        if k == len(others):
            preset = tuple(sorted(chosen))
            height = 1 + max(
                (self.e_height[self.c_producer[d]] for d in preset if self.c_producer[d] is not None), default=0
            )
            if self.policy.kind == "height" and height > self.policy.bound:
                self.beyond_bound = True
                return
            if self.policy.kind == "mcmillan":
                cone = 0
                for d in preset:
                    prod = self.c_producer[d]
                    if prod is not None:
                        cone |= self.e_cone[prod]
                key = (cone.bit_count() + 1, height, t, preset)
            else:
                key = (height, t, preset)
            heapq.heappush(self.heap, key)
            return
        cands = mask & self.place_active[others[k], :nw]
        if not cands.any():
            return
        for d in _bit_indices(cands).tolist():
            chosen.append(d)
            self._combine(t, others, k + 1, mask & self.co[d, :nw], chosen, nw)
            chosen.pop()

    def _add_event(self, t: int, preset: tuple[int, ...], height: int) -> None:
        e = len(self.e_trans)
        preds = {self.c_producer[d] for d in preset} - {None}
        pre_bits = 0
        for d in preset:
            pre_bits |= 1 << d
        prod = 0
        cons = pre_bits
        cone = 1 << e
        for f in preds:
            prod |= self.e_prod[f]
            cons |= self.e_cons[f]
            if self.track_cones:
                cone |= self.e_cone[f]
        first = len(self.c_place)
        post_places = sorted(self.net.post[t])
        post_bits = ((1 << len(post_places)) - 1) << first
        prod |= post_bits
        cut = (self.c0_bits | prod) & ~cons
        marking = frozenset([self.c_place[c] for c in iter_bits(cut & ~post_bits)] + post_places)

        cutoff = False
        level = 0
        kind = self.policy.kind
        if kind == "level":
            level = 1 if marking == self.m0 else 0
            for f in self.by_marking.get(marking, ()):
                if (cone >> f) & 1:
                    level = max(level, self.e_level[f] + 1)
            self.by_marking.setdefault(marking, []).append(e)
            cutoff = level >= self.policy.bound
        elif kind == "mcmillan":
            size = cone.bit_count()
            best = self.best_size.get(marking)
            cutoff = marking == self.m0 or (best is not None and best < size)
            if best is None or size < best:
                self.best_size[marking] = size

        self.e_trans.append(t)
        self.e_pre.append(preset)
        self.e_height.append(height)
        self.e_prod.append(prod)
        self.e_cons.append(cons)
        self.e_cone.append(cone if self.track_cones else 0)
        self.e_marking.append(marking)
        self.e_level.append(level)
        if cutoff:
            self.cutoffs.add(e)

        self._grow(first + len(post_places))
        co_base = self.co[preset[0]].copy()
        for d in preset[1:]:
            co_base &= self.co[d]
        new = []
        for i, p in enumerate(post_places):
            row = co_base.copy()
            for j in range(len(post_places)):
                if j != i:
                    row[(first + j) >> 6] |= np.uint64(1 << ((first + j) & 63))
            new.append(self._new_condition(p, e, row, not cutoff))
        self.e_post.append(tuple(new))
        if new:
            rows = _bit_indices(co_base)
            for c in new:
                self.co[rows, c >> 6] |= np.uint64(1 << (c & 63))
        if not cutoff:
            for c in new:
                self._push_extensions(c)

    def run(self) -> UnfoldingPrefix:
        net = self.net
        for t in range(net.num_transitions):
            if not net.pre[t]:
                raise UnsafeNetError(f"transition {net.transition_names[t]!r} has an empty preset")
        init = sorted(net.initial_marking)
        all_init = (1 << len(init)) - 1
        self._grow(len(init))
        for i, p in enumerate(init):
            row = np.zeros(self.co.shape[1], dtype=np.uint64)
            for j in range(len(init)):
                if j != i:
                    row[j >> 6] |= np.uint64(1 << (j & 63))
            self._new_condition(p, None, row, True)
        self.c0_bits = all_init
        for c in range(len(init)):
            self._push_extensions(c)

        complete_height = None
        exhausted = True
        while self.heap:
            item = self.heap[0]
            height, t, preset = item[-3:]
            if self.policy.kind == "events" and len(self.e_trans) >= self.policy.bound:
                complete_height = height - 1
                exhausted = False
                break
            heapq.heappop(self.heap)
            if len(self.e_trans) >= self.max_events:
                raise ResourceLimitError(f"event limit {self.max_events} exceeded")
            if self.deadline is not None and len(self.e_trans) % 64 == 0 and time.monotonic() > self.deadline:
                raise ResourceLimitError("timeout", timeout=True)
            self._add_event(t, preset, height)

        if complete_height is None:
            if self.policy.kind == "height":
                complete_height = self.policy.bound
            elif self.cutoffs:
                complete_height = min(self.e_height[e] for e in self.cutoffs)
            else:
                complete_height = max(self.e_height, default=0)
        if self.policy.kind == "height":
            exhausted = exhausted and not self.beyond_bound
        return self._finish(complete_height, exhausted)

    def _finish(self, complete_height: int, exhausted: bool) -> UnfoldingPrefix:
        net = self.net
        occ = OccurrenceNet.from_arcs(
            [net.place_names[p] for p in self.c_place],
            [(net.transition_names[t], pre, post) for t, pre, post in zip(self.e_trans, self.e_pre, self.e_post)],
            net=net,
            condition_labels=self.c_place,
            event_labels=self.e_trans,
            validate=False,
        )
        return UnfoldingPrefix(
            occ=occ,
            net=net,
            marking_of_event=tuple(self.e_marking),
            cutoff_events=frozenset(self.cutoffs),
            policy=self.policy,
            levels=tuple(self.e_level) if self.policy.kind == "level" else None,
            complete_height=complete_height,
            exhausted=exhausted,
        )


def unfold(
    net: PetriNet,
    policy: CutoffPolicy,
    max_events: int = 1_000_000,
    timeout: float | None = None,
) -> UnfoldingPrefix:
    """Unfold ``net`` until the policy stops extension.

    Extensions are taken in ascending ``(height, transition, preset)`` order
    (``(cone size, ...)`` for McMillan cutoffs), which makes event ids
    reproducible.  Cutoff events are included but never extended.
    """
    return _Builder(net, policy, max_events, timeout).run()


# -- level-i cutoffs --------------------------------------------------------


def compute_levels(occ: OccurrenceNet, markings, m0: frozenset[int]) -> list[int]:
    """For each event, the largest ``i`` with the event in ``L_i`` (0 if none)."""
    levels = [0] * occ.num_events
    cones = [0] * occ.num_events
    for e in occ.order:
        cone = 1 << e
        for p in occ.direct_predecessors(e):
            cone |= cones[p]
        cones[e] = cone
        lvl = 1 if markings[e] == m0 else 0
        for f in iter_bits(cone & ~(1 << e)):
            if markings[f] == markings[e]:
                lvl = max(lvl, levels[f] + 1)
        levels[e] = lvl
    return levels


def level_cutoffs(p: UnfoldingPrefix, i: int) -> tuple[EventSet, EventSet]:
    """Return ``(L_i, L_i^min)`` over the events of ``p``."""
    if i < 1:
        raise ValueError("level must be >= 1")
    levels = p.levels
    if levels is None:
        levels = compute_levels(p.occ, p.marking_of_event, p.net.initial_marking)
    occ = p.occ
    li = [e for e in range(occ.num_events) if levels[e] >= i]
    li_bits = 0
    for e in li:
        li_bits |= 1 << e
    minimal = [e for e in li if not (occ.cone_bits(e) & ~(1 << e)) & li_bits]
    return EventSet.of(occ.num_events, li), EventSet.of(occ.num_events, minimal)


def exact_ui(p: UnfoldingPrefix, i: int) -> UnfoldingPrefix:
    """Trim a level-``j`` prefix (``j >= i``) to the union of cones of ``L_i^min``."""
    if p.policy.kind != "level" or p.policy.bound < i:
        raise ValueError(f"exact_ui({i}) needs a prefix built with level:{i} or deeper")
    _, minimal = level_cutoffs(p, i)
    keep = 0
    for e in minimal:
        keep |= p.occ.cone_bits(e)
    kept = list(iter_bits(keep))
    occ, old_events, _ = p.occ.restrict(kept)
    new_of = {old: new for new, old in enumerate(old_events)}
    dropped_heights = [p.occ.heights[e] for e in range(p.occ.num_events) if not (keep >> e) & 1]
    complete = p.complete_height
    if dropped_heights:
        complete = min(complete, min(dropped_heights) - 1)
    return UnfoldingPrefix(
        occ=occ,
        net=p.net,
        marking_of_event=tuple(p.marking_of_event[e] for e in old_events),
        cutoff_events=frozenset(new_of[e] for e in minimal),
        policy=p.policy,
        levels=tuple(p.levels[e] for e in old_events) if p.levels is not None else None,
        complete_height=max(complete, 0),
        exhausted=False,
    )


def level2_prefix(net: PetriNet, max_events: int = 1_000_000, timeout: float | None = None) -> UnfoldingPrefix:
    return exact_ui(unfold(net, CutoffPolicy.level(2), max_events=max_events, timeout=timeout), 2)


def bound_k(net: PetriNet, max_events: int = 1_000_000, timeout: float | None = None) -> int:
    """Height of the exact level-2 prefix; bounds the extra depth a witness search needs."""
    return level2_prefix(net, max_events, timeout).height


# -- matching events across prefixes ----------------------------------------


class HistoryIndex:
    """Interns node histories so events of different prefixes of one unfolding can be matched."""

    def __init__(self):
        self._ids: dict[tuple, int] = {}

    def _intern(self, key: tuple) -> int:
        return self._ids.setdefault(key, len(self._ids))

    def keys(self, p: UnfoldingPrefix) -> list[int]:
        occ = p.occ
        ckey: list[int | None] = [None] * occ.num_conditions
        ekey: list[int] = [0] * occ.num_events
        for c in occ.initial_conditions:
            ckey[c] = self._intern(("c", occ.conditions[c].label, None))
        for e in occ.order:
            ev = occ.events[e]
            ekey[e] = self._intern(("e", ev.label, tuple(sorted(ckey[c] for c in ev.pre))))
            for c in ev.post:
                ckey[c] = self._intern(("c", occ.conditions[c].label, ekey[e]))
        return ekey


def match_events(src: UnfoldingPrefix, dst: UnfoldingPrefix) -> dict[int, int]:
    """Map event ids of ``src`` to the same unfolding events in ``dst`` (where present)."""
    idx = HistoryIndex()
    ks = idx.keys(src)
    kd = idx.keys(dst)
    where = {k: e for e, k in enumerate(kd)}
    return {e: where[k] for e, k in enumerate(ks) if k in where}

