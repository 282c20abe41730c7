"""Occurrence nets: causality, conflict, concurrency, configurations and cuts."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

from .net import PetriNet


class StructureError(ValueError):
    """An occurrence-net axiom is violated."""


class EventSet:
    """Fixed-width bit vector over the events of one net.

    Backed by a Python int, so unions and subset tests run at C speed.
    """

    __slots__ = ("width", "bits")

    def __init__(self, width: int, bits: int = 0):
        if bits >> width:
            raise ValueError("bits outside the set width")
        self.width = width
        self.bits = bits

    @classmethod
    def of(cls, width: int, members: Iterable[int]) -> "EventSet":
        bits = 0
        for i in members:
            if not 0 <= i < width:
                raise IndexError(i)
            bits |= 1 << i
        return cls(width, bits)

    def __contains__(self, i: int) -> bool:
        return 0 <= i < self.width and (self.bits >> i) & 1 == 1

    def __iter__(self) -> Iterator[int]:
        return iter_bits(self.bits)

    def __len__(self) -> int:
        return self.bits.bit_count()

    def __bool__(self) -> bool:
        return self.bits != 0

    def __eq__(self, other) -> bool:
        if isinstance(other, EventSet):
            return self.width == other.width and self.bits == other.bits
        if isinstance(other, (set, frozenset)):
            return set(self) == other
        return NotImplemented

    def __hash__(self) -> int:
        return hash((self.width, self.bits))

    def _same(self, other: "EventSet") -> None:
        if self.width != other.width:
            raise ValueError("event sets of different widths")

    def __or__(self, other: "EventSet") -> "EventSet":
        self._same(other)
        return EventSet(self.width, self.bits | other.bits)

    def __and__(self, other: "EventSet") -> "EventSet":
        self._same(other)
        return EventSet(self.width, self.bits & other.bits)

    def __sub__(self, other: "EventSet") -> "EventSet":
        self._same(other)
        return EventSet(self.width, self.bits & ~other.bits)

    def issubset(self, other: "EventSet") -> bool:
        self._same(other)
        return self.bits & ~other.bits == 0

    def issuperset(self, other: "EventSet") -> bool:
        return other.issubset(self)

    def __repr__(self) -> str:
        return f"EventSet({sorted(self)})"


def iter_bits(bits: int) -> Iterator[int]:
    while bits:
        low = bits & -bits
        yield low.bit_length() - 1
        bits ^= low


@dataclass(frozen=True)
class Condition:
    id: int
    name: str
    label: int | None  # place id when the net is an unfolding
    producer: int | None
    consumers: tuple[int, ...]


@dataclass(frozen=True)
class Event:
    id: int
    name: str
    label: int | None  # transition id when the net is an unfolding
    pre: tuple[int, ...]
    post: tuple[int, ...]


@dataclass(frozen=True)
class Configuration:
    events: EventSet

    def __contains__(self, e: int) -> bool:
        return e in self.events

    def __iter__(self):
        return iter(self.events)

    def __len__(self):
        return len(self.events)


class OccurrenceNet:
    """A finite occurrence net ``(C, E, F, C0)``, optionally labelled into a :class:`PetriNet`.

    Build one with :meth:`from_arcs`.  Instances are immutable after
    construction; derived data (heights, topological order) is computed once.
    """

    def __init__(
        self,
        conditions: Sequence[Condition],
        events: Sequence[Event],
        net: PetriNet | None = None,
        validate: bool = True,
    ):
        self.conditions = tuple(conditions)
        self.events = tuple(events)
        self.net = net
        self.initial_conditions = tuple(c.id for c in self.conditions if c.producer is None)
        self._check_flow()
        self._preds = [self._find_preds(e) for e in range(len(self.events))]
        self.heights = self._compute_heights()
        self.order = tuple(sorted(range(len(self.events)), key=lambda e: (self.heights[e], e)))
        self.rank = [0] * len(self.events)
        for r, e in enumerate(self.order):
            self.rank[e] = r
        if validate:
            self.validate()

    @classmethod
    def from_arcs(
        cls,
        condition_names: Sequence[str],
        events: Sequence[tuple[str, Iterable[int], Iterable[int]]],
        net: PetriNet | None = None,
        condition_labels: Sequence[int | None] | None = None,
        event_labels: Sequence[int | None] | None = None,
        validate: bool = True,
    ) -> "OccurrenceNet":
        """``events`` holds ``(name, preset condition ids, postset condition ids)``."""
        nc = len(condition_names)
        producer: list[int | None] = [None] * nc
        consumers: list[list[int]] = [[] for _ in range(nc)]
        evs = []
        for eid, (name, pre, post) in enumerate(events):
            pre_t = tuple(sorted(set(pre)))
            post_t = tuple(sorted(set(post)))
            for c in pre_t + post_t:
                if not 0 <= c < nc:
                    raise StructureError(f"event {name} references unknown condition {c}")
            for c in post_t:
                if producer[c] is not None:
                    raise StructureError(f"condition {condition_names[c]} has two producers (backward branching)")
                producer[c] = eid
            for c in pre_t:
                consumers[c].append(eid)
            label = event_labels[eid] if event_labels is not None else None
            evs.append(Event(eid, name, label, pre_t, post_t))
        conds = [
            Condition(
                c,
                condition_names[c],
                condition_labels[c] if condition_labels is not None else None,
                producer[c],
                tuple(consumers[c]),
            )
            for c in range(nc)
        ]
        return cls(conds, evs, net=net, validate=validate)

    # -- structure ----------------------------------------------------------

    @property
    def num_events(self) -> int:
        return len(self.events)

    @property
    def num_conditions(self) -> int:
        return len(self.conditions)

    def _check_flow(self) -> None:
        for e in self.events:
            for c in e.post:
                if self.conditions[c].producer != e.id:
                    raise StructureError(f"condition {c} producer mismatch")
            for c in e.pre:
                if e.id not in self.conditions[c].consumers:
                    raise StructureError(f"condition {c} consumer mismatch")

    def _compute_heights(self) -> list[int]:
        n = len(self.events)
        preds = self._preds
        indeg = [len(p) for p in preds]
        succs: list[list[int]] = [[] for _ in range(n)]
        for e in range(n):
            for p in preds[e]:
                succs[p].append(e)
        heights = [0] * n
        stack = [e for e in range(n) if indeg[e] == 0]
        done = 0
        while stack:
            e = stack.pop()
            done += 1
            heights[e] = 1 + max((heights[p] for p in preds[e]), default=0)
            for s in succs[e]:
                indeg[s] -= 1
                if indeg[s] == 0:
                    stack.append(s)
        if done != n:
            raise StructureError("flow relation has a cycle")
        return heights

    def _find_preds(self, e: int) -> list[int]:
        out = {self.conditions[c].producer for c in self.events[e].pre}
        out.discard(None)
        return sorted(out)

    def direct_predecessors(self, e: int) -> list[int]:
        """Events producing a condition in the preset of ``e``."""
        return self._preds[e]

    def direct_successors(self, e: int) -> list[int]:
        return sorted({s for c in self.events[e].post for s in self.conditions[c].consumers})

    def competitors(self, e: int) -> list[int]:
        """Events other than ``e`` sharing a preset condition with it."""
        return sorted({s for c in self.events[e].pre for s in self.conditions[c].consumers} - {e})

    def validate(self) -> None:
        """Check the occurrence-net axioms not already enforced by construction."""
        # backward branching and acyclicity are checked while building.
        for e in range(self.num_events):
            owner: dict[int, int] = {}
            for f in self.cone(e):
                for c in self.events[f].pre:
                    if owner.setdefault(c, f) != f:
                        raise StructureError(f"event {self.events[e].name} is in self-conflict")

    def event_by_name(self, name: str) -> int:
        for ev in self.events:
            if ev.name == name:
                return ev.id
        raise KeyError(name)

    def condition_by_name(self, name: str) -> int:
        for c in self.conditions:
            if c.name == name:
                return c.id
        raise KeyError(name)

    def names(self, events: Iterable[int]) -> list[str]:
        return [self.events[e].name for e in events]

    # -- causality and conflict --------------------------------------------

    def cone_bits(self, e: int) -> int:
        bits = 0
        stack = [e]
        while stack:
            f = stack.pop()
            if (bits >> f) & 1:
                continue
            bits |= 1 << f
            stack.extend(self.direct_predecessors(f))
        return bits

    def cone(self, e: int) -> Configuration:
        return Configuration(EventSet(self.num_events, self.cone_bits(e)))

    def precone(self, e: int) -> Configuration:
        return Configuration(EventSet(self.num_events, self.cone_bits(e) & ~(1 << e)))

    def _condition_cone(self, c: int) -> int:
        p = self.conditions[c].producer
        return 0 if p is None else self.cone_bits(p)

    def _choices(self, cone: int) -> dict[int, int]:
        """Condition -> the event of ``cone`` consuming it (unique in a configuration)."""
        out: dict[int, int] = {}
        for f in iter_bits(cone):
            for c in self.events[f].pre:
                out[c] = f
        return out

    def _cones_conflict(self, a: int, b: int) -> bool:
        ca, cb = self._choices(a), self._choices(b)
        if len(cb) < len(ca):
            ca, cb = cb, ca
        return any(cb.get(c, f) != f for c, f in ca.items())

    def events_conflict(self, e: int, f: int) -> bool:
        return self._cones_conflict(self.cone_bits(e), self.cone_bits(f))

    def causal_le(self, e: int, f: int) -> bool:
        return (self.cone_bits(f) >> e) & 1 == 1

    def relation_of(self, c1: int, c2: int) -> str:
        """Classify two conditions as ``equal``, ``causal``, ``conflict`` or ``concurrent``."""
        if c1 == c2:
            return "equal"
        k1, k2 = self._condition_cone(c1), self._condition_cone(c2)
        consumed1 = {c for f in iter_bits(k1) for c in self.events[f].pre}
        consumed2 = {c for f in iter_bits(k2) for c in self.events[f].pre}
        if c1 in consumed2 or c2 in consumed1:
            return "causal"
        if self._cones_conflict(k1, k2):
            return "conflict"
        return "concurrent"

    # -- configurations -----------------------------------------------------

    def event_set(self, events: Iterable[int]) -> EventSet:
        return EventSet.of(self.num_events, events)

    def is_configuration(self, events: EventSet | Iterable[int]) -> bool:
        es = events if isinstance(events, EventSet) else self.event_set(events)
        used: dict[int, int] = {}
        for e in es:
            for p in self.direct_predecessors(e):
                if p not in es:
                    return False
            for c in self.events[e].pre:
                if used.setdefault(c, e) != e:
                    return False
        return True

    def cut(self, config: Configuration | EventSet | Iterable[int]) -> frozenset[int]:
        es = _as_set(self, config)
        if not self.is_configuration(es):
            raise StructureError("not a configuration")
        produced = set(self.initial_conditions)
        consumed = set()
        for e in es:
            produced.update(self.events[e].post)
            consumed.update(self.events[e].pre)
        return frozenset(produced - consumed)

    def cut_and_mark(self, config) -> tuple[frozenset[int], frozenset[int]]:
        """Return ``(Cut(C), Mark(C))``; the net must be labelled."""
        cut = self.cut(config)
        labels = [self.conditions[c].label for c in cut]
        if None in labels:
            raise StructureError("conditions carry no place labels")
        return cut, frozenset(labels)

    def height(self, e: int) -> int:
        return self.heights[e]

    def prefix_height(self, events: Iterable[int] | None = None) -> int:
        if events is None:
            return max(self.heights, default=0)
        return max((self.heights[e] for e in events), default=0)

    def topological_order(self) -> tuple[int, ...]:
        return self.order

    # -- derived views ------------------------------------------------------

    def restrict(self, events: Iterable[int]) -> tuple["OccurrenceNet", list[int], list[int]]:
        """The prefix ``O[E']`` for a downward-closed event set.

        Returns the new net plus old-id lists for its events and conditions.
        """
        keep = sorted(set(events))
        for e in keep:
            for p in self.direct_predecessors(e):
                if p not in keep:
                    raise StructureError("event set is not downward-closed")
        ev_map = {e: i for i, e in enumerate(keep)}
        conds = sorted(set(self.initial_conditions) | {c for e in keep for c in self.events[e].post})
        c_map = {c: i for i, c in enumerate(conds)}
        new = OccurrenceNet.from_arcs(
            [self.conditions[c].name for c in conds],
            [
                (self.events[e].name, [c_map[c] for c in self.events[e].pre], [c_map[c] for c in self.events[e].post])
                for e in keep
            ],
            net=self.net,
            condition_labels=[self.conditions[c].label for c in conds],
            event_labels=[self.events[e].label for e in keep],
            validate=False,
        )
        return new, keep, conds

    def postfix(self, config) -> "OccurrenceNet":
        """The net remaining after ``config``, rooted at its cut.

        Events in conflict with ``config`` are dropped along with their
        descendants, so the result is again an occurrence net.
        """
        es = _as_set(self, config)
        cut = self.cut(es)
        consumed = {c for e in es for c in self.events[e].pre}
        dead = set()
        for e in self.order:
            if e in es:
                continue
            if any(c in consumed for c in self.events[e].pre) or any(
                p in dead for p in self.direct_predecessors(e)
            ):
                dead.add(e)
        keep = [e for e in range(self.num_events) if e not in es and e not in dead]
        conds = sorted(set(cut) | {c for e in keep for c in self.events[e].post})
        c_map = {c: i for i, c in enumerate(conds)}
        return OccurrenceNet.from_arcs(
            [self.conditions[c].name for c in conds],
            [
                (self.events[e].name, [c_map[c] for c in self.events[e].pre], [c_map[c] for c in self.events[e].post])
                for e in keep
            ],
            net=self.net,
            condition_labels=[self.conditions[c].label for c in conds],
            event_labels=[self.events[e].label for e in keep],
        )

    def to_dot(self, cutoffs: Iterable[int] = (), wide: bool = False) -> str:
        cut = set(cutoffs)
        lines = ["digraph occnet {", "  rankdir=TB;"]
        for c in self.conditions:
            lines.append(f'  "c{c.id}_{c.name}" [shape=circle];')
        shape = "box, width=1.5" if wide else "box"
        for e in self.events:
            extra = ", peripheries=2" if e.id in cut else ""
            lines.append(f'  "e{e.id}_{e.name}" [shape={shape}{extra}];')
        for e in self.events:
            en = f'"e{e.id}_{e.name}"'
            for c in e.pre:
                lines.append(f'  "c{c}_{self.conditions[c].name}" -> {en};')
            for c in e.post:
                lines.append(f'  {en} -> "c{c}_{self.conditions[c].name}";')
        lines.append("}")
        return "\n".join(lines) + "\n"


def _as_set(o: OccurrenceNet, config) -> EventSet:
    if isinstance(config, Configuration):
        return config.events
    if isinstance(config, EventSet):
        return config
    return o.event_set(config)

