"""Safe place/transition nets: model, text formats and the token game."""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

Marking = frozenset  # frozenset[int] of place ids; safe nets only


class ParseError(ValueError):
    """Raised for malformed net files.  ``line`` is 1-based, or None."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NetError(ValueError):
    pass


class NotEnabledError(NetError):
    pass


@dataclass(frozen=True)
class PetriNet:
    """A net ``(P, T, F, M0)`` with the flow stored as pre/post adjacency.

    Place and transition ids are dense indices into ``place_names`` and
    ``transition_names``.
    """

    name: str
    place_names: tuple[str, ...]
    transition_names: tuple[str, ...]
    pre: tuple[frozenset[int], ...]
    post: tuple[frozenset[int], ...]
    initial_marking: frozenset[int]
    _place_ix: dict = field(default=None, init=False, repr=False, compare=False)
    _trans_ix: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.place_names:
            raise NetError("net must contain at least one place")
        if len(self.pre) != len(self.transition_names) or len(self.post) != len(self.transition_names):
            raise NetError("pre/post must have one entry per transition")
        for kind, names in (("place", self.place_names), ("transition", self.transition_names)):
            seen = set()
            for n in names:
                if not n:
                    raise NetError(f"empty {kind} name")
                if n in seen:
                    raise NetError(f"duplicate {kind} name {n!r}")
                seen.add(n)
        np_ = len(self.place_names)
        for t, (pre, post) in enumerate(zip(self.pre, self.post)):
            if not pre and not post:
                raise NetError(f"transition {self.transition_names[t]!r} is isolated")
            if any(not 0 <= p < np_ for p in pre | post):
                raise NetError(f"transition {self.transition_names[t]!r} references an unknown place")
        if any(not 0 <= p < np_ for p in self.initial_marking):
            raise NetError("initial marking references an unknown place")
        object.__setattr__(self, "_place_ix", {n: i for i, n in enumerate(self.place_names)})
        object.__setattr__(self, "_trans_ix", {n: i for i, n in enumerate(self.transition_names)})

    @property
    def num_places(self) -> int:
        return len(self.place_names)

    @property
    def num_transitions(self) -> int:
        return len(self.transition_names)

    def place(self, name: str) -> int:
        return self._place_ix[name]

    def transition(self, name: str) -> int:
        return self._trans_ix[name]

    def consumers(self, p: int) -> list[int]:
        return [t for t, pre in enumerate(self.pre) if p in pre]

    def marking_names(self, m: Iterable[int]) -> list[str]:
        return [self.place_names[p] for p in sorted(m)]


@dataclass(frozen=True)
class Run:
    transitions: tuple[int, ...]
    markings: tuple[frozenset[int], ...]


@dataclass(frozen=True)
class SafetyVerdict:
    status: str  # "safe" | "unsafe" | "inconclusive"
    run: Run | None = None
    place: int | None = None  # the place reaching two tokens
    states: int = 0

    @property
    def safe(self) -> bool:
        return self.status == "safe"


def build_net(
    name: str,
    places: Sequence[str],
    transitions: Sequence[str],
    arcs: Iterable[tuple[str, str]],
    marked: Iterable[str] = (),
) -> PetriNet:
    """Build a net from names; arc direction is inferred from node kinds."""
    p_ix = {n: i for i, n in enumerate(places)}
    t_ix = {n: i for i, n in enumerate(transitions)}
    pre: list[set[int]] = [set() for _ in transitions]
    post: list[set[int]] = [set() for _ in transitions]
    for src, dst in arcs:
        if src in p_ix and dst in t_ix:
            pre[t_ix[dst]].add(p_ix[src])
        elif src in t_ix and dst in p_ix:
            post[t_ix[src]].add(p_ix[dst])
        else:
            raise NetError(f"bad arc {src} -> {dst}")
    return PetriNet(
        name,
        tuple(places),
        tuple(transitions),
        tuple(frozenset(s) for s in pre),
        tuple(frozenset(s) for s in post),
        frozenset(p_ix[p] for p in marked),
    )


# -- canonical text format ---------------------------------------------------

_NAME = r"[^\s#]+"
_LINE_NET = re.compile(rf"^net\s+({_NAME})$")
_LINE_PLACE = re.compile(rf"^place\s+({_NAME})(\s+\*)?$")
_LINE_TRANS = re.compile(rf"^trans\s+({_NAME})$")
_LINE_ARC = re.compile(rf"^arc\s+({_NAME})\s*->\s*({_NAME})$")


def parse_canonical(text: str) -> PetriNet:
    """Parse the line-oriented ``net/place/trans/arc`` format."""
    name = None
    places: list[str] = []
    marked: list[str] = []
    transitions: list[str] = []
    kinds: dict[str, tuple[str, int]] = {}
    arcs: list[tuple[str, str, int]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if name is None:
            m = _LINE_NET.match(line)
            if not m:
                raise ParseError("expected 'net <name>' header", lineno)
            name = m.group(1)
            continue
        if m := _LINE_PLACE.match(line):
            n = m.group(1)
            if n in kinds:
                raise ParseError(f"duplicate name {n!r}", lineno)
            kinds[n] = ("place", lineno)
            places.append(n)
            if m.group(2):
                marked.append(n)
        elif m := _LINE_TRANS.match(line):
            n = m.group(1)
            if n in kinds:
                raise ParseError(f"duplicate name {n!r}", lineno)
            kinds[n] = ("trans", lineno)
            transitions.append(n)
        elif m := _LINE_ARC.match(line):
            arcs.append((m.group(1), m.group(2), lineno))
        else:
            raise ParseError(f"syntax error: {line!r}", lineno)
    if name is None:
        raise ParseError("empty input; expected 'net <name>' header")
    if not places:
        raise ParseError("net must contain at least one place")
    checked = []
    for src, dst, lineno in arcs:
        for n in (src, dst):
            if n not in kinds:
                raise ParseError(f"arc references undeclared node {n!r}", lineno)
        if kinds[src][0] == kinds[dst][0]:
            raise ParseError(f"arc {src} -> {dst} connects two {kinds[src][0]}s", lineno)
        checked.append((src, dst))
    try:
        return build_net(name, places, transitions, checked, marked)
    except NetError as exc:
        raise ParseError(str(exc)) from exc


def serialize_canonical(net: PetriNet) -> str:
    overlap = set(net.place_names) & set(net.transition_names)
    if overlap:
        raise NetError(f"names shared by places and transitions: {sorted(overlap)}")
    out = [f"net {net.name}"]
    for p, n in enumerate(net.place_names):
        out.append(f"place {n}" + (" *" if p in net.initial_marking else ""))
    for n in net.transition_names:
        out.append(f"trans {n}")
    for t, n in enumerate(net.transition_names):
        for p in sorted(net.pre[t]):
            out.append(f"arc {net.place_names[p]} -> {n}")
        for p in sorted(net.post[t]):
            out.append(f"arc {n} -> {net.place_names[p]}")
    return "\n".join(out) + "\n"


# -- PEP low-level format (FORMAT_N2 subset) --------------------------------

_LL_ENTRY = re.compile(r'^(\d+)?"((?:[^"\\]|\\.)*)"(.*)$')
_LL_ARC = re.compile(r"^(\d+)([<>])(\d+)(.*)$")
# attribute tokens that may trail an entry: coordinates, letter+number flags
_LL_ATTR = re.compile(r"(-?\d+@-?\d+)|([A-Za-z])(-?\d+)?")
_LL_SECTIONS = {"PL", "TR", "TP", "PT"}
_LL_SKIPPED_SECTIONS = {"DBL", "DPL", "DTR"}  # block/layout declarations


def _ll_attrs(tail: str, lineno: int) -> dict[str, str]:
    attrs: dict[str, str] = {}
    pos = 0
    tail = tail.strip()
    while pos < len(tail):
        m = _LL_ATTR.match(tail, pos)
        if not m or m.end() == pos:
            raise ParseError(f"cannot parse entry attributes {tail[pos:]!r}", lineno)
        if m.group(2):
            attrs[m.group(2)] = m.group(3) or ""
        pos = m.end()
    return attrs


def parse_llnet(text: str) -> PetriNet:
    """Parse a PEP low-level net (``FORMAT_N2`` subset) into a :class:`PetriNet`."""
    lines = text.splitlines()
    section = None
    header: list[str] = []
    places: dict[int, tuple[str, bool]] = {}
    transitions: dict[int, str] = {}
    arcs: list[tuple[str, int, int, int]] = []
    next_id = {"PL": 1, "TR": 1}
    for lineno, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line:
            continue
        if len(header) < 3 and section is None:
            header.append(line)
            if len(header) == 1 and line != "PEP":
                raise ParseError("expected 'PEP' header", lineno)
            if len(header) == 2 and line not in ("PetriBox", "PTNet"):
                raise ParseError(f"unsupported net type {line!r}", lineno)
            if len(header) == 3 and line not in ("FORMAT_N2", "FORMAT_N"):
                raise ParseError(f"unsupported format {line!r}", lineno)
            continue
        if re.fullmatch(r"[A-Z]{2,4}", line):
            if line in _LL_SECTIONS or line in _LL_SKIPPED_SECTIONS:
                section = line
                continue
            raise ParseError(f"unsupported section {line!r}", lineno)
        if section is None:
            raise ParseError("entry outside any section", lineno)
        if section in _LL_SKIPPED_SECTIONS:
            continue
        if section in ("PL", "TR"):
            m = _LL_ENTRY.match(line)
            if not m:
                raise ParseError(f"malformed {section} entry {line!r}", lineno)
            ident = int(m.group(1)) if m.group(1) else next_id[section]
            next_id[section] = ident + 1
            name = m.group(2)
            attrs = _ll_attrs(m.group(3), lineno)
            if section == "PL":
                tokens = (int(attrs["M"]) if attrs["M"] else 1) if "M" in attrs else 0
                if tokens > 1:
                    raise ParseError("marking exceeds 1; only safe nets supported", lineno)
                if tokens < 0:
                    raise ParseError("negative marking", lineno)
                if ident in places:
                    raise ParseError(f"duplicate place id {ident}", lineno)
                places[ident] = (name, tokens == 1)
            else:
                if ident in transitions:
                    raise ParseError(f"duplicate transition id {ident}", lineno)
                transitions[ident] = name
        else:
            m = _LL_ARC.match(line)
            if not m:
                raise ParseError(f"malformed arc entry {line!r}", lineno)
            a, op, b = int(m.group(1)), m.group(2), int(m.group(3))
            attrs = _ll_attrs(m.group(4), lineno)
            if attrs.get("w", "1") not in ("", "1"):
                raise ParseError("weighted arcs are not supported", lineno)
            if section == "TP" and op != "<":
                raise ParseError(f"TP entries use '<', got {line!r}", lineno)
            if section == "PT" and op != ">":
                raise ParseError(f"PT entries use '>', got {line!r}", lineno)
            arcs.append((section, a, b, lineno))
    if len(header) < 3:
        raise ParseError("truncated PEP header")
    if not places:
        raise ParseError("net must contain at least one place")
    p_order = sorted(places)
    t_order = sorted(transitions)
    p_ix = {pid: i for i, pid in enumerate(p_order)}
    t_ix = {tid: i for i, tid in enumerate(t_order)}
    pre: list[set[int]] = [set() for _ in t_order]
    post: list[set[int]] = [set() for _ in t_order]
    for section, a, b, lineno in arcs:
        if section == "TP":
            t, p = a, b
        else:
            p, t = a, b
        if p not in p_ix:
            raise ParseError(f"arc references undeclared place {p}", lineno)
        if t not in t_ix:
            raise ParseError(f"arc references undeclared transition {t}", lineno)
        (post if section == "TP" else pre)[t_ix[t]].add(p_ix[p])
    try:
        return PetriNet(
            "net",
            tuple(places[i][0] for i in p_order),
            tuple(transitions[i] for i in t_order),
            tuple(frozenset(s) for s in pre),
            tuple(frozenset(s) for s in post),
            frozenset(p_ix[i] for i in p_order if places[i][1]),
        )
    except NetError as exc:
        raise ParseError(str(exc)) from exc


def load_net(text: str, name: str | None = None) -> PetriNet:
    """Parse either format, dispatching on the first non-blank line."""
    first = next((ln.strip() for ln in text.splitlines() if ln.strip()), "")
    if first == "PEP":
        net = parse_llnet(text)
        if name:
            net = PetriNet(name, net.place_names, net.transition_names, net.pre, net.post, net.initial_marking)
        return net
    return parse_canonical(text)


# -- token game --------------------------------------------------------------


def enabled(net: PetriNet, m: frozenset[int], t: int) -> bool:
    return net.pre[t] <= m


def fire(net: PetriNet, m: frozenset[int], t: int) -> frozenset[int]:
    pre, post = net.pre[t], net.post[t]
    if not pre <= m:
        raise NotEnabledError(f"{net.transition_names[t]} is not enabled")
    return (m - (pre - post)) | (post - pre)


def enabled_transitions(net: PetriNet, m: frozenset[int]) -> list[int]:
    return [t for t in range(net.num_transitions) if net.pre[t] <= m]


def replay(net: PetriNet, transitions: Sequence[int], start: frozenset[int] | None = None) -> Run:
    m = net.initial_marking if start is None else start
    markings = [m]
    for t in transitions:
        m = fire(net, m, t)
        markings.append(m)
    return Run(tuple(transitions), tuple(markings))


def reachable_markings(net: PetriNet, limit: int = 10**6) -> set[frozenset[int]]:
    """All reachable markings; raises if the net is unsafe or ``limit`` is hit."""
    verdict = check_safety(net, limit)
    if verdict.status != "safe":
        raise NetError(f"reachability {verdict.status}")
    seen = {net.initial_marking}
    todo = [net.initial_marking]
    while todo:
        m = todo.pop()
        for t in enabled_transitions(net, m):
            m2 = fire(net, m, t)
            if m2 not in seen:
                seen.add(m2)
                todo.append(m2)
    return seen


def check_safety(net: PetriNet, state_limit: int) -> SafetyVerdict:
    """Breadth-first exploration over multiset markings, up to ``state_limit`` states."""
    if state_limit < 1:
        raise ValueError("state_limit must be >= 1")
    np_ = net.num_places
    start = tuple(1 if p in net.initial_marking else 0 for p in range(np_))
    parent: dict[tuple, tuple | None] = {start: None}
    queue = deque([start])
    while queue:
        m = queue.popleft()
        for t in range(net.num_transitions):
            if any(m[p] < 1 for p in net.pre[t]):
                continue
            nxt = list(m)
            for p in net.pre[t] - net.post[t]:
                nxt[p] -= 1
            for p in net.post[t] - net.pre[t]:
                nxt[p] += 1
            m2 = tuple(nxt)
            if m2 in parent:
                continue
            parent[m2] = (m, t)
            over = next((p for p in range(np_) if m2[p] > 1), None)
            if over is not None:
                return SafetyVerdict("unsafe", _trace(parent, m2), over, len(parent))
            if len(parent) > state_limit:
                return SafetyVerdict("inconclusive", states=len(parent) - 1)
            queue.append(m2)
    return SafetyVerdict("safe", states=len(parent))


def _trace(parent: dict, m: tuple) -> Run:
    ts: list[int] = []
    ms: list[frozenset[int]] = []
    cur = m
    while True:
        ms.append(frozenset(p for p, k in enumerate(cur) if k))
        link = parent[cur]
        if link is None:
            break
        cur, t = link
        ts.append(t)
    return Run(tuple(reversed(ts)), tuple(reversed(ms)))
