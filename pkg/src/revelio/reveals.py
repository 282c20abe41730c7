"""Reveals relation over finite occurrence nets.

``reveals_all`` runs three bit-row passes (successors, conflicts, reveals)
over the events in topological order.  ``check_pair`` decides a single pair
on the unfolding of a net by searching for a witness event up to the height
bound ``max(H(x), H(y)) + K``.
"""

from __future__ import annotations

import io
import os
import struct
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _backend
from .net import PetriNet
from .occnet import EventSet, OccurrenceNet
from .unfold import CutoffPolicy, ResourceLimitError, UnfoldingPrefix, bound_k, match_events, unfold

MAGIC = b"RVL1"
STREAM_THRESHOLD = 65_536
VARIANTS = ("inclusion", "listing")


# -- storage ----------------------------------------------------------------


def _max_mem() -> int | None:
    raw = os.environ.get("REVELIO_MAX_MEM")
    return int(raw) if raw else None


def _alloc(n: int, words: int, spill: bool) -> np.ndarray:
    if not spill:
        return np.zeros((n, words), dtype=np.uint64)
    fh = tempfile.TemporaryFile(prefix="revelio-")
    return np.memmap(fh, dtype=np.uint64, mode="w+", shape=(max(n, 1), max(words, 1)))[:n]


def _needs_spill(n: int, words: int) -> bool:
    limit = _max_mem()
    if limit is not None and 3 * n * words * 8 > limit:
        return True
    return n > int(os.environ.get("REVELIO_STREAM_THRESHOLD", STREAM_THRESHOLD))


def _row_bits(row: np.ndarray) -> np.ndarray:
    return np.flatnonzero(np.unpackbits(np.ascontiguousarray(row).view(np.uint8), bitorder="little"))


def _csr(lists: Sequence[Sequence[int]]) -> tuple[np.ndarray, np.ndarray]:
    ptr = np.zeros(len(lists) + 1, dtype=np.int64)
    ptr[1:] = np.cumsum([len(x) for x in lists])
    idx = np.fromiter((v for x in lists for v in x), dtype=np.int64, count=int(ptr[-1]))
    return ptr, idx


def _spans(rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """First and last nonzero word per row; empty rows get ``lo > hi``."""
    n, words = rows.shape
    lo = np.full(n, words, dtype=np.int64)
    hi = np.full(n, -1, dtype=np.int64)
    block = 4096
    for s in range(0, n, block):
        nz = np.asarray(rows[s : s + block]) != 0
        has = nz.any(axis=1)
        first = nz.argmax(axis=1)
        last = words - 1 - nz[:, ::-1].argmax(axis=1)
        lo[s : s + block] = np.where(has, first, words)
        hi[s : s + block] = np.where(has, last, -1)
    return lo, hi


# -- the matrix -------------------------------------------------------------


@dataclass
class RevealsMatrix:
    """post/conf/rev rows for every event.

    Rows are stored in topological-rank space (``order[r]`` is the event id of
    rank ``r``); the accessors take and return event ids.
    """

    order: np.ndarray
    rank: np.ndarray
    heights: np.ndarray
    post: np.ndarray
    conf: np.ndarray
    rev: np.ndarray
    trusted_height: int
    variant: str = "inclusion"
    names: tuple[str, ...] = ()
    timings: dict[str, float] = field(default_factory=dict)
    checks: int = 0
    backend: str = ""

    @property
    def num_events(self) -> int:
        return len(self.order)

    def _bit(self, rows: np.ndarray, x: int, y: int) -> bool:
        q = int(self.rank[y])
        return bool((int(rows[int(self.rank[x]), q >> 6]) >> (q & 63)) & 1)

    def reveals(self, x: int, y: int) -> bool:
        return self._bit(self.rev, x, y)

    def conflict(self, x: int, y: int) -> bool:
        return self._bit(self.conf, x, y)

    def causal_le(self, x: int, y: int) -> bool:
        return self._bit(self.post, x, y)

    def _ids(self, rows: np.ndarray, e: int) -> list[int]:
        return sorted(self.order[_row_bits(rows[int(self.rank[e])])].tolist())

    def rev_ids(self, e: int) -> list[int]:
        return self._ids(self.rev, e)

    def conf_ids(self, e: int) -> list[int]:
        return self._ids(self.conf, e)

    def post_ids(self, e: int) -> list[int]:
        return self._ids(self.post, e)

    def rev_set(self, e: int) -> EventSet:
        return EventSet.of(self.num_events, self.rev_ids(e))

    def conf_set(self, e: int) -> EventSet:
        return EventSet.of(self.num_events, self.conf_ids(e))

    def post_set(self, e: int) -> EventSet:
        return EventSet.of(self.num_events, self.post_ids(e))

    def is_trusted(self, e: int) -> bool:
        return int(self.heights[e]) <= self.trusted_height

    def exact_pair(self, x: int, y: int) -> bool:
        """Whether the rows are guaranteed exact for the pair ``(x, y)``."""
        return self.is_trusted(x) and self.is_trusted(y)

    def report(self) -> dict:
        return {
            "events": self.num_events,
            "t_post_s": self.timings.get("post", 0.0),
            "t_conf_s": self.timings.get("conf", 0.0),
            "t_rev_s": self.timings.get("rev", 0.0),
            "checks": self.checks,
            "trusted_height": self.trusted_height,
            "backend": self.backend,
        }

    # -- export --

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write("event,reveals,conflicts,successors\n")
        for e in range(self.num_events):
            cols = [" ".join(map(str, ids)) for ids in (self.rev_ids(e), self.conf_ids(e), self.post_ids(e))]
            out.write(f"{e},{cols[0]},{cols[1]},{cols[2]}\n")
        return out.getvalue()

    def _id_rows(self, rows: np.ndarray, block: int = 2048):
        """Yield packed rows re-indexed by event id, LSB first."""
        n = self.num_events
        rank = np.asarray(self.rank)
        for s in range(0, n, block):
            ids = np.arange(s, min(n, s + block))
            sub = np.asarray(rows[rank[ids]])
            bits = np.unpackbits(np.ascontiguousarray(sub).view(np.uint8), axis=1, bitorder="little")[:, :n]
            yield np.packbits(bits[:, rank], axis=1, bitorder="little")

    def to_binary(self) -> bytes:
        out = io.BytesIO()
        out.write(MAGIC)
        out.write(struct.pack("<I", self.num_events))
        for rows in (self.post, self.conf, self.rev):
            for chunk in self._id_rows(rows):
                out.write(chunk.tobytes())
        return out.getvalue()

    @classmethod
    def from_binary(cls, data: bytes, heights: Sequence[int] | None = None) -> "RevealsMatrix":
        """Load a dump; rows come back indexed by id (identity order)."""
        if data[:4] != MAGIC:
            raise ValueError("not a reveals dump (bad magic)")
        (n,) = struct.unpack("<I", data[4:8])
        nbytes = (n + 7) // 8
        words = (n + 63) // 64
        expected = 8 + 3 * n * nbytes
        if len(data) != expected:
            raise ValueError(f"truncated dump: {len(data)} bytes, expected {expected}")
        mats = []
        for k in range(3):
            raw = np.frombuffer(data, dtype=np.uint8, count=n * nbytes, offset=8 + k * n * nbytes).reshape(n, nbytes)
            padded = np.zeros((n, words * 8), dtype=np.uint8)
            padded[:, :nbytes] = raw
            mats.append(padded.view(np.uint64).copy())
        hs = np.asarray(heights if heights is not None else np.zeros(n), dtype=np.int64)
        ident = np.arange(n, dtype=np.int64)
        return cls(ident, ident.copy(), hs, *mats, trusted_height=int(hs.max(initial=0)))


# -- the three passes -------------------------------------------------------


class _Layout:
    """Rank-space adjacency of an occurrence net."""

    def __init__(self, o: OccurrenceNet):
        self.n = o.num_events
        self.words = max(1, (self.n + 63) // 64)
        order = list(o.order)
        rank = o.rank
        self.order = np.asarray(order, dtype=np.int64)
        self.rank = np.asarray(rank, dtype=np.int64)
        self.heights = np.asarray(o.heights, dtype=np.int64)
        preds = [[rank[p] for p in o.direct_predecessors(e)] for e in order]
        succs: list[list[int]] = [[] for _ in order]
        for r, ps in enumerate(preds):
            for p in ps:
                succs[p].append(r)
        comps = [[rank[f] for f in o.competitors(e)] for e in order]
        self.pred = _csr(preds)
        self.succ = _csr(succs)
        self.comp = _csr(comps)
        # contiguous rank ranges of equal height
        hs = [o.heights[e] for e in order]
        self.levels = []
        s = 0
        for r in range(1, self.n + 1):
            if r == self.n or hs[r] != hs[s]:
                self.levels.append((s, r))
                s = r
        self.spill = _needs_spill(self.n, self.words)


def pass1_post(o: OccurrenceNet, backend: str | None = None, layout: _Layout | None = None) -> np.ndarray:
    """Rows ``post(e) = {e' | e <= e'}`` (rank space)."""
    lay = layout or _Layout(o)
    _, k = _backend.get(backend)
    post = _alloc(lay.n, lay.words, lay.spill)
    k.pass1_post(post, *lay.succ)
    return post


def pass2_conf(o: OccurrenceNet, post: np.ndarray, backend: str | None = None, layout: _Layout | None = None):
    """Rows ``conf(e) = {e' | e # e'}`` (rank space)."""
    lay = layout or _Layout(o)
    _, k = _backend.get(backend)
    conf = _alloc(lay.n, lay.words, lay.spill)
    k.pass2_conf(conf, post, *lay.pred, *lay.comp)
    return conf


def pass3_rev(
    o: OccurrenceNet,
    conf: np.ndarray,
    variant: str = "inclusion",
    threads: int = 1,
    backend: str | None = None,
    layout: _Layout | None = None,
) -> tuple[np.ndarray, int]:
    """Rows ``rev(e)`` plus the number of subset checks made.

    ``variant="inclusion"`` tests candidates with conflict-set inclusion; the
    ``"listing"`` variant compares against rev rows computed so far and
    exists only for differential testing.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    lay = layout or _Layout(o)
    name, k = _backend.get(backend)
    rev = _alloc(lay.n, lay.words, lay.spill)
    if lay.n == 0:
        return rev, 0
    if variant == "listing":
        return rev, int(k.pass3_rev_listing(rev, conf, *lay.pred))
    lo, hi = _spans(conf)
    if threads <= 1 or name != "compiled":
        return rev, int(k.pass3_rev(rev, conf, *lay.pred, lo, hi, 0, lay.n))
    # rows of one height never depend on each other
    checks = 0
    with ThreadPoolExecutor(max_workers=threads) as pool:
        for s, t in lay.levels:
            step = max(1, -(-(t - s) // threads))
            jobs = [pool.submit(k.pass3_rev, rev, conf, *lay.pred, lo, hi, a, min(t, a + step)) for a in range(s, t, step)]
            checks += sum(int(j.result()) for j in jobs)
    return rev, checks


def reveals_all(
    o: OccurrenceNet,
    k: int | None = None,
    complete_height: int | None = None,
    threads: int = 1,
    variant: str = "inclusion",
    backend: str | None = None,
) -> RevealsMatrix:
    """Run the three passes over ``o``.

    Without ``k`` the net is taken as a whole (finite) unfolding and every
    row is trusted.  With ``k`` the net is a prefix of a deeper unfolding,
    complete up to ``complete_height`` (default: its height), and only
    events at height ``<= complete_height - k`` get trusted rows.
    """
    name, _ = _backend.get(backend)
    lay = _Layout(o)
    times = {}
    t0 = time.perf_counter()
    post = pass1_post(o, backend, lay)
    t1 = time.perf_counter()
    conf = pass2_conf(o, post, backend, lay)
    t2 = time.perf_counter()
    rev, checks = pass3_rev(o, conf, variant, threads, backend, lay)
    t3 = time.perf_counter()
    times = {"post": t1 - t0, "conf": t2 - t1, "rev": t3 - t2}
    height = o.prefix_height()
    if k is None:
        trusted = height
    else:
        base = height if complete_height is None else complete_height
        trusted = max(0, base - k)
    return RevealsMatrix(
        lay.order,
        lay.rank,
        lay.heights,
        post,
        conf,
        rev,
        trusted,
        variant=variant,
        names=tuple(ev.name for ev in o.events),
        timings=times,
        checks=checks,
        backend=name,
    )


def reveals_of_prefix(p: UnfoldingPrefix, k: int | None = None, **kw) -> RevealsMatrix:
    """``reveals_all`` on an unfolding prefix; a full unfolding is trusted everywhere."""
    if p.is_full:
        return reveals_all(p.occ, **kw)
    if k is None:
        k = bound_k(p.net)
    return reveals_all(p.occ, k=k, complete_height=p.complete_height, **kw)


# -- single-event queries ---------------------------------------------------


def witness_predicate(m: RevealsMatrix, x: int, y: int, z: int) -> bool:
    """``z # y`` and not ``z # x``: ``z`` refutes ``x`` revealing ``y``."""
    return m.conflict(z, y) and not m.conflict(z, x)


def conflict_bits(o: OccurrenceNet, x: int) -> int:
    """Events in conflict with ``x``, by one topological sweep (id-indexed bits)."""
    cone = o.cone_bits(x)
    bad = 0
    for e in o.order:
        if (cone >> e) & 1:
            continue
        if any((bad >> p) & 1 for p in o.direct_predecessors(e)):
            bad |= 1 << e
            continue
        for c in o.events[e].pre:
            if any(f != e and (cone >> f) & 1 for f in o.conditions[c].consumers):
                bad |= 1 << e
                break
    return bad


def root_conflicts(o: OccurrenceNet, y: int) -> EventSet:
    """The causally minimal events in conflict with ``y``."""
    bad = conflict_bits(o, y)
    roots = 0
    for e in o.order:
        if (bad >> e) & 1 and not any((bad >> p) & 1 for p in o.direct_predecessors(e)):
            roots |= 1 << e
    return EventSet(o.num_events, roots)


@dataclass(frozen=True)
class WitnessReport:
    found: bool
    witness: int | None
    explored: int
    height_bound_used: int


@dataclass(frozen=True)
class PairVerdict:
    reveals: bool
    x: int
    y: int
    report: WitnessReport
    prefix: UnfoldingPrefix

    @property
    def witness_name(self) -> str | None:
        w = self.report.witness
        return None if w is None else self.prefix.occ.events[w].name

    def line(self) -> str:
        if self.reveals:
            return f"reveals explored={self.report.explored}"
        return f"not-reveals witness={self.witness_name} id={self.report.witness} explored={self.report.explored}"


def search_witness(o: OccurrenceNet, x: int, y: int, height_bound: int) -> WitnessReport:
    """Look for ``z`` with ``z # y`` and not ``z # x`` among events up to ``height_bound``.

    A causally minimal witness competes with some event of ``cone(y)`` for a
    condition, so only consumers of those "goal" conditions are candidates;
    events in conflict with ``x`` are pruned up front.
    """
    cone_y = o.cone_bits(y)
    cone_x = o.cone_bits(x)
    goals = {c for f in range(o.num_events) if (cone_y >> f) & 1 for c in o.events[f].pre}
    useless = conflict_bits(o, x) | cone_x | cone_y
    explored = 0
    for z in o.order:
        if o.heights[z] > height_bound:
            break
        if (useless >> z) & 1:
            continue
        explored += 1
        if any(c in goals for c in o.events[z].pre):
            return WitnessReport(True, z, explored, height_bound)
    return WitnessReport(False, None, explored, height_bound)


def _resolve(spec, p: UnfoldingPrefix) -> int | None:
    occ = p.occ
    if isinstance(spec, int):
        if not 0 <= spec < occ.num_events:
            raise KeyError(f"no event with id {spec}")
        return spec
    if isinstance(spec, str):
        try:
            t = p.net.transition(spec)
        except KeyError:
            raise KeyError(f"no transition named {spec!r}") from None
        for e in occ.order:
            if occ.events[e].label == t:
                return e
        return None
    return _resolve_via(list(spec), p)


def _resolve_via(seq: list[str], p: UnfoldingPrefix) -> int | None:
    """The event reached by firing ``seq`` from the initial cut (last transition)."""
    if not seq:
        raise KeyError("empty firing sequence")
    occ = p.occ
    cut = set(occ.initial_conditions)
    last = None
    for name in seq:
        t = p.net.transition(name)
        found = None
        for c in sorted(cut):
            for e in occ.conditions[c].consumers:
                if occ.events[e].label == t and set(occ.events[e].pre) <= cut:
                    found = e
                    break
            if found is not None:
                break
        if found is None:
            if p.is_full or occ.prefix_height() < len(seq):
                return None
            raise KeyError(f"transition {name!r} is not enabled after the given prefix of the sequence")
        cut -= set(occ.events[found].pre)
        cut |= set(occ.events[found].post)
        last = found
    return last


def _selector_depth(spec) -> int | None:
    if isinstance(spec, (list, tuple)):
        return len(spec)
    return None


def check_pair(
    net: PetriNet,
    x_spec,
    y_spec,
    prefix: UnfoldingPrefix | None = None,
    k: int | None = None,
    max_events: int = 1_000_000,
    timeout: float | None = None,
    search_limit: int = 64,
) -> PairVerdict:
    """Decide whether ``x`` reveals ``y`` on the unfolding of ``net``.

    Selectors are event ids of ``prefix`` (required for ids), transition
    names (the first instance in topological order) or firing sequences
    (the event of the last transition).  The verdict is exact: the search
    covers every event up to ``max(H(x), H(y)) + K``.
    """
    deadline = None if timeout is None else time.monotonic() + timeout

    def left() -> float | None:
        if deadline is None:
            return None
        rest = deadline - time.monotonic()
        if rest <= 0:
            raise ResourceLimitError("timeout", timeout=True)
        return rest

    if k is None:
        k = bound_k(net, max_events=max_events, timeout=left())

    # locate both events in some prefix
    if prefix is not None:
        base = prefix
    else:
        if isinstance(x_spec, int) or isinstance(y_spec, int):
            raise ValueError("event ids need the prefix they refer to")
        depth = max(_selector_depth(x_spec) or 1, _selector_depth(y_spec) or 1)
        base = None
        while True:
            base = unfold(net, CutoffPolicy.height_bound(depth), max_events=max_events, timeout=left())
            x0, y0 = _resolve(x_spec, base), _resolve(y_spec, base)
            if x0 is not None and y0 is not None:
                break
            if base.is_full or depth >= search_limit:
                missing = x_spec if x0 is None else y_spec
                raise KeyError(f"selector {missing!r} resolves to no event")
            depth += 1
    x, y = _resolve(x_spec, base), _resolve(y_spec, base)
    if x is None or y is None:
        raise KeyError(f"selector {x_spec if x is None else y_spec!r} resolves to no event")

    bound = max(base.occ.heights[x], base.occ.heights[y]) + k
    if base.is_full or base.complete_height >= bound:
        deep = base
    else:
        deep = unfold(net, CutoffPolicy.height_bound(bound), max_events=max_events, timeout=left())
        mapping = match_events(base, deep)
        x, y = mapping[x], mapping[y]
    o = deep.occ

    if x == y or o.causal_le(y, x):
        return PairVerdict(True, x, y, WitnessReport(False, None, 0, bound), deep)
    if o.events_conflict(x, y):
        return PairVerdict(False, x, y, WitnessReport(True, x, 0, bound), deep)
    report = search_witness(o, x, y, bound)
    return PairVerdict(not report.found, x, y, report, deep)
