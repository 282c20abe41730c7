"""Brute-force ground truth for small occurrence nets, plus random generators."""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass

from .net import PetriNet, build_net
from .occnet import EventSet, OccurrenceNet, iter_bits


class OracleLimitError(RuntimeError):
    pass


@dataclass(frozen=True)
class MaximalConfigSet:
    configs: tuple[EventSet, ...]

    def __len__(self) -> int:
        return len(self.configs)

    def __iter__(self):
        return iter(self.configs)

    def as_frozensets(self) -> set[frozenset[int]]:
        return {frozenset(c) for c in self.configs}


def enumerate_maximal(o: OccurrenceNet, limit: int = 10_000) -> MaximalConfigSet:
    """All maximal configurations of ``o``.

    Events are decided in topological order: take or skip.  Skipping an
    enabled event is only allowed when a later competitor might still take
    its condition, otherwise the result could not be maximal.  Every
    configuration is produced once because each is a distinct decision path.
    """
    n = o.num_events
    order = o.order
    rank = o.rank
    preds = [o.direct_predecessors(e) for e in range(n)]
    later_comp = [any(rank[f] > rank[e] for f in o.competitors(e)) for e in range(n)]
    out: list[EventSet] = []

    def maximal(taken: int, used: set[int]) -> bool:
        for e in range(n):
            if (taken >> e) & 1:
                continue
            if all((taken >> p) & 1 for p in preds[e]) and not any(c in used for c in o.events[e].pre):
                return False
        return True

    def walk(i: int, taken: int, used: set[int]) -> None:
        if i == n:
            if maximal(taken, used):
                if len(out) >= limit:
                    raise OracleLimitError(f"more than {limit} maximal configurations")
                out.append(EventSet(n, taken))
            return
        e = order[i]
        pre = o.events[e].pre
        ok = all((taken >> p) & 1 for p in preds[e]) and not any(c in used for c in pre)
        if ok:
            used.update(pre)
            walk(i + 1, taken | (1 << e), used)
            used.difference_update(pre)
            if not later_comp[e]:
                return
        walk(i + 1, taken, used)

    walk(0, 0, set())
    return MaximalConfigSet(tuple(out))


def oracle_reveals(mc: MaximalConfigSet, x: int, y: int) -> bool:
    """Every maximal configuration holding ``x`` also holds ``y``."""
    return all(y in c for c in mc if x in c)


def oracle_rev_rows(o: OccurrenceNet, mc: MaximalConfigSet | None = None) -> list[set[int]]:
    mc = mc if mc is not None else enumerate_maximal(o)
    sets = [frozenset(c) for c in mc]
    rows = []
    for x in range(o.num_events):
        holding = [c for c in sets if x in c]
        rows.append({y for y in range(o.num_events) if all(y in c for c in holding)})
    return rows


def naive_causal(o: OccurrenceNet) -> list[set[int]]:
    """``{e' | e <= e'}`` per event, from the cones."""
    n = o.num_events
    cones = [o.cone_bits(e) for e in range(n)]
    return [{f for f in range(n) if (cones[f] >> e) & 1} for e in range(n)]


def naive_conflicts(o: OccurrenceNet) -> list[set[int]]:
    """Conflict straight from the definition: some ``f <= e`` and ``f' <= e'``,
    ``f != f'``, share a preset condition."""
    n = o.num_events
    cones = [o.cone_bits(e) for e in range(n)]
    out = [set() for _ in range(n)]
    for e in range(n):
        for g in range(e + 1, n):
            hit = False
            for f in iter_bits(cones[e]):
                for f2 in iter_bits(cones[g]):
                    if f != f2 and set(o.events[f].pre) & set(o.events[f2].pre):
                        hit = True
                        break
                if hit:
                    break
            if hit:
                out[e].add(g)
                out[g].add(e)
    return out


def configurations(o: OccurrenceNet, limit: int = 100_000) -> list[frozenset[int]]:
    """Every configuration, by exploring the token game on ``o`` itself."""
    start = frozenset()
    seen = {start}
    todo = [start]
    while todo:
        cfg = todo.pop()
        used = {c for e in cfg for c in o.events[e].pre}
        for e in range(o.num_events):
            if e in cfg or any(c in used for c in o.events[e].pre):
                continue
            if all(p in cfg for p in o.direct_predecessors(e)):
                nxt = cfg | {e}
                if nxt not in seen:
                    if len(seen) >= limit:
                        raise OracleLimitError(f"more than {limit} configurations")
                    seen.add(nxt)
                    todo.append(nxt)
    return sorted(seen, key=lambda c: (len(c), sorted(c)))


def prefix_markings(o: OccurrenceNet, limit: int = 100_000) -> set[frozenset[int]]:
    """``Mark(C)`` over all configurations of a labelled prefix."""
    return {o.cut_and_mark(c)[1] for c in configurations(o, limit)}


# -- generators -------------------------------------------------------------


def random_occurrence_net(seed: int, n_events: int = 8, max_initial: int = 4, fork_p: float = 0.35) -> OccurrenceNet:
    """A random occurrence net with ``n_events`` events.

    Presets are co-sets drawn from the conditions so far; a condition that
    already has a consumer is picked again with probability ``fork_p`` to
    create conflicts, and presets of two or three conditions create joins.
    """
    rng = random.Random(seed)
    n_init = rng.randint(1, max_initial)
    co: list[int] = []
    consumed: list[bool] = []
    names: list[str] = []
    all_init = (1 << n_init) - 1
    for i in range(n_init):
        co.append(all_init & ~(1 << i))
        consumed.append(False)
        names.append(f"c{i}")
    events = []
    for k in range(n_events):
        nc = len(co)
        free = [c for c in range(nc) if not consumed[c]]
        used = [c for c in range(nc) if consumed[c]]
        pool = used if used and (not free or rng.random() < fork_p) else free
        first = rng.choice(pool)
        pre = [first]
        mask = co[first]
        want = rng.choices([1, 2, 3], weights=[5, 3, 1])[0]
        while len(pre) < want:
            cands = [c for c in iter_bits(mask)]
            if not cands:
                break
            pick = rng.choice(cands)
            pre.append(pick)
            mask &= co[pick]
        n_post = rng.choices([0, 1, 2, 3], weights=[1, 6, 4, 1])[0]
        base = -1
        for d in pre:
            base &= co[d]
        first_new = nc
        post_bits = ((1 << n_post) - 1) << first_new
        for j in range(n_post):
            c = first_new + j
            co.append((base | post_bits) & ~(1 << c))
            consumed.append(False)
            names.append(f"c{c}")
        for x in iter_bits(base):
            co[x] |= post_bits
        for d in pre:
            consumed[d] = True
        events.append((f"e{k}", sorted(pre), list(range(first_new, first_new + n_post))))
    return OccurrenceNet.from_arcs(names, events)


def occnet_digest(o: OccurrenceNet) -> str:
    """Stable digest of the structure (ids, names and arcs)."""
    h = hashlib.sha256()
    for c in o.conditions:
        h.update(f"c {c.id} {c.name}\n".encode())
    for e in o.events:
        h.update(f"e {e.id} {e.name} {list(e.pre)} {list(e.post)}\n".encode())
    return h.hexdigest()


def random_safe_net(seed: int, max_places: int = 8, max_components: int = 3, extra: int = 1) -> PetriNet:
    """A random cyclic safe net: synchronised state machines.

    Each component is a cycle of two or three local states holding exactly
    one token.  Up to ``extra`` further transitions move one or two
    components at once; every transition moves tokens inside components, so
    no place can ever hold two tokens.
    """
    rng = random.Random(seed)
    comps: list[list[str]] = []
    budget = max_places
    while budget >= 2 and len(comps) < max_components:
        size = rng.randint(2, min(3, budget))
        k = len(comps)
        comps.append([f"s{k}_{i}" for i in range(size)])
        budget -= size
        if rng.random() < 0.35:
            break
    places = [p for comp in comps for p in comp]
    marked = [comp[0] for comp in comps]
    transitions = []
    arcs = []
    tid = 0

    def add(moves):
        nonlocal tid
        name = f"t{tid}"
        tid += 1
        transitions.append(name)
        for src, dst in moves:
            arcs.append((src, name))
            arcs.append((name, dst))

    for comp in comps:
        for i, p in enumerate(comp):
            add([(p, comp[(i + 1) % len(comp)])])
    for _ in range(rng.randint(1, extra)):
        if len(comps) >= 2 and rng.random() < 0.7:
            a, b = rng.sample(range(len(comps)), 2)
            add([(rng.choice(comps[a]), rng.choice(comps[a])), (rng.choice(comps[b]), rng.choice(comps[b]))])
        else:
            comp = rng.choice(comps)
            add([(rng.choice(comp), rng.choice(comp))])
    return build_net(f"random{seed}", places, transitions, arcs, marked)

