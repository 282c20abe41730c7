import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from revelio.fixtures import figure1_net
from revelio.occnet import EventSet, OccurrenceNet, StructureError
from revelio.oracle import configurations, naive_conflicts, random_occurrence_net
from revelio.unfold import CutoffPolicy, unfold

seeds = st.integers(0, 5_000)


def names(o, ids):
    return {o.events[e].name for e in ids}


# -- structure ----------------------------------------------------------------


def test_topological_layers(fig2):
    ranks = {fig2.events[e].name: r for r, e in enumerate(fig2.order)}
    assert max(ranks[x] for x in "abc") < min(ranks[x] for x in "defg")
    assert max(ranks[x] for x in "defg") < min(ranks[x] for x in "hk")


def test_single_event():
    o = OccurrenceNet.from_arcs(["c"], [("e", [0], [])])
    assert o.topological_order() == (0,)


def test_equal_height_ties_by_id():
    o = OccurrenceNet.from_arcs(["c0", "c1"], [("x", [1], []), ("y", [0], [])])
    assert o.topological_order() == (0, 1)


def test_backward_branching_rejected():
    with pytest.raises(StructureError, match="two producers"):
        OccurrenceNet.from_arcs(["i", "j", "c"], [("a", [0], [2]), ("b", [1], [2])])


def test_self_conflict_rejected():
    # d needs both outputs of a fork on one condition
    conds = ["i", "x", "y"]
    events = [("a", [0], [1]), ("b", [0], [2]), ("d", [1, 2], [])]
    with pytest.raises(StructureError, match="self-conflict"):
        OccurrenceNet.from_arcs(conds, events)


def test_initial_conditions(fig2):
    assert [fig2.conditions[c].name for c in fig2.initial_conditions] == ["1", "2"]


# -- relations ----------------------------------------------------------------


def test_relation_conflict(fig2):
    assert fig2.relation_of(fig2.condition_by_name("3"), fig2.condition_by_name("4")) == "conflict"


def test_relation_concurrent(fig2):
    assert fig2.relation_of(fig2.condition_by_name("3"), fig2.condition_by_name("6")) == "concurrent"


def test_relation_equal(fig2):
    assert fig2.relation_of(5, 5) == "equal"


def test_relation_causal(fig2):
    assert fig2.relation_of(fig2.condition_by_name("4"), fig2.condition_by_name("8")) == "causal"


def test_siblings_concurrent(fig2):
    assert fig2.relation_of(fig2.condition_by_name("4"), fig2.condition_by_name("5")) == "concurrent"


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_trichotomy_exclusive_and_exhaustive(seed):
    o = random_occurrence_net(seed, 10)
    conf = naive_conflicts(o)
    for c1 in range(o.num_conditions):
        for c2 in range(o.num_conditions):
            r = o.relation_of(c1, c2)
            assert r == o.relation_of(c2, c1)
            p1, p2 = o.conditions[c1].producer, o.conditions[c2].producer
            if r == "conflict":
                assert p1 is not None and p2 is not None and p1 != p2 and p2 in conf[p1]


# -- cones --------------------------------------------------------------------


def test_cone_h(fig2, ev):
    assert names(fig2, fig2.cone(ev["h"])) == {"b", "e", "h"}


def test_cone_minimal(fig2, ev):
    assert names(fig2, fig2.cone(ev["a"])) == {"a"}


def test_precone_empty(fig2, ev):
    assert len(fig2.precone(ev["a"])) == 0


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_cones_are_configurations(seed):
    o = random_occurrence_net(seed, 12)
    for e in range(o.num_events):
        assert o.is_configuration(o.cone(e).events)


# -- conflict -----------------------------------------------------------------


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_conflict_symmetric_irreflexive_inherited(seed):
    o = random_occurrence_net(seed, 14)
    n = o.num_events
    for e in range(n):
        assert not o.events_conflict(e, e)
        for f in range(n):
            assert o.events_conflict(e, f) == o.events_conflict(f, e)
            if o.events_conflict(e, f):
                for g in range(n):
                    if o.causal_le(f, g):
                        assert o.events_conflict(e, g)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_causality_partial_order(seed):
    o = random_occurrence_net(seed, 12)
    n = o.num_events
    for a in range(n):
        assert o.causal_le(a, a)
        for b in range(n):
            if a != b and o.causal_le(a, b):
                assert not o.causal_le(b, a)
                assert o.heights[a] < o.heights[b]
            for c in range(n):
                if o.causal_le(a, b) and o.causal_le(b, c):
                    assert o.causal_le(a, c)


# -- configurations, cuts -----------------------------------------------------


def test_cut_b(fig2, ev):
    assert {fig2.conditions[c].name for c in fig2.cut([ev["b"]])} == {"4", "5"}


def test_cut_and_mark_on_unfolding():
    p = unfold(figure1_net(), CutoffPolicy.height_bound(3))
    b = next(e.id for e in p.occ.events if e.name == "b")
    cut, mark = p.occ.cut_and_mark([b])
    assert {p.net.place_names[x] for x in mark} == {"4", "5"}
    assert len(cut) == 2


def test_empty_configuration_cut():
    p = unfold(figure1_net(), CutoffPolicy.height_bound(1))
    cut, mark = p.occ.cut_and_mark([])
    assert cut == frozenset(p.occ.initial_conditions)
    assert mark == p.net.initial_marking


def test_cut_b_e(fig2, ev):
    assert {fig2.conditions[c].name for c in fig2.cut([ev["b"], ev["e"]])} == {"5", "8"}


def test_cut_rejects_non_configuration(fig2, ev):
    with pytest.raises(StructureError):
        fig2.cut([ev["a"], ev["b"]])
    with pytest.raises(StructureError):
        fig2.cut([ev["h"]])


def _linearizes(o, cfg):
    marked = set(o.initial_conditions)
    todo = set(cfg)
    while todo:
        ready = [e for e in sorted(todo) if set(o.events[e].pre) <= marked]
        if not ready:
            return False
        e = ready[0]
        marked -= set(o.events[e].pre)
        marked |= set(o.events[e].post)
        todo.remove(e)
    return True


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_configuration_iff_run(seed):
    o = random_occurrence_net(seed, 9)
    n = o.num_events
    for bits in range(1 << n):
        es = EventSet(n, bits)
        closed = all(p in es for e in es for p in o.direct_predecessors(e))
        if closed:
            assert o.is_configuration(es) == _linearizes(o, list(es))


def test_configurations_enumeration_fig2(fig2):
    cfgs = configurations(fig2)
    assert frozenset() in cfgs
    assert all(fig2.is_configuration(c) for c in cfgs)
    assert len(cfgs) == len(set(cfgs))
    assert frozenset(fig2.cone(fig2.event_by_name("h"))) in cfgs


# -- heights ------------------------------------------------------------------


def test_heights(fig2, ev):
    assert fig2.height(ev["b"]) == 1
    assert fig2.height(ev["e"]) == 2
    assert fig2.height(ev["h"]) == 3
    assert fig2.height(ev["a"]) == 1


def test_prefix_height(fig2):
    assert fig2.prefix_height() == 3
    assert OccurrenceNet.from_arcs(["c"], []).prefix_height() == 0


# -- views --------------------------------------------------------------------


def test_restrict_downward_closed(fig2, ev):
    sub, old_events, _ = fig2.restrict(fig2.cone(ev["h"]).events)
    assert sorted(sub.names(range(sub.num_events))) == ["b", "e", "h"]
    assert old_events == sorted([ev["b"], ev["e"], ev["h"]])
    with pytest.raises(StructureError):
        fig2.restrict([ev["h"]])


def test_postfix_drops_conflicts(fig2, ev):
    post = fig2.postfix([ev["b"]])
    assert set(post.names(range(post.num_events))) == {"e", "f", "h", "k"}
    assert {post.conditions[c].name for c in post.initial_conditions} == {"4", "5"}


def test_dot_export(fig2):
    dot = fig2.to_dot(cutoffs=[8])
    assert '"c0_1" [shape=circle];' in dot
    assert '"e8_k" [shape=box, peripheries=2];' in dot
    assert dot == fig2.to_dot(cutoffs=[8])
