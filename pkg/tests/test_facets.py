import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from revelio.facets import chain_order, compute_facets, quotient
from revelio.oracle import enumerate_maximal, random_occurrence_net
from revelio.reveals import reveals_all

seeds = st.integers(0, 10_000)


@pytest.fixture(scope="module")
def part2(fig2):
    return compute_facets(reveals_all(fig2))


@pytest.fixture(scope="module")
def q2(fig2, part2):
    return quotient(fig2, part2)


def test_fig2_facets(fig2, part2):
    assert part2.braces(fig2) == "{a,c,d,g} {b,e,f} {h} {k}"


def test_fig2_listing(fig2, part2):
    assert part2.listing(fig2).splitlines() == [
        "facet 0: {a,c,d,g}",
        "facet 1: {b,e,f}",
        "facet 2: {h}",
        "facet 3: {k}",
    ]


def test_class_of(fig2, part2, ev):
    assert part2.class_of[ev["a"]] == part2.class_of[ev["g"]] == 0
    assert part2.class_of[ev["k"]] == 3


def test_methods_agree(fig2, part2):
    assert compute_facets(reveals_all(fig2), method="tarjan") == part2


def test_unknown_method(fig2):
    with pytest.raises(ValueError):
        compute_facets(reveals_all(fig2), method="magic")


def test_chain_order(fig2, ev):
    assert fig2.names(chain_order(fig2, [ev[x] for x in "acdg"])) == list("adcg")
    assert fig2.names(chain_order(fig2, [ev[x] for x in "bef"])) == list("bef")


def test_quotient_events(q2):
    o = q2.occ
    shape = {e.name: ([o.conditions[c].name for c in e.pre], [o.conditions[c].name for c in e.post]) for e in o.events}
    assert shape == {
        "adcg": (["1", "2"], ["7", "10"]),
        "bef": (["1", "2"], ["8", "9"]),
        "h": (["8"], ["11"]),
        "k": (["8"], ["12"]),
    }


def test_quotient_drops_inner_conditions(fig2, q2):
    assert sorted(fig2.conditions[c].name for c in q2.dropped_conditions) == ["3", "4", "5", "6"]
    assert len(q2.kept_conditions) == 8


def test_quotient_expand(fig2, q2):
    bef = q2.occ.event_by_name("bef")
    assert set(fig2.names(q2.expand([bef]))) == set("bef")


def test_quotient_dot(q2):
    dot = q2.to_dot()
    assert "adcg" in dot and dot.startswith("digraph")


def test_quotient_checks_cover(fig2):
    other = compute_facets(reveals_all(random_occurrence_net(1, 3)))
    with pytest.raises(ValueError):
        quotient(fig2, other)


def _max_runs(o):
    return {frozenset(c) for c in enumerate_maximal(o)}


def test_run_preservation_fig2(fig2, q2):
    assert {q2.expand(c) for c in _max_runs(q2.occ)} == _max_runs(fig2)


@settings(max_examples=50, deadline=None)
@given(seeds)
def test_run_preservation_random(seed):
    o = random_occurrence_net(seed, 12)
    q = quotient(o, compute_facets(reveals_all(o)))
    assert {q.expand(c) for c in _max_runs(q.occ)} == _max_runs(o)


@settings(max_examples=50, deadline=None)
@given(seeds)
def test_facets_are_mutual_reveals(seed):
    o = random_occurrence_net(seed, 14)
    m = reveals_all(o)
    p = compute_facets(m)
    for x in range(o.num_events):
        for y in range(o.num_events):
            same = p.class_of[x] == p.class_of[y]
            assert same == (m.reveals(x, y) and m.reveals(y, x))


@settings(max_examples=50, deadline=None)
@given(seeds)
def test_class_order_puts_revealed_first(seed):
    o = random_occurrence_net(seed, 14)
    m = reveals_all(o)
    p = compute_facets(m)
    for x in range(o.num_events):
        for y in m.rev_ids(x):
            assert p.class_of[y] <= p.class_of[x]


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_quotient_idempotent(seed):
    o = random_occurrence_net(seed, 12)
    q = quotient(o, compute_facets(reveals_all(o)))
    again = quotient(q.occ, compute_facets(reveals_all(q.occ)))
    assert again.occ.num_events == q.occ.num_events
    assert not again.dropped_conditions


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_tarjan_matches_rows(seed):
    o = random_occurrence_net(seed, 20)
    m = reveals_all(o)
    assert compute_facets(m, method="tarjan") == compute_facets(m, method="rows")
