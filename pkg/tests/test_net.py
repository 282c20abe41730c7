import os
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from revelio.net import (
    NetError,
    NotEnabledError,
    ParseError,
    build_net,
    check_safety,
    enabled,
    fire,
    load_net,
    parse_canonical,
    parse_llnet,
    replay,
    serialize_canonical,
)
from revelio.fixtures import figure1_net, philosophers_net, self_loop_net
from revelio.oracle import random_safe_net


def marking(net, *names):
    return frozenset(net.place(n) for n in names)


# -- parsing ------------------------------------------------------------------

FRAGMENT = """\
net fragment
place 1 *
place 2 *
trans a
trans b
trans c
arc 1 -> a
arc 1 -> b
arc 2 -> b
arc 2 -> c
"""


def test_parse_fig1_fragment():
    net = parse_canonical(FRAGMENT)
    assert net.num_places == 2
    assert net.num_transitions == 3
    assert net.initial_marking == marking(net, "1", "2")
    assert net.pre[net.transition("b")] == marking(net, "1", "2")


def test_ids_follow_declaration_order():
    net = parse_canonical(FRAGMENT)
    assert net.place_names == ("1", "2")
    assert net.transition_names == ("a", "b", "c")


def test_empty_net_rejected():
    with pytest.raises(ParseError, match="net must contain at least one place"):
        parse_canonical("net empty\n")


def test_undeclared_node_named():
    text = "net x\nplace p\ntrans t\narc x -> t\n"
    with pytest.raises(ParseError, match="'x'") as info:
        parse_canonical(text)
    assert info.value.line == 4


def test_duplicate_name_rejected():
    with pytest.raises(ParseError, match="duplicate"):
        parse_canonical("net x\nplace p\ntrans p\n")


def test_syntax_error_has_line_number():
    with pytest.raises(ParseError) as info:
        parse_canonical("net x\nplace p\nbogus line here\n")
    assert info.value.line == 3


def test_missing_header():
    with pytest.raises(ParseError, match="header"):
        parse_canonical("place p\n")


def test_arc_between_places_rejected():
    with pytest.raises(ParseError, match="two places"):
        parse_canonical("net x\nplace p\nplace q\narc p -> q\n")


def test_isolated_transition_rejected():
    with pytest.raises(ParseError, match="isolated"):
        parse_canonical("net x\nplace p\ntrans t\n")


def test_comments_and_blank_lines():
    net = parse_canonical("# leading comment\n\nnet x  # trailing\nplace p *\ntrans t\narc p -> t\n")
    assert net.name == "x" and net.num_transitions == 1


def test_roundtrip_fig1():
    net = figure1_net()
    assert parse_canonical(serialize_canonical(net)) == net


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000))
def test_roundtrip_random(seed):
    net = random_safe_net(seed)
    assert parse_canonical(serialize_canonical(net)) == net


LL_MIN = """PEP
PetriBox
FORMAT_N2
PL
1"p1"M1
TR
1"t1"
TP
1<1
PT
1>1
"""


def test_llnet_minimal_self_loop():
    net = parse_llnet(LL_MIN)
    assert net.place_names == ("p1",)
    assert net.transition_names == ("t1",)
    assert net.initial_marking == frozenset({0})
    assert net.pre[0] == net.post[0] == frozenset({0})


def test_llnet_marking_two_rejected():
    text = LL_MIN.replace('1"p1"M1', '1"p1"M1\n2"p2"M2')
    with pytest.raises(ParseError, match="marking exceeds 1; only safe nets supported"):
        parse_llnet(text)


def test_llnet_coordinates_skipped():
    text = LL_MIN.replace('1"p1"M1', '1"p1"12@34M1k1').replace('1"t1"', '1"t1"5@6')
    net = parse_llnet(text)
    assert net.initial_marking == frozenset({0})


def test_llnet_unsupported_section():
    with pytest.raises(ParseError, match="unsupported section"):
        parse_llnet(LL_MIN + "RA\n1>1\n")


def test_llnet_malformed_arc():
    with pytest.raises(ParseError):
        parse_llnet(LL_MIN.replace("1>1", "1-1"))


def test_llnet_implicit_ids():
    text = 'PEP\nPTNet\nFORMAT_N\nPL\n"a"M1\n"b"\nTR\n"t"\nTP\n1<2\nPT\n1>1\n'
    net = parse_llnet(text)
    assert net.place_names == ("a", "b")
    assert net.post[0] == frozenset({1})


def test_load_net_dispatch():
    assert load_net(LL_MIN).num_places == 1
    assert load_net(FRAGMENT).name == "fragment"


# -- token game ---------------------------------------------------------------


def test_enabled_initial(fig1):
    assert enabled(fig1, fig1.initial_marking, fig1.transition("b"))


def test_not_enabled_elsewhere(fig1):
    assert not enabled(fig1, marking(fig1, "4", "5"), fig1.transition("b"))


def test_empty_marking_enables_nothing(fig1):
    assert not any(enabled(fig1, frozenset(), t) for t in range(fig1.num_transitions))


def test_fire_b(fig1):
    assert fire(fig1, fig1.initial_marking, fig1.transition("b")) == marking(fig1, "4", "5")


def test_fire_a(fig1):
    assert fire(fig1, fig1.initial_marking, fig1.transition("a")) == marking(fig1, "2", "3")


def test_fire_self_loop():
    net = self_loop_net()
    assert fire(net, net.initial_marking, 0) == net.initial_marking


def test_fire_not_enabled(fig1):
    with pytest.raises(NotEnabledError):
        fire(fig1, marking(fig1, "4"), fig1.transition("a"))


def _three_branch(net, m, t, p):
    # p in M' iff (p in pre \ post: no) / (p in post \ pre: yes) / otherwise: p in M
    if p in net.pre[t] and p not in net.post[t]:
        return False
    if p in net.post[t] and p not in net.pre[t]:
        return True
    return p in m


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10_000), st.data())
def test_fire_matches_three_cases(seed, data):
    net = random_safe_net(seed)
    m = net.initial_marking
    for _ in range(data.draw(st.integers(0, 6))):
        ts = [t for t in range(net.num_transitions) if enabled(net, m, t)]
        if not ts:
            break
        t = data.draw(st.sampled_from(ts))
        m2 = fire(net, m, t)
        assert m2 == fire(net, m, t)  # deterministic
        for p in range(net.num_places):
            assert (p in m2) == _three_branch(net, m, t, p)
        m = m2


def test_replay(fig1):
    run = replay(fig1, [fig1.transition(n) for n in "bef"])
    assert len(run.markings) == 4
    assert run.markings[-1] == marking(fig1, "8", "9")


# -- safety -------------------------------------------------------------------


def test_fig1_safe(fig1):
    assert check_safety(fig1, 10**6).status == "safe"


def test_unsafe_two_feeders():
    # two marked places each feed q through their own transition
    net = build_net("feed", ["a", "b", "q"], ["t1", "t2"], [("a", "t1"), ("t1", "q"), ("b", "t2"), ("t2", "q")], ["a", "b"])
    v = check_safety(net, 100)
    assert v.status == "unsafe"
    assert v.place == net.place("q")
    assert len(v.run.transitions) == 2


def test_unsafe_witness_replays():
    net = build_net("feed", ["a", "b", "q"], ["t1", "t2"], [("a", "t1"), ("t1", "q"), ("b", "t2"), ("t2", "q")], ["a", "b"])
    v = check_safety(net, 100)
    # the first transition is fine in the set semantics; the second doubles q
    first = fire(net, net.initial_marking, v.run.transitions[0])
    assert net.place("q") in first


def test_inconclusive_with_limit_one(fig1):
    assert check_safety(fig1, 1).status == "inconclusive"


def test_state_limit_validated(fig1):
    with pytest.raises(ValueError):
        check_safety(fig1, 0)


def test_philosophers_safe():
    assert check_safety(philosophers_net(3), 10**5).safe


def test_duplicate_place_names_in_model():
    with pytest.raises(NetError):
        build_net("x", ["p", "p"], ["t"], [("p", "t")])


@pytest.mark.skipif(not os.environ.get("REVELIO_PEP_CORPUS"), reason="benchmark corpus not available")
def test_gas_station_shape():
    hits = sorted(Path(os.environ["REVELIO_PEP_CORPUS"]).rglob("*gas_station*"))
    if not hits:
        pytest.skip("gas_station not in corpus")
    net = load_net(hits[0].read_text(), name="gas_station")
    assert (net.num_places, net.num_transitions) == (30, 18)
