"""Small reference nets and net generators used by tests, docs and benchmarks."""

from __future__ import annotations

from .net import PetriNet, build_net
from .occnet import OccurrenceNet


def figure1_net() -> PetriNet:
    """Twelve places, twelve transitions; its unfolding starts with :func:`figure2_net`."""
    places = [str(i) for i in range(1, 13)]
    transitions = ["a", "b", "c", "d", "e", "f", "g", "h", "k", "r", "t", "u"]
    arcs = [
        ("1", "a"), ("1", "b"), ("2", "b"), ("2", "c"),
        ("a", "3"), ("b", "4"), ("b", "5"), ("c", "6"),
        ("3", "d"), ("4", "e"), ("5", "f"), ("6", "g"),
        ("d", "7"), ("e", "8"), ("f", "9"), ("g", "10"),
        ("8", "h"), ("8", "k"), ("h", "11"), ("k", "12"),
        ("7", "r"), ("10", "r"), ("9", "t"), ("11", "t"), ("9", "u"), ("12", "u"),
        ("r", "1"), ("r", "2"), ("t", "1"), ("t", "2"), ("u", "1"), ("u", "2"),
    ]
    return build_net("fig1", places, transitions, arcs, marked=["1", "2"])


def figure2_net() -> OccurrenceNet:
    """The nine-event example occurrence net (a..k over conditions 1..12)."""
    conds = [str(i) for i in range(1, 13)]

    def c(*names):
        return [n - 1 for n in names]

    events = [
        ("a", c(1), c(3)),
        ("b", c(1, 2), c(4, 5)),
        ("c", c(2), c(6)),
        ("d", c(3), c(7)),
        ("e", c(4), c(8)),
        ("f", c(5), c(9)),
        ("g", c(6), c(10)),
        ("h", c(8), c(11)),
        ("k", c(8), c(12)),
    ]
    return OccurrenceNet.from_arcs(conds, events)


def self_loop_net() -> PetriNet:
    return build_net("selfloop", ["p"], ["t"], [("p", "t"), ("t", "p")], marked=["p"])


def loop_and_once_net() -> PetriNet:
    """A self-loop running beside a transition that fires exactly once."""
    return build_net(
        "loop_once",
        ["p", "q", "r"],
        ["t", "d"],
        [("p", "t"), ("t", "p"), ("q", "d"), ("d", "r")],
        marked=["p", "q"],
    )


def two_loops_net() -> PetriNet:
    return build_net(
        "two_loops", ["p", "q"], ["s", "t"], [("p", "s"), ("s", "p"), ("q", "t"), ("t", "q")], marked=["p", "q"]
    )


def buffer_chain_net(cells: int) -> PetriNet:
    """A pipeline of one-place buffers; tokens enter at cell 0 and leave after the last."""
    if cells < 1:
        raise ValueError("need at least one cell")
    places = [f"full{i}" for i in range(cells)] + [f"empty{i}" for i in range(cells)]
    transitions = [f"t{i}" for i in range(cells + 1)]
    arcs = [("empty0", "t0"), ("t0", "full0")]
    for i in range(1, cells):
        arcs += [(f"full{i-1}", f"t{i}"), (f"empty{i}", f"t{i}"), (f"t{i}", f"empty{i-1}"), (f"t{i}", f"full{i}")]
    arcs += [(f"full{cells-1}", f"t{cells}"), (f"t{cells}", f"empty{cells-1}")]
    return build_net(f"buf{cells}", places, transitions, arcs, marked=[f"empty{i}" for i in range(cells)])


def philosophers_net(n: int) -> PetriNet:
    """Dining philosophers taking both forks at once; every round is a choice."""
    places = [f"think{i}" for i in range(n)] + [f"eat{i}" for i in range(n)] + [f"fork{i}" for i in range(n)]
    transitions = [f"take{i}" for i in range(n)] + [f"put{i}" for i in range(n)]
    arcs = []
    for i in range(n):
        left, right = f"fork{i}", f"fork{(i + 1) % n}"
        arcs += [(f"think{i}", f"take{i}"), (left, f"take{i}"), (right, f"take{i}"), (f"take{i}", f"eat{i}")]
        arcs += [(f"eat{i}", f"put{i}"), (f"put{i}", f"think{i}"), (f"put{i}", left), (f"put{i}", right)]
    marked = [f"think{i}" for i in range(n)] + [f"fork{i}" for i in range(n)]
    return build_net(f"phil{n}", places, transitions, arcs, marked=marked)
