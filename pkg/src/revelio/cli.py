"""Command-line front end.

Exit codes: 0 success, 1 usage or parse error, 2 resource limit or timeout,
3 verification mismatch.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import _backend
from .facets import compute_facets, quotient
from .net import NetError, ParseError, PetriNet, load_net
from .occnet import StructureError
from .oracle import enumerate_maximal, oracle_rev_rows, random_occurrence_net
from .reveals import check_pair, reveals_all
from .unfold import (
    CutoffPolicy,
    ResourceLimitError,
    UnsafeNetError,
    exact_ui,
    level2_prefix,
    parse_prefix_dump,
    unfold,
)

EXIT_OK, EXIT_USAGE, EXIT_RESOURCE, EXIT_MISMATCH = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# -- input ------------------------------------------------------------------


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror or exc}") from None


def load_input(path: str):
    """Return ``("net", PetriNet)`` or ``("prefix", OccurrenceNet, header)``."""
    text = _read(path)
    first = next((ln.strip() for ln in text.splitlines() if ln.strip()), "")
    if first.startswith("# prefix"):
        occ, _, header = parse_prefix_dump(text)
        return "prefix", occ, header
    return "net", load_net(text, name=Path(path).stem if first == "PEP" else None)


def _load_net(path: str) -> PetriNet:
    kind, *rest = load_input(path)
    if kind != "net":
        raise UsageError(f"{path} is a prefix dump; this command needs a net")
    return rest[0]


def _emit(report: dict, as_json: bool, out=None) -> None:
    out = out or sys.stdout
    if as_json:
        out.write(json.dumps(report, sort_keys=False) + "\n")
        return
    timing = report.get("timing")
    for key, val in report.items():
        if key == "timing":
            continue
        out.write(f"{key:<16}{'-' if val is None else val}\n")
    if timing:
        out.write("timing          " + "  ".join(f"{k}={v:.6f}" for k, v in timing.items()) + "\n")


def _write(path: str, text: str | bytes) -> None:
    if path == "-":
        sys.stdout.write(text if isinstance(text, str) else text.decode())
        return
    mode = "wb" if isinstance(text, bytes) else "w"
    with open(path, mode) as fh:
        fh.write(text)


# -- commands ---------------------------------------------------------------


def cmd_unfold(args) -> int:
    net = _load_net(args.input)
    policy = CutoffPolicy.parse(args.cutoff)
    t0 = time.perf_counter()
    p = unfold(net, policy, max_events=args.max_events, timeout=args.timeout)
    if args.exact_ui:
        if policy.kind != "level":
            raise UsageError("--exact-ui needs a level:N cutoff")
        p = exact_ui(p, policy.bound)
    elapsed = time.perf_counter() - t0
    if args.out:
        _write(args.out, p.dump())
    if args.dot:
        _write(args.dot, p.to_dot())
    report = {
        "input": args.input,
        "policy": str(policy),
        "events": p.num_events,
        "conditions": p.occ.num_conditions,
        "cutoffs": len(p.cutoff_events),
        "height": p.height,
        "complete_height": p.complete_height,
        "timing": {"t_unfold_s": elapsed},
    }
    _emit(report, args.json, sys.stderr if args.out == "-" else None)
    return EXIT_OK


def cmd_bound(args) -> int:
    net = _load_net(args.input)
    t0 = time.perf_counter()
    try:
        u2 = level2_prefix(net, max_events=args.max_events, timeout=args.timeout)
    except ResourceLimitError as exc:
        if args.json:
            _emit({"input": args.input, "k": None, "status": "t/o" if exc.timeout else "limit"}, True)
        else:
            print("t/o" if exc.timeout else f"limit: {exc}")
        return EXIT_RESOURCE
    elapsed = time.perf_counter() - t0
    if args.json:
        _emit(
            {
                "input": args.input,
                "k": u2.height,
                "events": u2.num_events,
                "conditions": u2.occ.num_conditions,
                "timing": {"t_bound_s": elapsed},
            },
            True,
        )
    else:
        print(f"K={u2.height}")
        print(f"U2 events={u2.num_events} conditions={u2.occ.num_conditions}")
    return EXIT_OK


def cmd_reveals(args) -> int:
    kind, *rest = load_input(args.input)
    k = args.k
    complete = None
    if kind == "prefix":
        occ, header = rest
        if k is not None and "complete_height" in header:
            complete = int(header["complete_height"])
    else:
        net = rest[0]
        p = unfold(net, CutoffPolicy.parse(args.cutoff), max_events=args.max_events, timeout=args.timeout)
        occ = p.occ
        if not p.is_full:
            if k is None:
                k = level2_prefix(net, max_events=args.max_events, timeout=args.timeout).height
            complete = p.complete_height
    m = reveals_all(occ, k=k, complete_height=complete, threads=args.threads, variant=args.rev_variant)
    if args.csv:
        _write(args.csv, m.to_csv())
    if args.bin:
        _write(args.bin, m.to_binary())
    out = sys.stderr if "-" in (args.csv, args.bin, args.quotient) else sys.stdout
    if args.rows:
        for e in range(occ.num_events):
            flag = "trusted" if m.is_trusted(e) else "untrusted"
            names = ",".join(occ.names(sorted(m.rev_ids(e), key=lambda x: occ.rank[x])))
            out.write(f"e{e} {occ.events[e].name} h={occ.heights[e]} {flag} rev={{{names}}}\n")
    if args.facets or args.quotient:
        part = compute_facets(m)
        if args.facets:
            out.write(part.listing(occ))
            out.write(f"facets {part.braces(occ)}\n")
        if args.quotient:
            _write(args.quotient, quotient(occ, part).to_dot())
    report = {
        "input": args.input,
        "events": occ.num_events,
        "conditions": occ.num_conditions,
        "k": k,
        "trusted_height": m.trusted_height,
        "checks": m.checks,
        "backend": m.backend,
        "timing": {"t_post_s": m.timings["post"], "t_conf_s": m.timings["conf"], "t_rev_s": m.timings["rev"]},
    }
    _emit(report, args.json, out)
    return EXIT_OK


def _selector(tok: str):
    if tok.isdigit():
        return int(tok)
    if tok.startswith("via:"):
        return tuple(s for s in tok[4:].split(",") if s)
    return tok


def cmd_check_pair(args) -> int:
    net = _load_net(args.input)
    if args.via:
        xs, ys = (tuple(s for s in v.split(",") if s) for v in args.via)
    else:
        if args.x is None or args.y is None:
            raise UsageError("give two event selectors or --via XSEQ YSEQ")
        xs, ys = _selector(args.x), _selector(args.y)
    prefix = None
    if isinstance(xs, int) or isinstance(ys, int):
        # numeric ids refer to the level-2 prefix, as printed by `unfold --cutoff level:2`
        prefix = unfold(net, CutoffPolicy.level(2), max_events=args.max_events, timeout=args.timeout)
    try:
        v = check_pair(net, xs, ys, prefix=prefix, k=args.k, max_events=args.max_events, timeout=args.timeout)
    except KeyError as exc:
        raise UsageError(str(exc.args[0]) if exc.args else "selector resolves to no event") from None
    r = v.report
    if v.reveals:
        line = f"reveals explored={r.explored} bound={r.height_bound_used}"
    else:
        line = f"not-reveals witness={v.witness_name} id={r.witness} explored={r.explored} bound={r.height_bound_used}"
    if args.json:
        _emit(
            {
                "verdict": "reveals" if v.reveals else "not-reveals",
                "x": v.x,
                "y": v.y,
                "witness": r.witness,
                "witness_name": v.witness_name,
                "explored": r.explored,
                "height_bound": r.height_bound_used,
            },
            True,
        )
    else:
        print(line)
    return EXIT_OK


def cmd_verify(args) -> int:
    ok = 0
    shown = 0
    for seed in range(args.start, args.start + args.seeds):
        o = random_occurrence_net(seed, args.max_events)
        rows = oracle_rev_rows(o, enumerate_maximal(o))
        m = reveals_all(o, variant=args.rev_variant)
        bad = []
        for x in range(o.num_events):
            got = set(m.rev_ids(x))
            if got != rows[x]:
                for y in sorted(got ^ rows[x]):
                    bad.append((x, y, y in got))
        if not bad:
            ok += 1
            continue
        for x, y, alg in bad[: max(0, 5 - shown)]:
            print(f"mismatch seed={seed} pair=({o.events[x].name},{o.events[y].name}) algorithm={alg} oracle={not alg}")
            shown += 1
    print(f"{ok}/{args.seeds} ok")
    return EXIT_OK if ok == args.seeds else EXIT_MISMATCH


def cmd_bench(args) -> int:
    """Pass timings per input, one table row each."""
    names = [args.backend] if args.backend != "both" else ["compiled", "python"]
    print(f"{'input':<24}{'events':>8}  {'backend':<9}{'post':>9}{'conf':>9}{'rev':>9}")
    for path in args.inputs:
        kind, *rest = load_input(path)
        if kind == "prefix":
            occ = rest[0]
        else:
            occ = unfold(rest[0], CutoffPolicy.parse(args.cutoff), max_events=args.max_events).occ
        for b in names:
            best = None
            for _ in range(args.repeat):
                m = reveals_all(occ, threads=args.threads, backend=b)
                t = m.timings
                if best is None or sum(t.values()) < sum(best.values()):
                    best = t
            print(f"{Path(path).name:<24}{occ.num_events:>8}  {b:<9}{best['post']:>9.4f}{best['conf']:>9.4f}{best['rev']:>9.4f}")
    return EXIT_OK


# -- entry point ------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="revelio", description="Unfold safe Petri nets and compute the reveals relation.")
    ap.add_argument("--version", action="version", version="revelio 0.1.0")
    sub = ap.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    def common(p, cutoff=None):
        p.add_argument("--max-events", type=int, default=1_000_000)
        p.add_argument("--timeout", type=float, default=None, help="seconds")
        p.add_argument("--json", action="store_true")
        if cutoff:
            p.add_argument("--cutoff", default=cutoff, help="level:N | mcmillan | height:N | events:N")

    p = sub.add_parser("unfold", help="build an unfolding prefix")
    p.add_argument("input")
    common(p, "level:2")
    p.add_argument("--exact-ui", action="store_true", help="trim to the exact level-N prefix")
    p.add_argument("--out", help="prefix dump path ('-' for stdout)")
    p.add_argument("--dot", help="DOT output path")
    p.set_defaults(func=cmd_unfold)

    p = sub.add_parser("bound", help="print K, the height of the exact level-2 prefix")
    p.add_argument("input")
    common(p)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("reveals", help="compute the reveals matrix")
    p.add_argument("input", help="net or prefix dump")
    common(p, "level:2")
    p.add_argument("--k", type=int, default=None, help="depth bound used to mark trusted rows")
    p.add_argument("--csv")
    p.add_argument("--bin")
    p.add_argument("--facets", action="store_true")
    p.add_argument("--quotient", help="DOT path for the facet quotient ('-' for stdout)")
    p.add_argument("--rows", action="store_true", help="print rev rows with trust flags")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--rev-variant", choices=["inclusion", "listing"], default="inclusion")
    p.set_defaults(func=cmd_reveals)

    p = sub.add_parser("check-pair", help="decide whether X reveals Y")
    p.add_argument("input")
    p.add_argument("x", nargs="?", help="transition name, event id, or via:t1,t2,...")
    p.add_argument("y", nargs="?")
    p.add_argument("--via", nargs=2, metavar=("XSEQ", "YSEQ"), help="comma-separated firing sequences")
    p.add_argument("--k", type=int, default=None, help="skip computing K")
    common(p)
    p.set_defaults(func=cmd_check_pair)

    p = sub.add_parser("verify", help="differential check against the brute-force oracle")
    p.add_argument("--seeds", type=int, default=200)
    p.add_argument("--start", type=int, default=0)
    p.add_argument("--max-events", type=int, default=12)
    p.add_argument("--rev-variant", choices=["inclusion", "listing"], default="inclusion")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="time the three passes")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--cutoff", default="events:10000")
    p.add_argument("--max-events", type=int, default=1_000_000)
    p.add_argument("--backend", choices=["compiled", "python", "both"], default=_backend.NAME)
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ParseError, NetError, StructureError, ValueError) as exc:
        if isinstance(exc, UnsafeNetError):
            print(f"error: unsafe net: {exc}", file=sys.stderr)
        else:
            print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ResourceLimitError as exc:
        if exc.timeout:
            print("t/o")
        else:
            print(f"error: resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except MemoryError:
        print("error: out of memory", file=sys.stderr)
        return EXIT_RESOURCE


if __name__ == "__main__":
    sys.exit(main())
