import json
from pathlib import Path

import pytest

from revelio.cli import main
from revelio.reveals import RevealsMatrix
from revelio.unfold import parse_prefix_dump

NETS = Path(__file__).resolve().parent.parent / "nets"
FIG1 = str(NETS / "fig1.net")
FIG2 = str(NETS / "fig2.prefix")


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_unfold_report(capsys):
    code, out, _ = run(capsys, "unfold", FIG1, "--cutoff", "height:3")
    assert code == 0
    assert "events          10" in out
    assert out.splitlines()[-1].startswith("timing")


def test_unfold_json(capsys):
    code, out, _ = run(capsys, "unfold", FIG1, "--json")
    data = json.loads(out)
    assert data["policy"] == "level:2"
    assert "t_unfold_s" in data["timing"]


def test_unfold_dump_stdout(capsys):
    code, out, err = run(capsys, "unfold", FIG1, "--cutoff", "height:2", "--out", "-")
    assert code == 0
    occ, _, _ = parse_prefix_dump(out)
    assert occ.num_events == 7
    assert "events" in err


def test_unfold_exact_ui_and_dot(capsys, tmp_path):
    dot = tmp_path / "p.dot"
    code, out, _ = run(capsys, "unfold", str(NETS / "selfloop.net"), "--exact-ui", "--dot", str(dot))
    assert code == 0
    assert "events          2" in out
    assert dot.read_text().startswith("digraph")


def test_llnet_input(capsys):
    code, out, _ = run(capsys, "bound", str(NETS / "selfloop.ll_net"))
    assert code == 0 and out.startswith("K=2")


def test_bound(capsys):
    code, out, _ = run(capsys, "bound", FIG1)
    assert code == 0
    assert out.splitlines()[0] == "K=8"


def test_bound_timeout(capsys):
    code, out, _ = run(capsys, "bound", str(NETS / "buffer100.net"), "--timeout", "0.2")
    assert code == 2
    assert "t/o" in out


def test_reveals_facets(capsys):
    code, out, _ = run(capsys, "reveals", FIG2, "--facets")
    assert code == 0
    assert "facets {a,c,d,g} {b,e,f} {h} {k}" in out
    assert "facet 0: {a,c,d,g}" in out


def test_reveals_exports(capsys, tmp_path):
    csv, binf = tmp_path / "r.csv", tmp_path / "r.bin"
    code, _, _ = run(capsys, "reveals", FIG2, "--csv", str(csv), "--bin", str(binf))
    assert code == 0
    assert csv.read_text().startswith("event,reveals,conflicts,successors\n")
    assert RevealsMatrix.from_binary(binf.read_bytes()).num_events == 9


def test_reveals_quotient_stdout(capsys):
    code, out, _ = run(capsys, "reveals", FIG2, "--quotient", "-")
    assert code == 0
    assert "adcg" in out and "bef" in out


def test_reveals_rows(capsys):
    code, out, _ = run(capsys, "reveals", FIG2, "--rows")
    assert code == 0
    assert "e7 h h=3 trusted rev={b,e,f,h}" in out.splitlines()


def test_reveals_on_net(capsys):
    code, out, _ = run(capsys, "reveals", FIG1, "--cutoff", "height:10", "--k", "8", "--json")
    data = json.loads(out)
    assert code == 0
    assert data["trusted_height"] == 2


def test_check_pair_names(capsys):
    code, out, _ = run(capsys, "check-pair", FIG1, "e", "h", "--k", "8")
    assert code == 0
    assert out.startswith("not-reveals witness=k ")


def test_check_pair_reveals(capsys):
    code, out, _ = run(capsys, "check-pair", FIG1, "h", "e")
    assert out.startswith("reveals explored=")


def test_check_pair_via(capsys):
    code, out, _ = run(capsys, "check-pair", FIG1, "--via", "b,e", "b,e,h", "--k", "8")
    assert out.startswith("not-reveals witness=k")
    code, out2, _ = run(capsys, "check-pair", FIG1, "via:b,e", "via:b,e,h", "--k", "8")
    assert out2 == out


def test_check_pair_missing_args(capsys):
    code, _, err = run(capsys, "check-pair", FIG1, "e")
    assert code == 1


def test_verify(capsys):
    code, out, _ = run(capsys, "verify", "--seeds", "200", "--max-events", "12")
    assert code == 0 and out.strip().endswith("200/200 ok")


def test_verify_listing_mismatch(capsys):
    code, out, _ = run(capsys, "verify", "--seeds", "20", "--rev-variant", "listing")
    assert code == 3


def test_bench(capsys):
    code, out, _ = run(capsys, "bench", FIG1, "--cutoff", "height:6", "--repeat", "1", "--backend", "both")
    assert code == 0
    assert "compiled" in out or "python" in out


def test_missing_file(capsys):
    code, _, err = run(capsys, "bound", "/nonexistent.net")
    assert code == 1
    assert "cannot read" in err


def test_parse_error(capsys, tmp_path):
    bad = tmp_path / "bad.net"
    bad.write_text("net x\nplace p\nbogus\n")
    code, _, err = run(capsys, "bound", str(bad))
    assert code == 1
    assert "3" in err


def test_bad_subcommand(capsys):
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == 1


def test_bad_cutoff(capsys):
    code, _, _ = run(capsys, "unfold", FIG1, "--cutoff", "level:x")
    assert code == 1


def test_prefix_where_net_needed(capsys):
    code, _, err = run(capsys, "bound", FIG2)
    assert code == 1
