import io
import subprocess
import sys

import pytest

from ic3ia import corpus
from ic3ia.checkers import invariant_checks
from ic3ia.cli import EXIT_ERROR, EXIT_OK, EXIT_UNKNOWN, main
from ic3ia.system import parse_definition, parse_witness


def run(*argv):
    out = io.StringIO()
    code = main([str(a) for a in argv], out=out)
    return code, out.getvalue().splitlines()


def test_s1_safe_and_invariant_rechecks(tmp_path, ctx, s1):
    inv_file = tmp_path / "inv.smt2"
    code, lines = run(corpus.path("s1_counter"), "--dump-invariant", inv_file)
    assert (code, lines[0]) == (EXIT_OK, "safe")
    inv = parse_definition(inv_file.read_text(), s1)
    assert all(invariant_checks(s1, inv, ctx).values())


def test_s2_bmc_unsafe(tmp_path, s2):
    cex_file = tmp_path / "cex.txt"
    code, lines = run(corpus.path("s2_counter_unsafe"), "--engine", "bmc", "--depth", 5,
                      "--dump-cex", cex_file, "--stats")
    assert (code, lines[0]) == (EXIT_OK, "unsafe")
    assert "cex_length=4" in lines
    path = parse_witness(cex_file.read_text(), s2)
    assert len(path) == 4 and path.validate(s2) == []


def test_artifacts_only_on_matching_verdict(tmp_path):
    inv_file = tmp_path / "inv.smt2"
    code, lines = run(corpus.path("s2_counter_unsafe"), "--dump-invariant", inv_file)
    assert lines[0] == "unsafe" and not inv_file.exists()


def test_missing_file(capsys):
    code, lines = run("/nonexistent/system.vmt")
    assert code == EXIT_ERROR and lines == []
    assert "nonexistent" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    ["--refine", "itp,magic"],
    ["--engine", "bmc"],
    ["--property", "-1"],
    ["--property", "7"],
    ["--solver", "/nonexistent/solver"],
])
def test_usage_errors(argv):
    code, lines = run(corpus.path("s1_counter"), *argv)
    assert code == EXIT_ERROR and lines == []


def test_unknown_exit_code():
    code, lines = run(corpus.path("s3_even"), "--engine", "kind", "--depth", 1)
    assert (code, lines) == (EXIT_UNKNOWN, ["unknown"])


def test_kind_engine_proves_s1():
    assert run(corpus.path("s1_counter"), "--engine", "kind", "--depth", 1) == (EXIT_OK, ["safe"])


def test_stats_and_seed_predicates(tmp_path):
    preds = tmp_path / "preds.smt2"
    preds.write_text("; parity\n(= (mod x 2) 0)\n")
    log = tmp_path / "refinements.txt"
    code, lines = run(corpus.path("s3_even"), "--preds", preds, "--stats", "--check-invariants",
                      "--pred-log", log)
    assert (code, lines[0]) == (EXIT_OK, "safe")
    stats = dict(line.split("=", 1) for line in lines[1:])
    assert stats["refinements"] == "0" and stats["invariant_violations"] == "0"
    assert log.read_text() == ""


def test_bad_seed_predicate(tmp_path):
    preds = tmp_path / "preds.smt2"
    preds.write_text("(+ x 1)\n")
    assert run(corpus.path("s1_counter"), "--preds", preds)[0] == EXIT_ERROR


def test_refine_chain_and_no_reduction():
    code, lines = run(corpus.path("s2_counter_unsafe"), "--refine", "wp", "--no-pred-reduction",
                      "--stats")
    assert lines[0] == "unsafe"
    assert "refine_mode_wp_ok=1" in lines


def test_console_entry_point():
    r = subprocess.run([sys.executable, "-m", "ic3ia.cli", corpus.path("s1_counter")],
                       capture_output=True, text=True)
    assert (r.returncode, r.stdout) == (0, "safe\n")
