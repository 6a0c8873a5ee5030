import json
import subprocess
import sys
from pathlib import Path

import jsonschema
import pytest

from conftest import FIXTURES
from wpcps.cli import UNSAFE_CONSTANTS_WARNING, main

SCHEMA = json.loads((Path(__file__).resolve().parent.parent / "docs" / "report.schema.json").read_text())
A_STAR = str(FIXTURES / "a_star.dfa.json")
ISZERO_SIG = str(FIXTURES / "iszero.sig.json")


def fx(name: str) -> str:
    return str(FIXTURES / name)


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv, "--json")
    report = json.loads(out)
    jsonschema.validate(report, SCHEMA)
    assert report["exit_code"] == code
    return code, report, err


PROGRAMS = sorted(p.name for p in FIXTURES.glob("*.lc"))
TRACE_PROGRAMS = ["event_a.lc", "event_b.lc", "choice_ab.lc", "loop_a.lc", "identity.lc"]
COST_PROGRAMS = ["geometric.lc", "geometric_p025.lc", "geometric_p075.lc", "unif_tick.lc", "identity.lc"]


# ---------------------------------------------------------------- cps

def test_cps_geometric_prints_cost_formula(capsys):
    code, out, _ = run(capsys, "cps", fx("geometric.lc"), "--instance", "cost")
    assert code == 0
    assert "untyped: \\k31. letrec g_0 (x_1, k0) = 0.5 * k0 () + 0.5 * (1 + g_0 ((), k0)) in g_0 ((), k31)" in out


def test_cps_identity_shape(capsys):
    code, out, _ = run(capsys, "cps", fx("identity.lc"))
    assert code == 0
    assert "simplified: \\k0:(unit * (unit -> R) -> R) -> R. k0 (\\(x_0, k1):unit * (unit -> R). k1 x_0)" in out


INSTANCE = {name: ["--instance", "trace"] for name in TRACE_PROGRAMS} | {
    name: ["--instance", "cost"] for name in COST_PROGRAMS + ["iszero.lc"]}


@pytest.mark.parametrize("name", PROGRAMS)
@pytest.mark.parametrize("extra", [[], ["instance"], ["--ast"]])
def test_cps_reports_validate(capsys, name, extra):
    argv = ["cps", fx(name), *(INSTANCE[name] if extra == ["instance"] else extra)]
    if name == "iszero.lc":
        argv += ["--sig", ISZERO_SIG, "--unsafe-constants"]
    code, report, _ = run_json(capsys, *argv)
    assert code == 0 and report["cps"] is not None
    if "--ast" in extra:
        assert report["cps"]["ast"]["node"]


def test_signature_gate(capsys):
    code, report, err = run_json(capsys, "cps", fx("iszero.lc"), "--sig", ISZERO_SIG)
    assert code == 3 and report["signature"] == {"ok": False, "offending": ["iszero"]}
    assert "--unsafe-constants" in err
    code, report, err = run_json(capsys, "expected-cost", fx("iszero.lc"), "--sig", ISZERO_SIG, "--unsafe-constants")
    assert code == 0 and UNSAFE_CONSTANTS_WARNING in err
    assert report["eval"]["value"] == 1.0


# ---------------------------------------------------------------- check-trace

@pytest.mark.parametrize("name, code, verdict", [
    ("event_a.lc", 0, "holds"), ("event_b.lc", 1, "fails"), ("choice_ab.lc", 1, "fails"),
    ("loop_a.lc", 0, "holds"), ("identity.lc", 0, "holds"),
])
def test_check_trace(capsys, name, code, verdict):
    got, report, _ = run_json(capsys, "check-trace", fx(name), "--dfa", A_STAR, "--oracle")
    assert got == code and report["verdict"] == verdict
    if report["oracle"]["verdict"] != "unknown":
        assert report["agreement"] is True


def test_check_trace_text(capsys):
    code, out, _ = run(capsys, "check-trace", fx("event_b.lc"), "--dfa", A_STAR, "--oracle")
    assert code == 1
    assert "verdict: fails" in out and "agreement: yes" in out


def test_nondeterministic_automaton(capsys):
    code, report, err = run_json(capsys, "check-trace", fx("event_a.lc"), "--dfa", fx("nondeterministic.dfa.json"))
    assert code == 2 and "deterministic" in err


def test_unknown_verdict(capsys, tmp_path):
    prog = tmp_path / "count.lc"
    prog.write_text("letrec f n = event[a](f (succ(n))) in f (zero(()))")
    code, report, _ = run_json(capsys, "check-trace", str(prog), "--dfa", A_STAR, "--max-unfold", "50")
    assert code == 4 and report["verdict"] == "unknown" and report["eval"]["status"] == "truncated"


def test_dump_oracle(capsys, tmp_path):
    dump = tmp_path / "oracle.json"
    code, _, _ = run(capsys, "check-trace", fx("choice_ab.lc"), "--dfa", A_STAR, "--dump-oracle", str(dump))
    assert code == 1
    assert json.loads(dump.read_text())["unterminated"] == [[], ["a"], ["b"]]


# ---------------------------------------------------------------- expected-cost

@pytest.mark.parametrize("name, value", [("geometric.lc", 1.0), ("geometric_p025.lc", 3.0), ("geometric_p075.lc", 1 / 3)])
def test_expected_cost(capsys, name, value):
    code, report, _ = run_json(capsys, "expected-cost", fx(name), "--oracle")
    assert code == 0 and abs(report["eval"]["value"] - value) < 1e-6
    assert report["agreement"] is True


def test_moments(capsys):
    code, report, _ = run_json(capsys, "expected-cost", fx("geometric.lc"), "--moments", "2", "--oracle")
    assert code == 0 and report["eval"]["value"] == pytest.approx([1.0, 3.0], abs=1e-6)
    assert report["oracle"]["values"] == pytest.approx([1.0, 3.0], abs=1e-6)


def expected_cost_line(out: str) -> float:
    line = next(x for x in out.splitlines() if x.startswith("expected cost: "))
    return float(line.removeprefix("expected cost: "))


def test_expected_cost_text(capsys):
    code, out, _ = run(capsys, "expected-cost", fx("geometric_p025.lc"))
    assert code == 0 and "status: converged" in out
    assert abs(expected_cost_line(out) - 3.0) < 1e-6


def test_unif_skips_oracle(capsys):
    code, report, err = run_json(capsys, "expected-cost", fx("unif_tick.lc"), "--oracle")
    assert code == 0 and report["oracle"] is None and "unif" in err
    assert report["eval"]["value"] == pytest.approx(1.0)


@pytest.mark.parametrize("name", COST_PROGRAMS)
@pytest.mark.parametrize("extra", [[], ["--moments", "3"], ["--oracle", "--oracle-depth", "20"]])
def test_expected_cost_reports_validate(capsys, name, extra):
    code, report, _ = run_json(capsys, "expected-cost", fx(name), *extra)
    assert code == 0


@pytest.mark.parametrize("name", TRACE_PROGRAMS)
def test_check_trace_reports_validate(capsys, name):
    code, report, _ = run_json(capsys, "check-trace", fx(name), "--dfa", A_STAR, "--oracle", "--ast")
    assert code in (0, 1)


# ---------------------------------------------------------------- input errors

@pytest.mark.parametrize("text", ["fun x:unit.", "() ()", "undefined_name", "tick((), ())"])
def test_bad_programs_exit_2(capsys, tmp_path, text):
    prog = tmp_path / "bad.lc"
    prog.write_text(text)
    code, report, err = run_json(capsys, "expected-cost", str(prog))
    assert code == 2 and err.startswith("error:") and report["error"]


def test_missing_file(capsys):
    code, report, _ = run_json(capsys, "cps", "does/not/exist.lc")
    assert code == 2


def test_bad_moment_order(capsys):
    code, _, err = run(capsys, "expected-cost", fx("geometric.lc"), "--moments", "0")
    assert code == 2 and "--moments" in err


def test_trace_operation_in_cost_command(capsys):
    code, _, _ = run(capsys, "expected-cost", fx("event_a.lc"))
    assert code == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "wpcps", "expected-cost", fx("geometric.lc")],
                          capture_output=True, text=True, timeout=60)
    assert proc.returncode == 0 and abs(expected_cost_line(proc.stdout) - 1.0) < 1e-6
