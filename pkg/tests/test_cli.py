import io
import json
import math
import subprocess
import sys
from pathlib import Path

import jsonschema
import pytest

from gsp4bessel import cli

SCHEMA = json.loads((Path(__file__).resolve().parents[1] / "schemas" / "output.json").read_text())


def invoke(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = cli.run(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


def invoke_json(*argv):
    code, out, err = invoke(*argv)
    body = json.loads(out)
    jsonschema.validate(body, SCHEMA)
    return code, body


def test_lie_table():
    code, body = invoke_json("verify", "lie-table")
    assert code == 0
    assert body["passed"] == 100 and body["failed"] == 0
    assert body["max_deviation"] < 1e-14


def test_bessel_eval():
    code, body = invoke_json("bessel", "eval", "--l", "4", "--lp", "4", "--m", "0",
                             "--lambda", "1", "--zeta", "1", "--phi1", "0", "--phi2", "0")
    assert code == 0
    # the angular factor is 1 when l = lp, leaving lam^4 e^{-4 pi}
    assert body["re"] == pytest.approx(math.exp(-4 * math.pi), rel=1e-14)
    assert body["im"] == 0


def test_bessel_verify_all_suites():
    code, body = invoke_json("--samples", "20", "bessel", "verify", "--l", "7", "--lp", "3", "--m", "2",
                             "--s", "0.3j")
    assert code == 0
    assert set(body["suites"]) == {"pde", "annihilation", "weights", "coeffs"}
    assert all(v["passed"] for v in body["suites"].values())
    assert body["samples"] == 20


def test_ladder_json_and_csv(tmp_path):
    path = tmp_path / "ladder.csv"
    code, body = invoke_json("ladder", "--l", "8", "--lp", "6", "--m", "0", "--csv", str(path),
                             "--precision", "double")
    assert code == 0
    assert body["fits"]["printed"]["passed"] is False
    assert body["fits"]["corrected"]["passed"] is True
    assert body["fits"]["corrected"]["constant"]["re"] == pytest.approx(1 / 6)
    lines = path.read_text().splitlines()
    assert lines[0] == "lambda,zeta,phi1,phi2,re,im"
    assert len(lines) == 31


def test_split_demo_csv_default():
    code, out, _ = invoke("split", "demo", "--l", "10", "--lp", "10", "--beta-max", "50")
    assert code == 0
    rows = out.splitlines()
    assert rows[0] == "branch,t,beta,gap"
    assert len(rows) == 1 + 2 * 5 * 31


def test_split_demo_json():
    code, body = invoke_json("--format", "json", "split", "demo", "--l", "6", "--lp", "2")
    assert code == 0
    assert [b["branch"] for b in body["branches"]] == [1, -1]
    assert all(all(b["witnessed"]) for b in body["branches"])


def test_failed_check_exits_one():
    # a growth exponent this large is not overtaken on the default ray
    code, body = invoke_json("--format", "json", "split", "demo", "--l", "6", "--lp", "2",
                             "--beta-max", "1e6")
    assert code == 1
    assert body["ok"] is False


def test_zeta_closed_and_quadrature():
    code, body = invoke_json("zeta", "--l", "10", "--n", "3", "--D", "4", "--s", "1", "--r", "2",
                             "--quadrature")
    assert code == 0
    assert body["rel_err"] < 1e-6
    assert body["params"]["s"] == 1.0
    assert [(c["k"], c["j"]) for c in body["ckj"]] == [(0, 0), (1, 0)]


def test_zeta_without_quadrature():
    code, body = invoke_json("zeta", "--l", "12", "--n", "5", "--D", "3", "--s", "0.8", "--r", "1.5")
    assert code == 0
    assert body["quadrature"] is None and body["rel_err"] is None


@pytest.mark.parametrize("lp, expected", [(3, "convergent"), (2, "divergent")])
def test_lp_check(lp, expected):
    m = 1 if lp == 3 else 0
    code, body = invoke_json("lp-check", "--l", "6", "--lp", str(lp), "--m", str(m), "--p", "2")
    assert code == 0
    assert body["classification"] == expected
    assert body["numeric_convergent"] is (expected == "convergent")


@pytest.mark.parametrize("argv", [
    ("bessel", "eval", "--l", "4"),
    ("nonsense",),
    ("--samples", "0", "verify", "lie-table"),
    ("verify", "lie-table", "--bogus"),
])
def test_usage_errors_exit_two(argv):
    code, out, err = invoke(*argv)
    assert code == 2
    assert out == "" and err


def test_domain_errors_exit_two():
    code, out, err = invoke("bessel", "eval", "--l", "4", "--lp", "2", "--m", "3", "--lambda", "1",
                            "--zeta", "1.2", "--phi1", "0", "--phi2", "0")
    assert code == 2 and "NotRepresentable" in err
    code, _, err = invoke("zeta", "--l", "9", "--D", "4", "--s", "1", "--r", "2")
    assert code == 2
    code, _, err = invoke("--format", "csv", "verify", "lie-table")
    assert code == 2


def test_output_is_byte_identical_across_runs():
    argv = ("--samples", "10", "--seed", "7", "bessel", "verify", "--l", "6", "--lp", "2")
    assert invoke(*argv)[1] == invoke(*argv)[1]
    argv = ("split", "demo", "--l", "8", "--lp", "4")
    assert invoke(*argv)[1] == invoke(*argv)[1]


def test_float_formatting():
    assert cli.dumps(1.0) == "1.0"
    assert cli.dumps(float("inf")) == "null"
    assert cli.dumps(0.1) == "0.10000000000000001"
    assert json.loads(cli.dumps({"z": 1 + 2j})) == {"z": {"re": 1.0, "im": 2.0}}


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "gsp4bessel.cli", "verify", "lie-table"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["command"] == "verify lie-table"
