import csv
import io
import json

import pytest

from runsapprox.cli import main
from runsapprox.stein import BoundReport


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def csv_rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_pmf_brute_force_example(capsys):
    code, out, _ = run(capsys, "pmf", "--k1", "1", "--k2", "1", "--n", "3", "--p", "0.5", "--format", "csv")
    assert code == 0
    rows = csv_rows(out)
    assert rows[1]["m"] == "1" and float(rows[1]["probability"]) == 0.125


def test_pmf_exact_mode_renders_fractions(capsys):
    code, out, _ = run(capsys, "pmf", "--k1", "1", "--k2", "1", "--n", "3", "--p", "1/2", "--mode", "exact")
    assert code == 0
    assert [r["probability"] for r in csv_rows(out)] == ["7/8", "1/8"]


@pytest.mark.parametrize("route", ["recursive", "embedding", "closed", "brute-force"])
def test_pmf_routes_agree_exactly(capsys, route):
    code, out, _ = run(capsys, "pmf", "--k1", "2", "--k2", "1", "--n", "9", "--p", "3/10",
                       "--mode", "exact", "--route", route)
    assert code == 0
    assert [r["probability"] for r in csv_rows(out)] == [
        r["probability"] for r in csv_rows(
            run(capsys, "pmf", "--k1", "2", "--k2", "1", "--n", "9", "--p", "3/10", "--mode", "exact")[1])
    ]


def test_pmf_short_sequence(capsys):
    code, out, _ = run(capsys, "pmf", "--k1", "3", "--k2", "4", "--n", "7", "--q", "0.11")
    rows = csv_rows(out)
    assert code == 0 and rows[0]["m"] == "0" and float(rows[0]["probability"]) == 1
    assert all(float(r["probability"]) == 0 for r in rows[1:])


def test_pmf_monte_carlo_has_stderr(capsys):
    code, out, _ = run(capsys, "pmf", "--k1", "1", "--k2", "1", "--n", "10", "--p", "0.5",
                       "--route", "monte-carlo", "--trials", "2000", "--seed", "3")
    assert code == 0 and "stderr" in out.splitlines()[0]


@pytest.mark.parametrize("argv", [
    ["pmf", "--k1", "1", "--k2", "1", "--n", "-1", "--p", "0.5"],
    ["pmf", "--k1", "1", "--k2", "1", "--n", "5", "--p", "1.5"],
    ["pmf", "--k1", "1", "--k2", "1", "--n", "5", "--p", "0.5", "--q", "0.5"],
    ["pmf", "--k1", "0", "--k2", "1", "--n", "5", "--p", "0.5"],
    ["pmf", "--k1", "1", "--k2", "1", "--n", "30", "--p", "0.5", "--route", "brute-force"],
    ["moments", "--k1", "1", "--k2", "1", "--n", "5", "--p", "0.5", "--j-max", "0"],
    ["bounds", "--family", "poisson", "--k1", "1", "--k2", "1", "--n", "5", "--p", "0.5", "--alpha", "2"],
])
def test_usage_errors_exit_2(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 2 and out == "" and err.startswith("runsapprox: error:")


def test_argparse_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["pmf", "--k1", "1"])
    assert exc.value.code == 2


def test_moments(capsys):
    code, out, _ = run(capsys, "moments", "--k1", "1", "--k2", "1", "--n", "3", "--p", "1/2",
                       "--mode", "exact", "--j-max", "2")
    assert code == 0
    assert [r["moment"] for r in csv_rows(out)] == ["1/8", "1/8"]


def test_waiting(capsys):
    code, out, _ = run(capsys, "waiting", "--k1", "1", "--k2", "1", "--p", "1/2", "--mode", "exact",
                       "--m-max", "4")
    rows = csv_rows(out)
    assert code == 0 and rows[0]["m"] == "3" and rows[0]["probability"] == "1/8"
    code, out, _ = run(capsys, "waiting", "--k1", "1", "--k2", "1", "--p", "1/2", "--mode", "exact",
                       "--moments", "1")
    assert csv_rows(out)[0]["moment"] == "18"


def test_bounds_poisson_table_value(capsys):
    code, out, _ = run(capsys, "bounds", "--family", "poisson", "--one", "--k1", "3", "--k2", "4",
                       "--n", "50", "--q", "0.11")
    assert code == 0 and csv_rows(out)[0]["bound"] == "0.233227"


@pytest.mark.parametrize("family,k1,k2,n,q", [
    ("pseudo-binomial", "3", "4", "50", "0.11"),
    ("negative-binomial", "4", "5", "250", "0.14"),
])
def test_bounds_two_parameter_marker(capsys, family, k1, k2, n, q):
    code, out, _ = run(capsys, "bounds", "--family", family, "--two", "--k1", k1, "--k2", k2,
                       "--n", n, "--q", q)
    assert code == 0 and csv_rows(out)[0]["bound"] == "NA(s_nk)"


def test_bounds_grid_order(capsys):
    code, out, _ = run(capsys, "bounds", "--family", "poisson", "--k1", "1", "--k2", "1",
                       "--n", "6,8", "--p", "0.3,0.5")
    rows = csv_rows(out)
    assert [(r["n"], r["p"]) for r in rows] == [("6", "0.3"), ("6", "0.5"), ("8", "0.3"), ("8", "0.5")]


def test_table_preset_annotations(capsys):
    code, out, _ = run(capsys, "table", "--preset", "paper-table-1")
    rows = csv_rows(out)
    assert code == 0 and len(rows) == 60
    pois = [r["bound"] for r in rows if r["family"] == "poisson" and r["n"] == "250"]
    assert pois[:3] == ["0.028102", "0.037287", "0.048435"]
    pb2 = [r for r in rows if r["family"] == "pseudo-binomial" and r["parameters"] == "2"
           and r["n"] == "150" and r["q"] == "0.12"]
    assert float(pb2[0]["bound"]) == pytest.approx(0.031718, rel=1e-3)
    nb2 = [r["bound"] for r in rows if r["family"] == "negative-binomial" and r["parameters"] == "2"]
    assert "BLOCKED(c7)" in nb2
    code, out, _ = run(capsys, "table", "--assume-c7")
    nb2 = [r for r in csv_rows(out) if r["family"] == "negative-binomial" and r["parameters"] == "2"
           and r["bound"] not in ("NA(s_nk)", "NA(n)")]
    assert nb2 and all("ASSUMED(c7)" in r["notes"] for r in nb2)


def test_verify_passes(capsys):
    code, out, _ = run(capsys, "verify")
    assert code == 0
    assert all(r["status"] == "pass" for r in csv_rows(out))


def test_verify_catches_injected_fault(capsys):
    code, out, err = run(capsys, "verify", "--inject-fault", "A")
    assert code == 1
    assert "four-way PMF agreement" in err


def test_verify_waiting(capsys):
    code, out, _ = run(capsys, "verify", "--waiting")
    rows = csv_rows(out)
    assert code == 0 and len(rows) == 1 and rows[0]["check"] == "waiting-time law"


def test_json_schema_and_round_trip(capsys):
    code, out, _ = run(capsys, "bounds", "--family", "negative-binomial", "--two", "--k1", "3",
                       "--k2", "4", "--n", "50", "--q", "0.11,0.12", "--format", "json")
    doc = json.loads(out)
    assert code == 0 and doc["schema"] == 1 and doc["config"]["family"] == "negative-binomial"
    for row in doc["rows"]:
        rep = BoundReport.from_dict(row)
        assert json.loads(json.dumps(rep.to_dict())) == {k: row[k] for k in rep.to_dict()}
    assert [r["bound_cell"] for r in doc["rows"]] == ["BLOCKED(c7)", "BLOCKED(c7)"]
    assert json.loads(json.dumps(doc)) == doc


def test_csv_uses_lf(tmp_path, capsys):
    target = tmp_path / "out.csv"
    code, out, _ = run(capsys, "table", "--output", str(target))
    data = target.read_bytes()
    assert code == 0 and out == ""
    assert b"\r\n" not in data and data.endswith(b"\n")
    assert data.decode("utf-8").splitlines()[0] == "family,parameters,k1,k2,n,p,q,bound,matched,notes"
