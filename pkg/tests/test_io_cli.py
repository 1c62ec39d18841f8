import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings

from xoverdesign import cli
from xoverdesign.io import (
    approximate_from_json,
    approximate_to_json,
    read_design_csv,
    solution_from_json,
    solution_to_json,
    write_design_csv,
)
from xoverdesign.model import ApproximateDesign, DesignError, ExactDesign
from xoverdesign.optimizer import solve

from conftest import exact_designs


@settings(max_examples=50)
@given(exact_designs())
def test_csv_round_trip(d):
    assert read_design_csv(write_design_csv(d), t=d.t) == d
    assert read_design_csv(write_design_csv(d, header=False), t=d.t) == d


def test_csv_transpose():
    text = "1,2,3\n2,3,1\n"
    d = read_design_csv(text, transpose=True)
    assert d.n == 3 and d.k == 2
    assert d.sequences()[0] == (1, 2)


def test_csv_rejects_text():
    with pytest.raises(DesignError):
        read_design_csv("1,a\n", t=2)


def test_approximate_json_round_trip():
    d = ApproximateDesign({(1, 2, 2): Fraction(1, 3), (2, 1, 1): Fraction(2, 3)}, 3, 2)
    back = approximate_from_json(approximate_to_json(d))
    assert back.items() == d.items()
    big = ApproximateDesign({(1, 10): 0.25, (10, 1): 0.75}, 2, 10, n=12)
    text = approximate_to_json(big)
    assert '"1,10"' in text
    assert approximate_from_json(text).n == 12


def test_solution_json_round_trip():
    sol = solve(3, 5, rational=True)
    back = solution_from_json(solution_to_json(sol))
    assert back.active == sol.active
    assert back.exact.h_star == sol.exact.h_star
    assert back.certificate.passed


def test_parse_helpers():
    assert cli.parse_t_range("2..5") == [2, 3, 4, 5]
    assert cli.parse_t_range("3, 7") == [3, 7]
    assert cli.parse_labels("1122333") == (1, 1, 2, 2, 3, 3, 3)
    assert cli.parse_labels("[1, 10, 2]") == (1, 10, 2)
    assert cli.fmt_rounded(0.001) == "0⁺"
    assert cli.fmt_rounded(0.998) == "1⁻"
    assert cli.fmt_rounded(0.0) == "0"
    assert cli.fmt_rounded(0.456) == "0.46"


def test_cli_optimize_rational(capsys):
    assert cli.main(["optimize", "-k", "3", "-t", "10", "--rational"]) == 0
    out = capsys.readouterr().out
    assert "1/4" in out and "3/4" in out and "h*  1/2" in out


def test_cli_optimize_json(capsys):
    assert cli.main(["optimize", "-k", "4", "-t", "3", "--format", "json"]) == 0
    obj = json.loads(capsys.readouterr().out)
    assert [a["class"] for a in obj["active"]] == ["1122"]


def test_cli_table(capsys):
    assert cli.main(["table", "-k", "3", "-t", "2..4", "--rational"]) == 0
    out = capsys.readouterr().out
    assert "16/39" in out and "Eff. [ 1 2 2 ]" in out


def test_cli_classes(capsys):
    assert cli.main(["classes", "-k", "4", "-t", "3", "--format", "json"]) == 0
    assert json.loads(capsys.readouterr().out)["count"] == 14


def test_cli_construct_evaluate_check(tmp_path, capsys):
    out = tmp_path / "d.csv"
    assert cli.main(["construct", "-t", "7", "--pattern", "112233", "--method", "gf", "-o", str(out)]) == 0
    meta = json.loads((tmp_path / "d.csv.json").read_text())
    assert meta["method"] == "gf" and meta["n"] == 42 and meta["seed"] == [1, 2, 3]
    capsys.readouterr()
    assert cli.main(["evaluate", str(out), "--format", "json"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["a_eff"] == pytest.approx(0.978, abs=5e-4)
    assert cli.main(["check", str(out), "--format", "json"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["strongly_balanced"] and rep["doubly_transitive"]


def test_cli_evaluate_with_saved_optimum(tmp_path, capsys):
    opt = tmp_path / "opt.json"
    assert cli.main(["optimize", "-k", "6", "-t", "5", "--format", "json", "-o", str(opt)]) == 0
    d = tmp_path / "d.csv"
    assert cli.main(["construct", "-t", "5", "--pattern", "112233", "-o", str(d)]) == 0
    capsys.readouterr()
    assert cli.main(["evaluate", str(d), "--optimum", str(opt)]) == 0
    assert "0.977" in capsys.readouterr().out


def test_cli_generate(tmp_path):
    out = tmp_path / "g.csv"
    assert cli.main(["generate", "122", "-t", "3", "-o", str(out)]) == 0
    assert read_design_csv(out.read_text(), t=3).n == 6


def test_cli_exit_codes(tmp_path, capsys):
    assert cli.main(["optimize", "-k", "1", "-t", "3"]) == cli.EXIT_USAGE
    assert cli.main(["optimize", "-k", "3", "-t", "31"]) == cli.EXIT_USAGE
    assert cli.main(["bogus"]) == cli.EXIT_USAGE
    assert cli.main(["construct", "-t", "6", "--pattern", "112233", "--method", "gf"]) == cli.EXIT_UNSUPPORTED
    big = tmp_path / "big.csv"
    d = ExactDesign(np.array([[u, u % 9 + 1] for u in range(1, 10)]), 9)
    big.write_text(write_design_csv(d))
    assert cli.main(["check", str(big)]) == cli.EXIT_UNSUPPORTED
    capsys.readouterr()
