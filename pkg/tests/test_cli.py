import json
from pathlib import Path

import pytest

from dinikkt import cli
from dinikkt.errors import ExpressionSyntaxError, FormatError

PROBLEMS = Path(__file__).resolve().parents[1] / "problems"


def write(tmp_path, doc, name="p.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc) if isinstance(doc, dict) else doc)
    return str(path)


GOOD = {"name": "t", "n": 1, "sense": "max", "objective": "x1", "inequalities": ["-x1"]}


class TestLoadProblem:
    def test_round_trip(self, tmp_path):
        p = cli.load_problem(write(tmp_path, GOOD))
        assert p.n == 1 and p.m == 1 and p.k == 0

    def test_bad_objective_pointer(self, tmp_path):
        with pytest.raises(ExpressionSyntaxError) as info:
            cli.load_problem(write(tmp_path, {**GOOD, "objective": "x1 +"}))
        assert info.value.pointer == "/objective"

    def test_bad_inequality_pointer(self, tmp_path):
        with pytest.raises(FormatError) as info:
            cli.load_problem(write(tmp_path, {**GOOD, "inequalities": ["x1", "x3"]}))
        assert info.value.pointer == "/inequalities/1"

    def test_invalid_json(self, tmp_path):
        with pytest.raises(FormatError):
            cli.load_problem(write(tmp_path, "{not json"))

    def test_shipped_problems_load(self):
        for path in sorted(PROBLEMS.glob("*.json")):
            p = cli.load_problem(path)
            assert p.candidate is not None


class TestExitCodes:
    def test_certified(self):
        code, rep = cli.run(["certify", str(PROBLEMS / "linear_pair.json"), "--at", "0"])
        assert code == cli.EXIT_OK
        assert rep["seed"] == cli.DEFAULT_SEED
        assert rep["certificates"]["kkt"]["lambdas"] == [1.0, 1.0]
        assert rep["settings"]["tol_stat"] == 1e-6

    def test_refuted(self):
        code, rep = cli.run(["certify", str(PROBLEMS / "linear_pair.json"), "--at=-0.3"])
        assert code == cli.EXIT_REFUTED

    def test_infeasible(self):
        code, rep = cli.run(["certify", str(PROBLEMS / "linear_pair.json"), "--at", "0.3"])
        assert code == cli.EXIT_INFEASIBLE
        assert rep["error"]["type"] == "InfeasibleCandidate"

    @pytest.mark.parametrize("argv", [
        ["eval", "x1 + * 2", "--at", "1"],
        ["certify", "/nonexistent/problem.json"],
        ["certify", "--bogus"],
        ["eval", "x1", "--at", "a,b"],
        [],
    ])
    def test_input_errors(self, argv):
        assert cli.run(argv)[0] == cli.EXIT_INPUT

    def test_syntax_error_reports_offset(self):
        _, rep = cli.run(["eval", "x1 + * 2", "--at", "1"])
        assert "5" in rep["error"]["message"]

    def test_defect(self, monkeypatch):
        def broken(*args, **kwargs):
            raise RuntimeError("boom")

        monkeypatch.setattr(cli.certify, "analyze", broken)
        code, rep = cli.run(["certify", str(PROBLEMS / "linear_pair.json")])
        assert code == cli.EXIT_DEFECT and rep["error"]["defect"]


class TestCommands:
    def test_eval(self):
        code, rep = cli.run(["eval", "abs(x1) - x2", "--at=-3,1"])
        assert code == 0 and rep["value"] == 2.0

    def test_derivative(self):
        code, rep = cli.run(["derivative", "--at", "0", "--dir", "1", "--", "-abs(x1)"])
        assert code == 0
        est = rep["estimates"]
        assert est["upper"]["value"] == -1.0
        assert est["modified_upper"]["value"] == 1.0
        assert est["clarke"]["value"] == pytest.approx(1.0)

    def test_certify_eq(self):
        code, rep = cli.run(["certify-eq", str(PROBLEMS / "circle.json")])
        assert code == 0
        assert rep["certificates"]["equality"]["w0"][0] == pytest.approx(-0.5, abs=1e-3)

    def test_pseudoconvex(self):
        code, rep = cli.run(["pseudoconvex", str(PROBLEMS / "half_plane.json"), "--samples", "6"])
        assert code == 0 and rep["pseudoconvex"]["verdict"] == "CONSISTENT"

    def test_oracle_solve(self):
        code, rep = cli.run(["oracle-solve", str(PROBLEMS / "disk.json"), "--resolution", "81"])
        assert code == 0 and rep["x_hat"] == [1.0, 1.0]

    def test_out_file(self, tmp_path, capsys):
        out = tmp_path / "r.json"
        assert cli.main(["eval", "x1^2", "--at", "3", "--out", str(out)]) == 0
        assert json.loads(out.read_text())["value"] == 9.0
        assert capsys.readouterr().out == ""

    def test_report_is_deterministic(self):
        argv = ["certify", str(PROBLEMS / "min_of_coordinates.json"), "--seed", "11"]
        a, b = cli.run(argv)[1], cli.run(argv)[1]
        a.pop("timestamp"), b.pop("timestamp")
        assert json.dumps(a, sort_keys=True, default=cli._json_default) == \
            json.dumps(b, sort_keys=True, default=cli._json_default)
