import json

import pytest
from click.testing import CliRunner

from conftest import fixture_path
from qsodyn.cli import EXIT_PARSE, EXIT_VALIDATION, main


@pytest.fixture
def runner():
    return CliRunner()


def run_json(runner, args):
    result = runner.invoke(main, args)
    assert result.exit_code == 0, result.output
    return json.loads(result.output)


class TestValidate:
    def test_clean_fixture(self, runner):
        payload = run_json(runner, ["validate", "--spec", fixture_path("va_a05")])
        assert payload["result"]["tensor_valid"]
        assert not payload["result"]["numeric_b_verdict"]["violated"]
        assert payload["spec_hash"]
        assert payload["tool_version"]

    def test_parse_error_exit_code(self, runner, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        result = runner.invoke(main, ["validate", "--spec", str(bad)])
        assert result.exit_code == EXIT_PARSE
        err = json.loads(result.stderr)
        assert err["error"] == "parse_error"

    def test_validation_error_exit_code(self, runner, tmp_path):
        spec = tmp_path / "invalid.json"
        spec.write_text(
            json.dumps(
                {"n": 2, "coefficients": [{"i": 1, "j": 1, "k": 1, "p": 0.5}]}
            )
        )
        result = runner.invoke(main, ["validate", "--spec", str(spec)])
        assert result.exit_code == EXIT_VALIDATION
        err = json.loads(result.stderr)
        assert err["error"] == "validation_error"


class TestClassify:
    def test_example_report(self, runner):
        payload = run_json(
            runner, ["classify", "--spec", fixture_path("attracting_not_unique")]
        )
        r = payload["result"]
        assert r["vertex_stability"] == "attracting"
        assert r["uniqueness_conditions_met"] is False
        assert r["contraction"]["is_strict"] is False

    def test_deterministic_output(self, runner):
        args = ["classify", "--spec", fixture_path("va_a23"), "--seed", "5"]
        first = runner.invoke(main, args)
        second = runner.invoke(main, args)
        assert first.output == second.output


class TestIterate:
    def test_csv_columns(self, runner):
        result = runner.invoke(
            main,
            ["iterate", "--spec", fixture_path("va_a23"), "--x", "0.99,0.01"],
        )
        assert result.exit_code == 0
        lines = result.output.strip().splitlines()
        assert lines[0] == "step,x_1,x_2,U_1,step_l1"
        last = lines[-1].split(",")
        assert float(last[1]) <= 1e-10

    def test_dimension_mismatch(self, runner):
        result = runner.invoke(
            main, ["iterate", "--spec", fixture_path("va_a05"), "--x", "0.2,0.3,0.5"]
        )
        assert result.exit_code == EXIT_VALIDATION


class TestFixedPoints:
    def test_three_points(self, runner):
        payload = run_json(
            runner, ["fixed-points", "--spec", fixture_path("attracting_not_unique")]
        )
        pts = {tuple(round(c, 9) for c in p["coords"]) for p in payload["result"]["points"]}
        assert pts == {(1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0)}
        assert all(p["residual_l1"] <= 1e-9 for p in payload["result"]["points"])


class TestMarkov:
    def test_matrices_and_measures(self, runner):
        payload = run_json(
            runner,
            ["markov", "--spec", fixture_path("va_a05"), "--x", "0.5,0.5", "--horizon", "3"],
        )
        r = payload["result"]
        assert r["transition_matrices"]["0"] == [[0.25, 0.75], [0.0, 1.0]]
        assert r["cylinder_measures"]["[0,1](1,1)"] == pytest.approx(0.125)
        assert r["cylinder_measures"]["[0,1](2,1)"] == 0.0


class TestMixing:
    def test_series_csv(self, runner):
        result = runner.invoke(
            main,
            [
                "mixing",
                "--spec",
                fixture_path("va_a05"),
                "--x",
                "0.5,0.5",
                "--A",
                "0:1",
                "--B",
                "0:1",
                "--m-max",
                "8",
            ],
        )
        assert result.exit_code == 0
        lines = result.output.strip().splitlines()
        assert lines[0] == "m,tau_m,bound_m"
        taus = [float(line.split(",")[1]) for line in lines[1:]]
        assert taus[-1] < 1e-10

    def test_bad_cylinder_syntax(self, runner):
        result = runner.invoke(
            main,
            ["mixing", "--spec", fixture_path("va_a05"), "--x", "0.5,0.5", "--A", "oops", "--B", "0:1"],
        )
        assert result.exit_code == EXIT_VALIDATION


class TestAbscont:
    def test_equivalent_both_directions(self, runner):
        for x, y in [("0.3,0.7", "0.6,0.4"), ("0.6,0.4", "0.3,0.7")]:
            payload = run_json(
                runner,
                ["abscont", "--a", "0.5", "--x", x, "--y", y, "--m-max", "12"],
            )
            assert payload["result"]["classification"] == "equivalent_evidence"

    def test_discrepancy_log_present(self, runner):
        payload = run_json(
            runner,
            ["abscont", "--a", "0.5", "--x", "0.3,0.7", "--y", "0.6,0.4", "--m-max", "6"],
        )
        assert payload["result"]["closed_form_discrepancies"]

    def test_csv_format(self, runner):
        result = runner.invoke(
            main,
            ["abscont", "--a", "0.5", "--x", "0.3,0.7", "--y", "0.6,0.4", "--format", "csv"],
        )
        assert result.exit_code == 0
        assert result.output.splitlines()[0] == "m,K_term,Khat_term,partial_sum"


class TestRnSweep:
    def test_heuristic_label(self, runner):
        payload = run_json(
            runner,
            [
                "rn-sweep",
                "--spec",
                fixture_path("va_a05"),
                "--x",
                "0.3,0.7",
                "--y",
                "0.6,0.4",
                "--samples",
                "50",
                "--seed",
                "1",
            ],
        )
        assert payload["result"]["heuristic"] is True
        assert payload["config"]["seed"] == 1


def test_out_directory(runner, tmp_path):
    out = tmp_path / "reports"
    result = runner.invoke(
        main,
        ["validate", "--spec", fixture_path("va_a05"), "--out", str(out)],
    )
    assert result.exit_code == 0
    assert (out / "validate.json").exists()
