from __future__ import annotations

import json

import pytest

from fastplap.estimates.core import HypothesisError
from fastplap.harness import ConfigError, build_spec, parse_text, run, run_spec, selftest, sweep_spec, validate
from fastplap.harness.cli import main
from fastplap.harness.config import default_r, dumps, load_spec
from fastplap.params import ProblemParams

EXAMPLE = """\
problem = mdp
p = 1.3
n = 3
R = 1.0
R_domain = 3.0
initial = bump mass=1.0
grid_points = 800
eps = 1e-6
extinction_threshold = 1e-6
checks = positivity, aronson_caffarelli, benilan_crandall, aleksandrov, flux, energy, harnack_elliptic
seed = 42
"""

LARGE_REPLAY = """\
problem = closed-form-replay
solution = large
p = 1.5
n = 1
R = 1.0
R_domain = 1.0
grid_points = 801
checks = residual, benilan_crandall
"""


def spec_of(text: str, **overrides):
    values = parse_text(text)
    values.update(overrides)
    return build_spec(values)


@pytest.fixture(scope="module")
def example_report():
    return run_spec(spec_of(EXAMPLE))


class TestParsing:
    def test_example_round_trip(self):
        vals = parse_text(EXAMPLE)
        assert vals["p"] == 1.3 and vals["grid_points"] == 800 and len(vals["checks"]) == 7
        again = parse_text(dumps(vals))
        assert {k: v for k, v in again.items() if k != "_lines"} == {k: v for k, v in vals.items() if k != "_lines"}

    def test_comments_and_blank_lines(self):
        vals = parse_text("# header\n\np = 1.5  # trailing\nn = 2\n")
        assert {k: v for k, v in vals.items() if not k.startswith("_")} == {"p": 1.5, "n": 2}
        assert vals["_lines"] == {"p": 3, "n": 4}

    @pytest.mark.parametrize("text,line", [
        ("p = 1.5\nn = three\n", 2),
        ("p = 1.5\n\nbogus_key = 1\n", 3),
        ("p 1.5\n", 1),
    ])
    def test_errors_carry_line_numbers(self, text, line):
        with pytest.raises(ConfigError) as exc:
            parse_text(text)
        assert exc.value.line == line and f"line {line}" in str(exc.value)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_spec(tmp_path / "absent.txt")

    def test_default_r_follows_critical_exponent(self):
        assert default_r(ProblemParams(1.6, 3)) == 1.0
        assert default_r(ProblemParams(1.3, 3)) == 2.0
        assert spec_of(EXAMPLE).r == 2.0


class TestGating:
    def test_smoothing_zone_v(self):
        spec = spec_of(EXAMPLE, p=1.2, r=1.0, checks=("smoothing",))
        with pytest.raises(HypothesisError, match="zone V"):
            validate(spec)

    def test_l1_upper_bound_below_pc(self):
        spec = spec_of(EXAMPLE, p=1.2, checks=("extinction_upper_l1",))
        with pytest.raises(HypothesisError, match="impossible"):
            validate(spec)

    def test_all_violations_listed(self):
        spec = spec_of(EXAMPLE, p=1.2, r=1.0, checks=("smoothing", "extinction_upper_l1"))
        with pytest.raises(HypothesisError) as exc:
            validate(spec)
        assert "smoothing" in str(exc.value) and "extinction_upper_l1" in str(exc.value)

    def test_gating_precedes_solve(self, monkeypatch):
        import fastplap.harness.runner as runner

        def boom(*a, **k):
            raise AssertionError("solver must not start")

        monkeypatch.setattr(runner, "solve_experiment", boom)
        with pytest.raises(HypothesisError):
            run_spec(spec_of(EXAMPLE, p=1.2, r=1.0, checks=("smoothing",)))


class TestRun:
    def test_example_spec_passes(self, example_report):
        names = [c.name for c in example_report.checks]
        for required in ("positivity", "benilan_crandall", "aleksandrov"):
            assert required in names
        assert example_report.passed, example_report.summary()

    def test_deterministic_csv(self):
        spec = spec_of(EXAMPLE, grid_points=200, checks=("positivity", "benilan_crandall", "aleksandrov"))
        assert run_spec(spec).csv() == run_spec(spec).csv()

    def test_large_replay_residual(self):
        rep = run_spec(spec_of(LARGE_REPLAY))
        row = next(c for c in rep.checks if c.name == "residual")
        assert row.lhs < 1e-6 and row.passed
        assert row.empirical_constant == pytest.approx(2.0, abs=0.1)
        assert rep.passed

    def test_files_written(self, tmp_path):
        spec_file = tmp_path / "run.txt"
        spec_file.write_text(LARGE_REPLAY)
        rep = run(spec_file, tmp_path / "out")
        out = tmp_path / "out"
        assert {p.name for p in out.iterdir()} == {"checks.csv", "report.json", "summary.txt", "plot_data.csv"}
        data = json.loads((out / "report.json").read_text())
        assert data["passed"] is rep.passed and len(data["checks"]) == len(rep.checks)
        assert (out / "plot_data.csv").read_text().startswith("time,quantity,series,value\n")


class TestSweep:
    def test_lambda_slope(self):
        spec = spec_of(EXAMPLE, grid_points=400, checks=("benilan_crandall",))
        rep = sweep_spec(spec, "lambda", [1, 2, 4, 8])
        row = next(c for c in rep.checks if c.name == "extinction_scaling")
        assert row.lhs == pytest.approx(0.8, rel=1e-3)
        assert rep.passed

    def test_eps_cauchy(self):
        spec = spec_of(EXAMPLE, p=1.6, grid_points=200, checks=("aleksandrov",))
        rep = sweep_spec(spec, "eps", [1e-3, 1e-4, 1e-5, 1e-6])
        row = next(c for c in rep.checks if c.name == "eps_cauchy")
        diffs = row.context["sup_differences"]
        assert all(b < a for a, b in zip(diffs, diffs[1:]))

    def test_grid_points_residual_order(self):
        spec = spec_of(LARGE_REPLAY, checks=("residual",))
        rep = sweep_spec(spec, "grid_points", [201, 401, 801])
        row = next(c for c in rep.checks if c.name == "residual_order")
        assert row.lhs == pytest.approx(2.0, abs=0.15) and row.passed

    def test_rejects_unknown_parameter(self):
        with pytest.raises(ValueError):
            sweep_spec(spec_of(EXAMPLE), "n", [1, 2])


class TestSelftest:
    def test_default_passes(self):
        rep = selftest(draws=100_000)
        assert rep.passed and len(rep.checks) > 10

    def test_injected_constant_detected(self):
        rep = selftest(suites=["cp"], cp_override=2.0, draws=10_000)
        assert not rep.passed

    def test_empty_suite_list(self):
        rep = selftest(suites=[])
        assert rep.passed and rep.checks == []


class TestCli:
    def test_selftest_exit_codes(self, capsys):
        assert main(["selftest", "--suites", "moser"]) == 0
        assert main(["selftest", "--suites", "cp", "--draws", "1000", "--inject-cp", "2"]) == 1
        assert main(["selftest", "--suites", ""]) == 0
        assert "0/0 checks pass" in capsys.readouterr().out

    def test_config_error_exit_code(self, tmp_path, capsys):
        f = tmp_path / "bad.txt"
        f.write_text("p = 1.5\nwat = 2\n")
        assert main(["check", str(f)]) == 2
        assert "line 2" in capsys.readouterr().err

    def test_gating_exit_code(self, tmp_path, capsys):
        f = tmp_path / "gate.txt"
        f.write_text(EXAMPLE.replace("p = 1.3", "p = 1.2").replace(
            "checks = positivity", "r = 1\nchecks = smoothing, extinction_upper_l1, positivity"))
        assert main(["check", str(f)]) == 2
        err = capsys.readouterr().err
        assert "zone V" in err and "impossible" in err

    def test_check_and_report(self, tmp_path, capsys):
        f = tmp_path / "replay.txt"
        f.write_text(LARGE_REPLAY)
        out = tmp_path / "out"
        assert main(["check", str(f), "--out", str(out)]) == 0
        first = capsys.readouterr().out
        assert main(["report", str(out)]) == 0
        assert capsys.readouterr().out == first

    def test_report_missing_dir(self, tmp_path):
        assert main(["report", str(tmp_path / "nothing")]) == 2
