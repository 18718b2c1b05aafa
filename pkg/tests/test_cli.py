import numpy as np
import pandas as pd
import pytest
from click.testing import CliRunner

from symfloq.cli import cli
from symfloq.errors import InvalidParamsError, LeakageError
from symfloq.harness.sweep import CSV_COLUMNS
from symfloq.harness.utils import companion_path, parse_angle, read_config, read_json, split_values, worker_count
from symfloq.harness.validate import CheckResult, ValidationReport


@pytest.fixture
def runner():
    """fixture for setting up the CLI runner"""
    return CliRunner()


@pytest.fixture
def config_file(tmp_path):
    """fixture for a key=value option file"""
    path = tmp_path / "symfloq.cfg"
    path.write_text("# defaults for simulate\nn-qubits = 5\nsteps = 4\nbogus = 1\n", encoding="utf-8")
    return path


def test_simulate_period_four(runner, tmp_path):
    """test the 'simulate' command on an N=4, J=1 trajectory"""
    out = tmp_path / "series.csv"
    result = runner.invoke(cli, ["simulate", "-n", "4", "--j", "1", "--theta0", "2pi/3", "--phi0=-pi/12",
                                 "--steps", "16", "--out", str(out)])

    assert result.exit_code == 0, result.output
    assert "➜ entanglement period: 4" in result.output
    series = pd.read_csv(out)
    assert list(series.columns) == ["step", "s_lin", "s_vn", "conc"]
    assert len(series) == 17
    summary = read_json(companion_path(out, "summary"))
    assert summary["operator_period"] == 8
    assert summary["entanglement_period"] == 4
    assert summary["averaging"] == "exact-period"
    assert sum(d["multiplicity"] for d in summary["degeneracies"]) == 5


def test_simulate_period_eight(runner, tmp_path):
    """test the 'simulate' command on an N=6, J=1/2 trajectory"""
    out = tmp_path / "series.csv"
    result = runner.invoke(cli, ["simulate", "-n", "6", "--j", "0.5", "--theta0", "pi/8", "--phi0=-pi/8",
                                 "--steps", "48", "--out", str(out)])

    assert result.exit_code == 0, result.output
    assert "➜ entanglement period: 8" in result.output
    assert read_json(companion_path(out, "summary"))["operator_period"] == 16


def test_simulate_zero_steps(runner, tmp_path):
    """test the 'simulate' command with no evolution"""
    out = tmp_path / "series.csv"
    result = runner.invoke(cli, ["simulate", "--theta0", "1.0", "--steps", "0", "--out", str(out)])

    assert result.exit_code == 0, result.output
    series = pd.read_csv(out)
    assert len(series) == 1
    assert series.loc[0, "s_lin"] == pytest.approx(0.0, abs=1e-12)


def test_simulate_json(runner, tmp_path):
    """test the 'simulate' command with JSON output"""
    out = tmp_path / "series.json"
    result = runner.invoke(cli, ["simulate", "--steps", "3", "--format", "json", "--out", str(out)])

    assert result.exit_code == 0, result.output
    records = read_json(out)
    assert [r["step"] for r in records] == [0, 1, 2, 3]
    assert companion_path(out, "summary").exists()


@pytest.mark.parametrize("args", [
    ["simulate", "-n", "1"],
    ["simulate", "--theta0", "north"],
    ["simulate", "--steps", "-1"],
    ["sweep-grid", "--grid-theta", "1"],
    ["sweep-j", "--j-step", "0"],
    ["sweep-n", "--n-min", "6", "--n-max", "4"],
])
def test_invalid_parameters(runner, tmp_path, args):
    """test that invalid parameters exit with a usage error"""
    result = runner.invoke(cli, args + ["--out", str(tmp_path / "out.csv")])

    assert result.exit_code == 2


def test_numeric_failure(runner, tmp_path, monkeypatch):
    """test that numeric failures exit with status 3"""
    def leaky(*args, **kwargs):
        raise LeakageError("cross-parity leakage 1e-3")

    monkeypatch.setattr("symfloq.cli.build_floquet", leaky)
    result = runner.invoke(cli, ["simulate", "--out", str(tmp_path / "series.csv")])

    assert result.exit_code == 3
    assert "Error simulating: cross-parity leakage" in result.output


def test_sweep_grid(runner, tmp_path):
    """test the 'sweep-grid' command on a 2x2 grid"""
    out = tmp_path / "grid.csv"
    result = runner.invoke(cli, ["sweep-grid", "-n", "4", "--j", "1", "--grid-theta", "2", "--grid-phi", "2",
                                 "--workers", "1", "--no-progress", "--out", str(out)])

    assert result.exit_code == 0, result.output
    assert "➜ 4 grid points written" in result.output
    with open(out, "r", encoding="utf-8") as f:
        assert f.readline().strip() == ",".join(CSV_COLUMNS)
    frame = pd.read_csv(out)
    assert len(frame) == 4
    assert frame.loc[0, "avg_s_lin"] == pytest.approx(0.25, abs=1e-12)
    extrema = read_json(companion_path(out, "extrema"))
    assert extrema["groups"][0]["n"] == 4


def test_sweep_grid_thread_cap(runner, tmp_path):
    """test that an invalid SYMFLOQ_THREADS is rejected"""
    result = runner.invoke(cli, ["sweep-grid", "--grid-theta", "2", "--grid-phi", "2", "--out",
                                 str(tmp_path / "grid.csv")], env={"SYMFLOQ_THREADS": "0"})

    assert result.exit_code == 2


def test_sweep_j(runner, tmp_path):
    """test the 'sweep-j' command at a single J"""
    out = tmp_path / "sweep_j.csv"
    result = runner.invoke(cli, ["sweep-j", "-n", "4", "--j-min", "1", "--j-max", "1", "--j-step", "0.1",
                                 "--workers", "1", "--no-progress", "--out", str(out)])

    assert result.exit_code == 0, result.output
    frame = pd.read_csv(out)
    assert frame["j"].tolist() == [1.0]
    assert frame.loc[0, "ratio"] == pytest.approx(0.5, abs=1e-12)
    dips = read_json(companion_path(out, "dips"))
    assert dips["states"][0]["dips"][0]["j"] == 1.0


def test_sweep_n(runner, tmp_path):
    """test the 'sweep-n' command over N=4,5"""
    out = tmp_path / "sweep_n.json"
    result = runner.invoke(cli, ["sweep-n", "--n-min", "4", "--n-max", "5", "--workers", "1", "--no-progress",
                                 "--format", "json", "--out", str(out)])

    assert result.exit_code == 0, result.output
    records = read_json(out)
    assert [r["n"] for r in records] == [4, 5]
    assert records[1]["avg_s_lin"] == pytest.approx(1 / 3, abs=1e-12)
    assert "ratio_vn" in records[0]
    assert "➜ even N: mean ratio 0.5" in result.output


def test_sweep_grid_several_pairs(runner, tmp_path):
    """test that 'sweep-grid' runs every (N, J) pair with N outer and J inner"""
    out = tmp_path / "grid.csv"
    result = runner.invoke(cli, ["sweep-grid", "-n", "4", "-n", "5", "--j", "1", "--j", "0.5", "--grid-theta", "2",
                                 "--grid-phi", "2", "--window", "200", "--horizon", "200", "--workers", "1",
                                 "--no-progress", "--out", str(out)])

    assert result.exit_code == 0, result.output
    assert "➜ 16 grid points written" in result.output
    frame = pd.read_csv(out)
    assert frame["n"].tolist() == [4] * 8 + [5] * 8
    assert frame["j"].tolist() == ([1.0] * 4 + [0.5] * 4) * 2
    assert frame.loc[0, "avg_s_lin"] == pytest.approx(0.25, abs=1e-12)
    assert frame.loc[4, "avg_s_lin"] == pytest.approx(0.375, abs=1e-12)
    extrema = read_json(companion_path(out, "extrema"))
    assert [(g["n"], g["j"]) for g in extrema["groups"]] == [(4, 1.0), (4, 0.5), (5, 1.0), (5, 0.5)]


def test_sweep_grid_measures(runner, tmp_path):
    """test that --measures limits the extrema report"""
    out = tmp_path / "grid.csv"
    result = runner.invoke(cli, ["sweep-grid", "--grid-theta", "2", "--grid-phi", "2", "--measures", "avg_conc",
                                 "--workers", "1", "--no-progress", "--out", str(out)])

    assert result.exit_code == 0, result.output
    group = read_json(companion_path(out, "extrema"))["groups"][0]
    assert set(group) == {"n", "j", "tau", "avg_conc"}


def test_sweep_j_several_states(runner, tmp_path):
    """test 'sweep-j' over two N and two initial states, rows in (N, J, state) order"""
    out = tmp_path / "sweep_j.csv"
    result = runner.invoke(cli, ["sweep-j", "-n", "4", "-n", "6", "--j-min", "0.5", "--j-max", "1", "--j-step",
                                 "0.5", "--state", "0,0", "--state", "pi/2,0", "--workers", "1", "--no-progress",
                                 "--out", str(out)])

    assert result.exit_code == 0, result.output
    frame = pd.read_csv(out)
    assert frame["n"].tolist() == [4] * 4 + [6] * 4
    assert frame["j"].tolist() == [0.5, 0.5, 1.0, 1.0] * 2
    assert frame["theta0"].tolist() == pytest.approx([0.0, np.pi / 2] * 4)
    assert frame.loc[0, "ratio"] == pytest.approx(0.75, abs=1e-12)
    assert frame.loc[2, "ratio"] == pytest.approx(0.5, abs=1e-12)
    dips = read_json(companion_path(out, "dips"))
    assert [s["n"] for s in dips["states"]] == [4, 4, 6, 6]
    assert [s["theta0"] for s in dips["states"]] == pytest.approx([0.0, np.pi / 2] * 2)


def test_sweep_j_bad_state(runner, tmp_path):
    """test that a malformed --state is a usage error"""
    result = runner.invoke(cli, ["sweep-j", "--state", "pi/2", "--out", str(tmp_path / "sweep_j.csv")])

    assert result.exit_code == 2


def test_config_repeated_options(runner, tmp_path):
    """test that a config file can list several values for a repeatable option"""
    path = tmp_path / "grid.cfg"
    path.write_text("n_qubits = 4; 5\nj = 1\ngrid_theta = 2\ngrid_phi = 2\n", encoding="utf-8")
    out = tmp_path / "grid.csv"
    result = runner.invoke(cli, ["-c", str(path), "sweep-grid", "--workers", "1", "--no-progress",
                                 "--out", str(out)])

    assert result.exit_code == 0, result.output
    assert pd.read_csv(out)["n"].tolist() == [4] * 4 + [5] * 4


def test_validate_golden(runner, tmp_path):
    """test the 'validate' command on the tabulated operators"""
    out = tmp_path / "validation.json"
    result = runner.invoke(cli, ["validate", "--suite", "golden", "--out", str(out)])

    assert result.exit_code == 0, result.output
    report = read_json(out)
    assert report["passed"] is True
    assert report["failed"] == 0


def test_validate_failure(runner, tmp_path, monkeypatch):
    """test that a failing validation exits with status 1"""
    failing = ValidationReport([CheckResult("oracle", "draw 0", False, {"deviations": {"rho1": 1.0}})])
    monkeypatch.setattr("symfloq.cli.run_validation", lambda *args, **kwargs: failing)
    result = runner.invoke(cli, ["validate", "--suite", "oracle", "--out", str(tmp_path / "validation.json")])

    assert result.exit_code == 1
    assert "✗ oracle: draw 0" in result.output


def test_config_defaults(runner, tmp_path, config_file):
    """test that a config file supplies option defaults"""
    out = tmp_path / "series.csv"
    result = runner.invoke(cli, ["--config", str(config_file), "simulate", "--out", str(out)])

    assert result.exit_code == 0, result.output
    summary = read_json(companion_path(out, "summary"))
    assert summary["n"] == 5
    assert summary["steps"] == 4


def test_config_overridden_by_flags(runner, tmp_path, config_file):
    """test that command-line flags win over the config file"""
    out = tmp_path / "series.csv"
    result = runner.invoke(cli, ["-c", str(config_file), "simulate", "-n", "6", "--out", str(out)])

    assert result.exit_code == 0, result.output
    summary = read_json(companion_path(out, "summary"))
    assert summary["n"] == 6
    assert summary["steps"] == 4


def test_malformed_config(runner, tmp_path):
    """test that an unreadable config file is a usage error"""
    path = tmp_path / "broken.cfg"
    path.write_text("steps 4\n", encoding="utf-8")
    result = runner.invoke(cli, ["-c", str(path), "simulate"])

    assert result.exit_code == 2


class TestHarnessUtils:
    @pytest.mark.parametrize("text,expected", [
        ("0.5", 0.5), ("pi", np.pi), ("pi/4", np.pi / 4), ("2pi/3", 2 * np.pi / 3), ("-pi/12", -np.pi / 12),
        ("1.5*pi", 1.5 * np.pi), ("π/2", np.pi / 2), (1, 1.0),
    ])
    def test_parse_angle(self, text, expected):
        assert parse_angle(text) == pytest.approx(expected)

    @pytest.mark.parametrize("text", ["north", "pi/", "2pi3"])
    def test_parse_angle_invalid(self, text):
        with pytest.raises(InvalidParamsError):
            parse_angle(text)

    def test_read_config(self, config_file):
        assert read_config(config_file) == {"n_qubits": "5", "steps": "4", "bogus": "1"}

    def test_worker_count(self, monkeypatch):
        monkeypatch.setenv("SYMFLOQ_THREADS", "3")
        assert worker_count() == 3
        assert worker_count(8) == 3
        assert worker_count(2) == 2
        monkeypatch.setenv("SYMFLOQ_THREADS", "many")
        with pytest.raises(InvalidParamsError):
            worker_count()

    def test_companion_path(self, tmp_path):
        assert companion_path(tmp_path / "sweep.csv", "extrema") == tmp_path / "sweep.extrema.json"

    @pytest.mark.parametrize("text,expected", [
        ("4", ["4"]), ("4 5", ["4", "5"]), ("4;5", ["4", "5"]), (" 0,0 ; pi/2,0 ", ["0,0", "pi/2,0"]), ("", []),
    ])
    def test_split_values(self, text, expected):
        assert split_values(text) == expected
