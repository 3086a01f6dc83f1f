"""
Tests for the command-line entry point.
"""

import json

import pytest

from impulsive_see import cli
from impulsive_see.config import dump_config
from impulsive_see.errors import ImpulsiveSEEError
from impulsive_see.presets import contraction_toy, dirichlet_heat_impulse, scalar_lq, scalar_ou


def _read(path):
    return path.read_text(encoding="utf-8")


class TestRunSubcommand:
    """Tests for run_subcommand"""

    def test_check_application_example(self, tmp_path):
        assert cli.run_subcommand("check", dirichlet_heat_impulse(), tmp_path) == 0
        data = json.loads(_read(tmp_path / "constants.json"))
        assert data["scenario"] == "dirichlet_heat_impulse"
        assert data["report"]["k1"] == pytest.approx(0.16)
        assert data["report"]["k2"] == pytest.approx(1.6)
        assert data["report"]["verdict_thm2"] is False
        assert data["max_certified_horizon_thm2"] is None
        assert set(data["audits"]) == {"growth_g", "growth_h", "lipschitz_g", "lipschitz_h"}

    def test_simulate_is_reproducible(self, tmp_path):
        config = scalar_ou()
        first, second, threaded = tmp_path / "a", tmp_path / "b", tmp_path / "c"
        assert cli.run_subcommand("simulate", config, first, seed=7, paths=200) == 0
        assert cli.run_subcommand("simulate", config, second, seed=7, paths=200) == 0
        assert cli.run_subcommand("simulate", config, threaded, seed=7, paths=200, threads=4) == 0
        for name in ("path.csv", "path_jumps.csv", "ensemble.csv", "simulate.json"):
            assert _read(first / name) == _read(second / name)
            assert _read(first / name) == _read(threaded / name)

    def test_simulate_files(self, tmp_path):
        assert cli.run_subcommand("simulate", scalar_ou(), tmp_path, paths=50, dt=0.1) == 0
        lines = _read(tmp_path / "path.csv").splitlines()
        assert lines[0] == "t,mode_0"
        assert len(lines) == 22
        assert _read(tmp_path / "path_jumps.csv") == "k,t_k,mode_0\n"
        summary = json.loads(_read(tmp_path / "simulate.json"))
        assert summary["n_paths"] == 50 and summary["steps"] == 20

    def test_picard_contraction_toy(self, tmp_path):
        assert cli.run_subcommand("picard", contraction_toy(), tmp_path, paths=16) == 0
        summary = json.loads(_read(tmp_path / "picard.json"))
        assert summary["converged"] is True
        assert summary["verdict_thm2"] is True
        assert summary["k_thm2"] == pytest.approx(0.085)
        rows = _read(tmp_path / "picard.csv").splitlines()
        assert rows[0] == "iteration,distance,ratio"
        assert rows[1].endswith(",")
        assert len(rows) == summary["iterations"] + 1

    def test_optimize_small_budget(self, tmp_path):
        config = scalar_lq()
        config = config.model_copy(update={"optimizer": config.optimizer.model_copy(update={"budget": 10})})
        assert cli.run_subcommand("optimize", config, tmp_path, dt=0.05) == 0
        assert len(_read(tmp_path / "history.csv").splitlines()) == 5
        control = _read(tmp_path / "control.csv").splitlines()
        assert control[0] == "t_left,t_right,u_0"
        assert len(control) == 5
        summary = json.loads(_read(tmp_path / "optimize.json"))
        assert summary["evaluations"] == 10
        assert summary["J_star"] <= summary["J_init"]

    def test_unknown_subcommand(self, tmp_path, capsys):
        assert cli.run_subcommand("bogus", scalar_ou(), tmp_path) == 2
        assert "✗" in capsys.readouterr().err

    def test_failure_removes_partial_outputs(self, tmp_path, monkeypatch, capsys):
        def boom(*args, **kwargs):
            raise ImpulsiveSEEError("ensemble failed")

        monkeypatch.setattr(cli, "monte_carlo", boom)
        out = tmp_path / "out"
        assert cli.run_subcommand("simulate", scalar_ou(), out, paths=10) == 1
        assert not out.exists()
        assert "ensemble failed" in capsys.readouterr().err

    def test_unexpected_error_removes_partial_outputs(self, tmp_path, monkeypatch, capsys):
        def boom(*args, **kwargs):
            raise FloatingPointError("overflow in ensemble")

        monkeypatch.setattr(cli, "monte_carlo", boom)
        out = tmp_path / "out"
        assert cli.run_subcommand("simulate", scalar_ou(), out, paths=10) == 1
        assert not out.exists()
        err = capsys.readouterr().err
        assert "✗ simulate failed with FloatingPointError: overflow in ensemble" in err

    def test_output_path_is_a_file(self, tmp_path, capsys):
        taken = tmp_path / "taken"
        taken.write_text("keep me", encoding="utf-8")
        assert cli.run_subcommand("check", scalar_ou(), taken) == 1
        assert _read(taken) == "keep me"
        assert "NotADirectoryError" in capsys.readouterr().err

    def test_invalid_override(self, tmp_path):
        out = tmp_path / "out"
        assert cli.run_subcommand("simulate", scalar_ou(), out, paths=0) == 1
        assert not out.exists()


class TestMain:
    """Tests for argument parsing and exit codes"""

    def test_show_config(self, capsys):
        with pytest.raises(SystemExit) as info:
            cli.main(["show-config", "--preset", "scalar_ou"])
        assert info.value.code == 0
        assert capsys.readouterr().out == dump_config(scalar_ou()) + "\n"

    def test_show_config_defaults_to_example(self, capsys):
        with pytest.raises(SystemExit):
            cli.main(["show-config"])
        assert json.loads(capsys.readouterr().out)["name"] == "dirichlet_heat_impulse"

    def test_unknown_command(self):
        with pytest.raises(SystemExit) as info:
            cli.main(["bogus"])
        assert info.value.code == 2

    def test_config_required(self):
        with pytest.raises(SystemExit) as info:
            cli.main(["check"])
        assert info.value.code == 2

    def test_bad_config_file(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text("{", encoding="utf-8")
        with pytest.raises(SystemExit) as info:
            cli.main(["check", "--config", str(path)])
        assert info.value.code == 1
        assert "not valid JSON" in capsys.readouterr().err

    def test_runs_from_config_file(self, tmp_path):
        path = tmp_path / "ou.json"
        path.write_text(dump_config(scalar_ou()), encoding="utf-8")
        out = tmp_path / "out"
        with pytest.raises(SystemExit) as info:
            cli.main(["simulate", "--config", str(path), "--out", str(out), "--paths", "20"])
        assert info.value.code == 0
        assert (out / "ensemble.csv").exists()

    def test_invalid_thread_env(self, monkeypatch, capsys):
        monkeypatch.setenv(cli.THREADS_ENV, "many")
        assert cli._default_threads() == 1
        assert "⚠" in capsys.readouterr().err

    def test_thread_env(self, monkeypatch):
        monkeypatch.setenv(cli.THREADS_ENV, "3")
        assert cli._default_threads() == 3

    def test_example_takes_no_scenario(self, tmp_path):
        path = tmp_path / "ou.json"
        path.write_text(dump_config(scalar_ou()), encoding="utf-8")
        with pytest.raises(SystemExit) as info:
            cli.main(["example", "--config", str(path)])
        assert info.value.code == 2


class TestExample:
    """Tests for the example subcommand"""

    def test_application_preset_sizes(self):
        config = dirichlet_heat_impulse()
        assert config.simulation.n_paths == 10_000
        assert config.optimizer.budget == 500

    @pytest.mark.slow
    def test_end_to_end(self, tmp_path):
        out = tmp_path / "out"
        with pytest.raises(SystemExit) as info:
            cli.main(["example", "--out", str(out), "--threads", "4"])
        assert info.value.code == 0
        summary = json.loads(_read(out / "summary.json"))
        assert summary["scenario"] == "dirichlet_heat_impulse"
        assert summary["n_paths"] == 10_000 and summary["budget"] == 500
        assert summary["check"]["k1"] == pytest.approx(0.16)
        assert summary["simulate"]["n_paths"] == 10_000
        ensemble = _read(out / "ensemble.csv").splitlines()
        assert ensemble[0] == "t,mean_sq_norm,standard_error"
        assert len(ensemble) == summary["simulate"]["steps"] + 2
        assert summary["optimize"]["evaluations"] == 499
        history = _read(out / "history.csv").splitlines()[1:]
        best = [float(row.split(",")[1]) for row in history]
        assert len(best) == 167
        assert all(b <= a for a, b in zip(best, best[1:], strict=False))
        for name in ("constants.json", "path.csv", "path_jumps.csv", "simulate.json", "control.csv"):
            assert (out / name).exists()
