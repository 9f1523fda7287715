"""Command line driver: argument handling, exit codes, and file outputs,
all exercised in process through main().
"""

import pytest

from irswet.cli import _parse_grid, main
from irswet.conic import SolverFailureError
from irswet.experiments import CSV_HEADER, read_csv

TINY = ["--set", "n_elements=4", "--set", "n_ers=2"]


def test_grid_parsing():
    assert _parse_grid("2,4,8") == (2, 4, 8)
    assert _parse_grid("1-4") == (1, 2, 3, 4)
    assert _parse_grid("1,3-5") == (1, 3, 4, 5)
    assert _parse_grid("7") == (7,)
    with pytest.raises(ValueError):
        _parse_grid(",")


def test_solve_prints_row_and_exits_zero(capsys):
    assert main(["solve", "--scheme", "no-irs", *TINY, "--seed", "5"]) == 0
    out = capsys.readouterr().out
    assert "scheme=no-irs" in out and "status=ok" in out and "seed=5" in out


def test_solve_respects_slot_count_flag(capsys):
    assert main(["solve", "--scheme", "dynamic", *TINY, "--j", "2"]) == 0
    assert "j=2" in capsys.readouterr().out


def test_solve_writes_csv_and_json(tmp_path, capsys):
    csv_path, json_path = tmp_path / "row.csv", tmp_path / "row.json"
    code = main(["solve", "--scheme", "no-irs", *TINY,
                 "--out", str(csv_path), "--json", str(json_path)])
    assert code == 0
    lines = csv_path.read_text().splitlines()
    assert lines[0] == CSV_HEADER and len(lines) == 2
    assert len(read_csv(csv_path)) == 1
    assert json_path.exists()
    out = capsys.readouterr().out
    assert "wrote 1 rows" in out and "JSON mirror" in out


def test_sweeps_require_a_seed():
    with pytest.raises(SystemExit) as exc:
        main(["sweep-k", "--schemes", "no-irs"])
    assert exc.value.code == 2


def test_sweep_k_prints_group_means(tmp_path, capsys):
    csv_path = tmp_path / "sweep.csv"
    code = main(["sweep-k", "--grid", "1,2", "--set", "n_elements=4",
                 "--schemes", "no-irs", "--seed", "3", "--realizations", "2",
                 "--out", str(csv_path)])
    assert code == 0
    out = capsys.readouterr().out
    assert "scheme=no-irs k=1 mean_e=" in out
    assert "scheme=no-irs k=2 mean_e=" in out
    assert "n=2" in out
    assert len(read_csv(csv_path)) == 4


def test_sweep_j_defaults_to_the_dynamic_scheme(capsys):
    assert main(["sweep-j", "--grid", "1-2", *TINY, "--seed", "3"]) == 0
    out = capsys.readouterr().out
    assert "scheme=dynamic j=1 mean_e=" in out
    assert "scheme=dynamic j=2 mean_e=" in out


def test_rank_analysis_reports_per_k_profile(capsys):
    assert main(["rank-analysis", "--grid", "1,2", "--set", "n_elements=4",
                 "--seed", "1"]) == 0
    out = capsys.readouterr().out
    assert "k=1 mean_rank=" in out and "k=2 mean_rank=" in out


def test_usage_errors_exit_two(capsys):
    assert main(["solve", "--scheme", "no-irs", "--set", "oops"]) == 2
    assert main(["solve", "--scheme", "no-irs", "--set", "solver.tol=1"]) == 2
    assert main(["solve", "--scheme", "no-irs", "--config", "missing.yaml"]) == 2
    assert "error:" in capsys.readouterr().err


def test_solver_failure_exits_one(monkeypatch, capsys):
    from irswet import experiments as mod

    def boom(*args, **kwargs):
        raise SolverFailureError("synthetic")

    monkeypatch.setattr(mod.static_sdr, "solve_sdr_upper_bound", boom)
    assert main(["solve", "--scheme", "upper-bound", *TINY]) == 1
    assert "solver-failure" in capsys.readouterr().out


def test_config_file_drives_the_run(tmp_path, capsys):
    cfg = tmp_path / "tiny.yaml"
    cfg.write_text(
        "system:\n  n_elements: 4\n  n_ers: 3\n"
        "scenario:\n  schemes: [no-irs]\n")
    assert main(["solve", "--scheme", "no-irs", "--config", str(cfg)]) == 0
    assert "k=3" in capsys.readouterr().out
    assert main(["solve", "--scheme", "no-irs", "--config", str(cfg),
                 "--set", "n_ers=1"]) == 0
    assert "k=1" in capsys.readouterr().out
