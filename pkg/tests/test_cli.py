# -*- coding: Utf-8 -*

import os
import pandas as pd
import pytest
from ehcrn_bench import main, build_parser, __version__
from ehcrn_bench.constants import SWEEP_COLUMNS, PLOT_COLUMNS, ITERATION_COLUMNS, EXIT_SUCCESS, EXIT_USAGE, EXIT_INFEASIBLE

SINGLE_CONFIG = os.path.join(os.path.dirname(__file__), "..", "configs", "single.cfg")
MULTI_CONFIG = os.path.join(os.path.dirname(__file__), "..", "configs", "multi.cfg")

SMALL_SWEEP = """
[system]
alpha = 1.0
b_p = 1.0

[channel]
h_pp = 1.0
h_ps = 1.0
h_ss = 1.0
h_sp = 1.0

[energy]
kind = fixed
e_p = 0.6
e_s = 1.0

[sweep]
axis = alpha
grid = 0.5, 1.0
trials = 2
seed = 1
"""

SMALL_ORACLE = """
[system]
alpha = 0.8
b_p = 1.0

[channel]
var_pp = 1.0
var_ps = 0.5
var_ss = 1.0
var_sp = 0.5

[energy]
kind = exponential
e_p = 1.0
e_s = 1.0

[sweep]
seed = 3

[oracle]
instances = 3
points = 40
n_slots = 1
"""

def printed_values(text: str) -> dict[str, str]:
    values = dict()
    for line in text.splitlines():
        name, separator, value = line.partition(" = ")
        if separator:
            values[name.strip()] = value.strip()
    return values

def write_config(tmp_path, text: str) -> str:
    filepath = tmp_path / "run.cfg"
    filepath.write_text(text, encoding="utf-8")
    return str(filepath)

def test_version(capsys):
    with pytest.raises(SystemExit):
        build_parser().parse_args(["--version"])
    assert __version__ in capsys.readouterr().out

def test_solve_single_hand_instance(capsys):
    assert main(["solve-single", "--config", SINGLE_CONFIG, "-q"]) == EXIT_SUCCESS
    values = printed_values(capsys.readouterr().out)
    assert values["p_p"] == "0.85"
    assert values["p_s"] == "0.75"
    assert values["delta_sp"] == "0.25"
    assert values["zeta"] == "0.5"
    assert values["mode"] == "cooperation"

def test_solve_single_without_cooperation(capsys):
    assert main(["solve-single", "--config", SINGLE_CONFIG, "-q", "--set", "energy.e_s=0.3"]) == EXIT_SUCCESS
    values = printed_values(capsys.readouterr().out)
    assert values["mode"] == "no_cooperation"
    assert values["p_s"] == "0.3"
    assert values["p_p"] == "0.4"
    assert values["delta_sp"] == "0"

def test_solve_single_infeasible(capsys):
    assert main(["solve-single", "--config", SINGLE_CONFIG, "-q", "--set", "system.b_p=10"]) == EXIT_INFEASIBLE
    assert printed_values(capsys.readouterr().out)["mode"] == "infeasible"

def test_solve_single_writes_csv(tmp_path):
    out = tmp_path / "single.csv"
    assert main(["solve-single", "--config", SINGLE_CONFIG, "-q", "--out", str(out)]) == EXIT_SUCCESS
    frame = pd.read_csv(out)
    assert frame.loc[0, "delta_sp"] == pytest.approx(0.25)

def test_solve_single_refuses_several_slots(capsys):
    assert main(["solve-single", "--config", SINGLE_CONFIG, "--set", "system.n_slots=2"]) == EXIT_USAGE
    assert "n_slots" in capsys.readouterr().err

def test_bad_config_is_a_usage_error(tmp_path, capsys):
    filepath = write_config(tmp_path, "[system]\nalpha = 1.0\nbeta = 2.0\n")
    assert main(["solve-single", "--config", filepath]) == EXIT_USAGE
    assert f"{filepath}:3:" in capsys.readouterr().err

def test_multi_slot_one_iteration(tmp_path, capsys):
    log_path = tmp_path / "iterations.csv"
    code = main(["solve-multi", "--config", MULTI_CONFIG, "-q", "--set", "solver.epsilon=inf", "--set", f"output.iteration_log={log_path}"])
    assert code in (EXIT_SUCCESS, EXIT_INFEASIBLE)
    values = printed_values(capsys.readouterr().out)
    assert values["converged"] == "True"
    assert values["iterations"] == "1"
    frame = pd.read_csv(log_path)
    assert tuple(frame.columns) == ITERATION_COLUMNS
    assert len(frame) == 1

def test_sweep_csv_and_plot_data(tmp_path):
    out = tmp_path / "sweep.csv"
    plot = tmp_path / "plots" / "sweep.dat"
    filepath = write_config(tmp_path, SMALL_SWEEP + f"\n[output]\nplot_data = {plot}\n")
    assert main(["sweep", "--config", filepath, "-q", "--out", str(out), "--workers", "1"]) == EXIT_SUCCESS
    frame = pd.read_csv(out)
    assert tuple(frame.columns) == SWEEP_COLUMNS
    assert list(frame["value"]) == [0.5, 1.0]
    assert list(frame["trials"]) == [2, 2]
    assert frame.loc[1, "su_bits_coop"] > frame.loc[0, "su_bits_coop"]
    lines = plot.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "# alpha " + " ".join(PLOT_COLUMNS[1:])
    assert len(lines) == 3

def test_sweep_prints_csv_without_output(tmp_path, capsys):
    filepath = write_config(tmp_path, SMALL_SWEEP)
    assert main(["sweep", "--config", filepath, "-q", "--trials", "1"]) == EXIT_SUCCESS
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == ",".join(SWEEP_COLUMNS)
    assert lines[1].startswith("alpha,0.5,")
    assert lines[1].endswith(",1")

def test_empty_sweep_grid_is_a_usage_error(tmp_path, capsys):
    filepath = write_config(tmp_path, SMALL_SWEEP)
    assert main(["sweep", "--config", filepath, "--set", "sweep.grid="]) == EXIT_USAGE
    assert "grid" in capsys.readouterr().err

def test_oracle_check_rejects_long_horizons(tmp_path, capsys):
    filepath = write_config(tmp_path, SMALL_ORACLE)
    assert main(["oracle-check", "--config", filepath, "--set", "oracle.n_slots=3"]) == EXIT_USAGE
    assert "oracle supports N <= 2" in capsys.readouterr().err

def test_oracle_check_single_slot(tmp_path, capsys):
    filepath = write_config(tmp_path, SMALL_ORACLE)
    out = tmp_path / "oracle.csv"
    assert main(["oracle-check", "--config", filepath, "-q", "--workers", "2", "--out", str(out)]) == EXIT_SUCCESS
    values = printed_values(capsys.readouterr().out)
    assert values["instances"] == "3"
    assert values["violations"] == "0"
    assert len(pd.read_csv(out)) == 3

def test_trials_option_targets_oracle_instances(tmp_path, capsys):
    filepath = write_config(tmp_path, SMALL_ORACLE)
    assert main(["oracle-check", "--config", filepath, "-q", "--trials", "1", "--set", "oracle.points=10"]) == EXIT_SUCCESS
    assert printed_values(capsys.readouterr().out)["instances"] == "1"

SEEDED_SWEEP = """
[system]
alpha = 0.8

[channel]
preset = equal

[energy]
kind = exponential
e_p = 2.0
e_s = 2.0

[sweep]
axis = b_p
grid = 0.5, 1.0, 2.0
trials = 30
seed = 17
"""

def test_seeded_sweep_rerun_is_byte_identical(tmp_path):
    filepath = write_config(tmp_path, SEEDED_SWEEP)
    first = tmp_path / "first.csv"
    second = tmp_path / "second.csv"
    assert main(["sweep", "--config", filepath, "-q", "--out", str(first), "--workers", "1"]) == EXIT_SUCCESS
    assert main(["sweep", "--config", filepath, "-q", "--out", str(second), "--workers", "3"]) == EXIT_SUCCESS
    assert first.read_bytes() == second.read_bytes()

def test_oracle_check_draws_alpha_and_pu_target(tmp_path, capsys):
    filepath = write_config(tmp_path, SMALL_ORACLE)
    out = tmp_path / "oracle.csv"
    code = main(["oracle-check", "--config", filepath, "-q", "--workers", "1", "--out", str(out),
                 "--set", "oracle.alpha=0, 1", "--set", "oracle.b_p=0.5, 3", "--set", "channel.preset=equal",
                 "--set", "energy.kind=uniform", "--set", "energy.e_p=0.5, 5", "--set", "energy.e_s=0.5, 5"])
    assert code == EXIT_SUCCESS
    values = printed_values(capsys.readouterr().out)
    assert values["instances"] == "3"
    assert values["violations"] == "0"
