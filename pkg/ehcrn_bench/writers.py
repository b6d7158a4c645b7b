# -*- coding: Utf-8 -*

import logging
from typing import Sequence
import pandas as pd
from ehcrn import SweepResult, SingleSlotSolution, Policy, IterationLog, ensure_parent_directory
from .constants import CSV_FLOAT_FORMAT, SWEEP_COLUMNS, PLOT_COLUMNS, SINGLE_COLUMNS, POLICY_COLUMNS, ITERATION_COLUMNS, ORACLE_COLUMNS

logger = logging.getLogger(__name__)

def sweep_frame(result: SweepResult) -> pd.DataFrame:
    axis = result.config.axis
    rows = [
        (axis, point.axis_value, point.su_bits_coop, point.su_bits_no_coop, point.transferred_total,
         point.transferred_per_slot, point.infeasible_coop, point.infeasible_no_coop, point.trials)
        for point in result.points
    ]
    return pd.DataFrame(rows, columns=list(SWEEP_COLUMNS))

def single_frame(solution: SingleSlotSolution) -> pd.DataFrame:
    row = (solution.p_p, solution.p_s, solution.delta_sp, solution.zeta, solution.mode, solution.su_bits)
    return pd.DataFrame([row], columns=list(SINGLE_COLUMNS))

def policy_frame(policy: Policy) -> pd.DataFrame:
    return pd.DataFrame({
        "slot": range(1, policy.n_slots + 1),
        "p_p": policy.p_p,
        "p_s": policy.p_s,
        "delta_sp": policy.delta_sp,
    }, columns=list(POLICY_COLUMNS))

def iteration_frame(log: IterationLog) -> pd.DataFrame:
    return pd.DataFrame(log.rows(), columns=list(ITERATION_COLUMNS))

def oracle_frame(rows: Sequence[tuple]) -> pd.DataFrame:
    return pd.DataFrame(list(rows), columns=list(ORACLE_COLUMNS))

def frame_to_text(frame: pd.DataFrame) -> str:
    return frame.to_csv(index=False, float_format=CSV_FLOAT_FORMAT, na_rep="nan", lineterminator="\n")

def write_csv(frame: pd.DataFrame, filepath: str) -> None:
    ensure_parent_directory(filepath)
    with open(filepath, "w", encoding="utf-8", newline="") as file:
        file.write(frame_to_text(frame))
    logger.info("Wrote %d rows to %s", len(frame), filepath)

def write_plot_data(result: SweepResult, filepath: str) -> None:
    """Whitespace-separated columns with a '#' header line, readable by gnuplot or numpy.loadtxt."""
    frame = sweep_frame(result)
    frame = frame[list(PLOT_COLUMNS)]
    body = frame.to_csv(index=False, header=False, sep=" ", float_format=CSV_FLOAT_FORMAT, na_rep="nan", lineterminator="\n")
    ensure_parent_directory(filepath)
    with open(filepath, "w", encoding="utf-8", newline="") as file:
        file.write(f"# {result.config.axis} " + " ".join(PLOT_COLUMNS[1:]) + "\n")
        file.write(body)
    logger.info("Wrote plot data to %s", filepath)
