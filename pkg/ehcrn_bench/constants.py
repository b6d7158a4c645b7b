# -*- coding: Utf-8 -*

EXIT_SUCCESS = 0
EXIT_USAGE = 1
EXIT_INFEASIBLE = 2
EXIT_ORACLE_VIOLATION = 3

ORACLE_MAX_SLOTS = 2
ORACLE_RATIO_GATE = 0.90

CSV_FLOAT_FORMAT = "%.9g"

SWEEP_COLUMNS = (
    "axis", "value",
    "su_bits_coop", "su_bits_no_coop",
    "transferred_total", "transferred_per_slot",
    "infeasible_coop", "infeasible_no_coop", "trials",
)
PLOT_COLUMNS = ("value", "su_bits_coop", "su_bits_no_coop", "transferred_total", "transferred_per_slot")
SINGLE_COLUMNS = ("p_p", "p_s", "delta_sp", "zeta", "mode", "su_bits")
POLICY_COLUMNS = ("slot", "p_p", "p_s", "delta_sp")
ITERATION_COLUMNS = ("iter", "delta_norm", "lagrangian", "pu_slack", "worst_violation")
ORACLE_COLUMNS = ("instance", "solver_bits", "oracle_bits", "error_bound", "ratio", "violation")
