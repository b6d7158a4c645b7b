# -*- coding: Utf-8 -*

from .model import SystemParams, SlotData, Trace, Policy, FeasibilityReport, DomainError, ContractError, DEFAULT_TOLERANCE
from .model import su_rate, pu_rate, su_rates, pu_rates, su_bits, pu_bits, check_feasibility, effective_budgets, single_slot_feasible
from .lp_core import LinearProgram, LpSolution, NumericalFailure, DegenerateDenominatorError
from .lp_core import charnes_cooper, simplex_solve, recover_x, solve_lfp
from .single_slot import SingleSlotSolution, LfpStandardForm, ThresholdUndefined, InternalConsistencyError
from .single_slot import solve_no_cooperation, cooperation_threshold, solve_cooperative_closed_form, build_lfp, solve_with_lp, solve_single_slot
from .multi_slot import DualState, SubgradientConfig, IterationLog, MultiSlotResult
from .multi_slot import lagrangian, gradients, solve_subgradient, solve_multi_slot, warm_start_policy
from .repair import EnergyRegion, repair_and_verify, polish_policy
from .oracle import GridSpec, OracleResult, grid_search_n1, grid_search_n2, independent_constraint_check, clipped_trace
from .experiments import ChannelModel, FixedGains, EnergySpec, SweepConfig, SweepPoint, SweepResult, TrialOutcome, SweepError, REGIMES
from .experiments import trial_rng, sample_trace, run_sweep
from .clock import Clock
from .path import program_directory, resolve_input_file, ensure_parent_directory
from .thread import threaded_function, parallel_map
