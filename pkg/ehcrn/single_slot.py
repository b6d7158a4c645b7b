# -*- coding: Utf-8 -*

"""
Exact single-slot policies.

With one slot the problem reduces to a linear fractional program in
x = [p_p, p_s, delta_sp]. The no-cooperation optimum has a closed form, and
energy transfer is optimal exactly when the threshold zeta is below 1, in which
case the PU-rate and both energy constraints are tight and the optimum solves a
3x3 linear system.
"""

import math
import logging
from dataclasses import dataclass
import numpy as np
from .model import SystemParams, SlotData, ContractError
from .model import effective_budgets, require_single_slot, single_slot_feasible, su_rate, pu_rate, log2_1p
from .lp_core import solve_lfp

logger = logging.getLogger(__name__)

CROSS_CHECK_TOLERANCE = 1e-6
NEGATIVE_ROUNDING = 1e-12

class ThresholdUndefined(ValueError):
    pass

class InternalConsistencyError(RuntimeError):
    pass

@dataclass(frozen=True)
class SingleSlotSolution:
    p_p: float
    p_s: float
    delta_sp: float
    su_bits: float
    mode: str
    zeta: float = math.nan

    NO_COOPERATION = "no_cooperation"
    COOPERATION = "cooperation"
    INFEASIBLE = "infeasible"

    @property
    def feasible(self) -> bool:
        return self.mode != SingleSlotSolution.INFEASIBLE

    @staticmethod
    def infeasible(zeta: float = math.nan) -> "SingleSlotSolution":
        return SingleSlotSolution(0.0, 0.0, 0.0, 0.0, SingleSlotSolution.INFEASIBLE, zeta)

@dataclass(frozen=True)
class LfpStandardForm:
    matrix_a: np.ndarray
    beta: np.ndarray
    c: np.ndarray
    d: np.ndarray
    a_scalar: float
    b_scalar: float
    omega: float

def _solution(params: SystemParams, slot: SlotData, p_p: float, p_s: float, delta_sp: float, mode: str, zeta: float) -> SingleSlotSolution:
    return SingleSlotSolution(p_p, p_s, delta_sp, su_rate(slot, p_p, p_s, params.sigma2), mode, zeta)

def _clip_rounding(name: str, value: float, scale: float) -> float:
    if value < -NEGATIVE_ROUNDING * max(1.0, scale):
        raise ContractError(f"{name}={value!r} is negative: closed form used outside its regime")
    return max(value, 0.0)

##########################################################################################################################

def solve_no_cooperation(params: SystemParams, slot: SlotData) -> SingleSlotSolution:
    require_single_slot(params)
    e_p, e_s = effective_budgets(params, slot)
    omega = params.omega
    if omega == 0:
        return _solution(params, slot, 0.0, e_s, 0.0, SingleSlotSolution.NO_COOPERATION, math.nan)
    if not slot.h_pp * e_p / params.sigma2 >= omega:
        return SingleSlotSolution.infeasible()
    if slot.h_sp == 0:
        p_s = e_s
    else:
        p_s = max(0.0, min((slot.h_pp * e_p - omega * params.sigma2) / (omega * slot.h_sp), e_s))
    p_p = (slot.h_sp * omega * p_s + omega * params.sigma2) / slot.h_pp
    return _solution(params, slot, p_p, p_s, 0.0, SingleSlotSolution.NO_COOPERATION, math.nan)

def cooperation_threshold(params: SystemParams, slot: SlotData) -> float:
    require_single_slot(params)
    e_p, e_s = effective_budgets(params, slot)
    omega = params.omega
    if omega == 0:
        raise ThresholdUndefined("zeta is undefined for B_p = 0 (the PU constraint is vacuous)")
    if e_s == 0:
        raise ThresholdUndefined("zeta is undefined when ST has no energy")
    bracket = slot.h_pp * e_p - omega * params.sigma2
    if slot.h_sp == 0:
        # limit of the ratio as the ST-PR gain vanishes
        return math.inf if bracket >= 0 else -math.inf
    return bracket / (omega * slot.h_sp * e_s)

def solve_cooperative_closed_form(params: SystemParams, slot: SlotData) -> SingleSlotSolution:
    zeta = cooperation_threshold(params, slot)
    if not zeta < 1:
        raise ContractError(f"Cooperative closed form needs zeta < 1, got {zeta!r}")
    if not single_slot_feasible(params, slot):
        raise ContractError("Cooperative closed form called on an infeasible instance")
    e_p, e_s = effective_budgets(params, slot)
    omega = params.omega
    system = np.array([
        [-slot.h_pp, omega * slot.h_sp, 0.0],
        [1.0,        0.0,               -params.alpha],
        [0.0,        1.0,               1.0],
    ])
    rhs = np.array([-omega * params.sigma2, e_p, e_s])
    try:
        p_p, p_s, delta_sp = np.linalg.solve(system, rhs)
    except np.linalg.LinAlgError as e:
        raise ContractError("Singular cooperative system (alpha*h_pp + omega*h_sp = 0)") from e
    scale = max(e_p, e_s)
    p_p = _clip_rounding("p_p", float(p_p), scale)
    p_s = _clip_rounding("p_s", float(p_s), scale)
    delta_sp = _clip_rounding("delta_sp", float(delta_sp), scale)
    return _solution(params, slot, p_p, p_s, delta_sp, SingleSlotSolution.COOPERATION, zeta)

def build_lfp(params: SystemParams, slot: SlotData) -> LfpStandardForm:
    require_single_slot(params)
    e_p, e_s = effective_budgets(params, slot)
    omega = params.omega
    matrix_a = np.array([
        [-slot.h_pp, omega * slot.h_sp, 0.0],
        [1.0,        0.0,               -params.alpha],
        [0.0,        1.0,               1.0],
        [-1.0,       0.0,               0.0],
        [0.0,        -1.0,              0.0],
        [0.0,        0.0,               -1.0],
    ])
    beta = np.array([-omega * params.sigma2, e_p, e_s, 0.0, 0.0, 0.0])
    return LfpStandardForm(
        matrix_a=matrix_a,
        beta=beta,
        c=np.array([0.0, 1.0, 0.0]),
        d=np.array([slot.h_ps, 0.0, 0.0]),
        a_scalar=0.0,
        b_scalar=params.sigma2,
        omega=omega,
    )

def solve_with_lp(params: SystemParams, slot: SlotData) -> SingleSlotSolution:
    x, value, lp_solution = solve_lfp(build_lfp(params, slot))
    if x is None:
        return SingleSlotSolution.infeasible()
    p_p, p_s, delta_sp = (max(float(v), 0.0) for v in x)
    mode = SingleSlotSolution.COOPERATION if delta_sp > 0 else SingleSlotSolution.NO_COOPERATION
    logger.debug("LP solution %s after %d pivots", x, lp_solution.pivots)
    return SingleSlotSolution(p_p, p_s, delta_sp, float(log2_1p(slot.h_ss * value)), mode)

def solve_single_slot(params: SystemParams, slot: SlotData, cross_check: bool = True) -> SingleSlotSolution:
    require_single_slot(params)
    if not single_slot_feasible(params, slot):
        solution = SingleSlotSolution.infeasible()
    elif params.omega == 0:
        solution = solve_no_cooperation(params, slot)
    else:
        try:
            zeta = cooperation_threshold(params, slot)
        except ThresholdUndefined:
            zeta = math.nan
        if zeta < 1:
            solution = solve_cooperative_closed_form(params, slot)
            if solution.delta_sp == 0:
                solution = SingleSlotSolution(solution.p_p, solution.p_s, 0.0, solution.su_bits, SingleSlotSolution.NO_COOPERATION, zeta)
        else:
            solution = solve_no_cooperation(params, slot)
            solution = SingleSlotSolution(solution.p_p, solution.p_s, 0.0, solution.su_bits, solution.mode, zeta)
    if cross_check:
        _cross_check(params, slot, solution)
    return solution

def _cross_check(params: SystemParams, slot: SlotData, solution: SingleSlotSolution) -> None:
    reference = solve_with_lp(params, slot)
    if reference.feasible != solution.feasible:
        raise InternalConsistencyError(
            f"Closed form says {solution.mode} but the LP says {reference.mode} for {params!r}, {slot!r}"
        )
    if solution.feasible and abs(reference.su_bits - solution.su_bits) > CROSS_CHECK_TOLERANCE:
        raise InternalConsistencyError(
            f"Closed form gives {solution.su_bits!r} bits but the LP gives {reference.su_bits!r} for {params!r}, {slot!r}"
        )
    if solution.feasible:
        achieved = pu_rate(slot, solution.p_p, solution.p_s, params.sigma2)
        if params.b_p > 0 and abs(achieved - params.b_p) > 1e-9 * max(1.0, params.b_p):
            logger.warning("PU rate %.12g is not tight against B_p=%g", achieved, params.b_p)
