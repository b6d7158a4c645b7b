# -*- coding: Utf-8 -*

"""
Brute-force reference solvers for one and two slots, and a constraint checker
written without the helpers of the model module.

The PU-rate test of the grids is evaluated with the ST interference reduced by
one grid step, so a grid point may undershoot B_p by at most
OracleResult.pu_tolerance bits.
"""

import math
import logging
from dataclasses import dataclass
from typing import Optional
import numpy as np
from .model import SystemParams, SlotData, Trace, Policy, FeasibilityReport, ContractError, DomainError, LN2, DEFAULT_TOLERANCE
from .model import effective_budgets, require_single_slot, su_bits as trace_su_bits
from .thread import parallel_map, split_in_chunks, default_workers

logger = logging.getLogger(__name__)

GRID_TOLERANCE = 1e-9
ERROR_BOUND_STEPS = 3
N2_BATCH = 64

@dataclass(frozen=True)
class GridSpec:
    points: int = 400

    def __post_init__(self):
        if int(self.points) != self.points or self.points < 2:
            raise DomainError(f"A grid needs at least 2 points per axis, got {self.points!r}")
        object.__setattr__(self, "points", int(self.points))

    def axis(self, upper: float) -> np.ndarray:
        return np.linspace(0.0, upper, self.points)

    def step(self, upper: float) -> float:
        return upper / (self.points - 1)

@dataclass(frozen=True)
class OracleResult:
    policy: Optional[Policy]
    su_bits: float
    error_bound: float
    pu_tolerance: float
    points: int

    @property
    def feasible(self) -> bool:
        return self.policy is not None

    def __iter__(self):
        return iter((self.policy, self.su_bits))

@dataclass(frozen=True)
class _Incumbent:
    ratio: float
    index: tuple[int, ...]

    @staticmethod
    def best(incumbents: list[Optional["_Incumbent"]]) -> Optional["_Incumbent"]:
        candidates = [incumbent for incumbent in incumbents if incumbent is not None]
        if not candidates:
            return None
        # highest value, lowest index on ties: independent of the partition
        return min(candidates, key=lambda incumbent: (-incumbent.ratio, incumbent.index))

def _lipschitz_bound(params: SystemParams, slot: SlotData, step_p: float, step_s: float, p_s_max: float) -> float:
    """Grid error of one slot's SU rate.

    Sums the per-axis slopes over the box and the cost of trading p_s for p_p
    along an active PU-rate constraint when p_p snaps to its grid.
    """
    kappa = 1.0 / LN2
    sigma2 = params.sigma2
    slope_s = kappa * slot.h_ss / sigma2
    slope_p = kappa * slot.h_ps * slot.h_ss * p_s_max / (sigma2 * (sigma2 + slot.h_ss * p_s_max))
    exchange = 0.0
    if params.omega > 0 and step_p > 0:
        exchange = p_s_max if slot.h_sp == 0 else min(p_s_max, slot.h_pp * step_p / (params.omega * slot.h_sp))
    return ERROR_BOUND_STEPS * (step_s * slope_s + step_p * slope_p) + exchange * slope_s

def _pu_band(params: SystemParams, slot: SlotData, step_s: float) -> float:
    return step_s * slot.h_sp / (LN2 * params.sigma2)

##########################################################################################################################

def grid_error_bound_n1(params: SystemParams, slot: SlotData, grid: GridSpec) -> float:
    require_single_slot(params)
    e_p, e_s = effective_budgets(params, slot)
    step_p = grid.step(e_p + params.alpha * e_s)
    step_s = grid.step(e_s)
    return _lipschitz_bound(params, slot, step_p, step_s, e_s)

def grid_search_n1(params: SystemParams, slot: SlotData, grid: Optional[GridSpec] = None,
                   workers: Optional[int] = None) -> OracleResult:
    """Exhaustive scan of (p_p, p_s, delta_sp) on the clipped single-slot budgets."""
    require_single_slot(params)
    if grid is None:
        grid = GridSpec()
    e_p, e_s = effective_budgets(params, slot)
    omega = params.omega
    p_p_axis = grid.axis(e_p + params.alpha * e_s)
    p_s_axis = grid.axis(e_s)
    delta_axis = grid.axis(e_s)
    step_s = grid.step(e_s)
    slack = GRID_TOLERANCE * max(1.0, e_p, e_s)
    p_p_grid, p_s_grid = np.meshgrid(p_p_axis, p_s_axis, indexing="ij")
    interference = params.sigma2 + slot.h_sp * np.maximum(p_s_grid - step_s, 0.0)
    pu_ok = slot.h_pp * p_p_grid >= omega * interference
    ratio_grid = slot.h_ss * p_s_grid / (params.sigma2 + slot.h_ps * p_p_grid)

    def scan(chunk: range) -> Optional[_Incumbent]:
        incumbent = None
        for k in chunk:
            delta_sp = delta_axis[k]
            feasible = pu_ok & (p_s_grid + delta_sp <= e_s + slack) & (p_p_grid <= e_p + params.alpha * delta_sp + slack)
            if not feasible.any():
                continue
            values = np.where(feasible, ratio_grid, -np.inf)
            flat = int(np.argmax(values))
            if incumbent is None or values.flat[flat] > incumbent.ratio:
                incumbent = _Incumbent(float(values.flat[flat]), (k, *np.unravel_index(flat, values.shape)))
        return incumbent

    chunks = split_in_chunks(grid.points, workers if workers is not None else default_workers())
    best = _Incumbent.best(parallel_map(scan, chunks, workers))
    error_bound = grid_error_bound_n1(params, slot, grid)
    pu_tolerance = _pu_band(params, slot, step_s)
    if best is None:
        logger.debug("No feasible grid point among %d^3", grid.points)
        return OracleResult(None, math.nan, error_bound, pu_tolerance, grid.points)
    k, i, j = (int(value) for value in best.index)
    policy = Policy([p_p_axis[i]], [p_s_axis[j]], [delta_axis[k]])
    return OracleResult(policy, float(math.log1p(best.ratio) / LN2), error_bound, pu_tolerance, grid.points)

def _n2_axes(params: SystemParams, trace: Trace, grid: GridSpec) -> list[tuple[np.ndarray, np.ndarray, np.ndarray]]:
    axes = list()
    total_p = total_s = 0.0
    for slot in trace:
        total_p += slot.e_p
        total_s += slot.e_s
        axes.append((grid.axis(total_p + params.alpha * total_s), grid.axis(total_s), grid.axis(total_s)))
    return axes

def grid_error_bound_n2(params: SystemParams, trace: Trace, grid: GridSpec) -> float:
    bound = 0.0
    for slot, (p_p_axis, p_s_axis, _) in zip(trace, _n2_axes(params, trace, grid)):
        bound += _lipschitz_bound(params, slot, grid.step(p_p_axis[-1]), grid.step(p_s_axis[-1]), p_s_axis[-1])
    return bound

def grid_search_n2(params: SystemParams, trace: Trace, grid: Optional[GridSpec] = None,
                   workers: Optional[int] = None) -> OracleResult:
    """Exhaustive scan of both slots' decisions, slot 2 ranges covering the cumulative budgets.

    Slot-1 triples breaking a slot-1 prefix constraint are discarded before the
    slot-2 grid is expanded.
    """
    if params.n_slots != 2:
        raise ContractError(f"grid_search_n2 needs n_slots=2, got {params.n_slots}")
    trace.check_length(params)
    if grid is None:
        grid = GridSpec(20)
    first, second = trace[0], trace[1]
    (p_p1, p_s1, d1), (p_p2, p_s2, d2) = _n2_axes(params, trace, grid)
    step_s1, step_s2 = grid.step(p_s1[-1]), grid.step(p_s2[-1])
    alpha, sigma2, e_max = params.alpha, params.sigma2, params.e_max
    slack = GRID_TOLERANCE * max(1.0, e_max, p_p2[-1])

    a1, b1, c1 = (column.ravel() for column in np.meshgrid(p_p1, p_s1, d1, indexing="ij"))
    used_s1 = b1 + c1
    used_p1 = a1 - alpha * c1
    keep = (used_s1 <= first.e_s + slack) & (first.e_s - used_s1 <= e_max + slack) \
        & (used_p1 <= first.e_p + slack) & (first.e_p - used_p1 <= e_max + slack)
    survivors = np.flatnonzero(keep)
    logger.debug("%d of %d slot-1 triples survive prefix pruning", survivors.size, a1.size)

    a2, b2, c2 = (column.ravel() for column in np.meshgrid(p_p2, p_s2, d2, indexing="ij"))
    harvest_s = first.e_s + second.e_s
    harvest_p = first.e_p + second.e_p
    su2 = np.log1p(second.h_ss * b2 / (sigma2 + second.h_ps * a2)) / LN2
    pu2 = np.log1p(second.h_pp * a2 / (sigma2 + second.h_sp * np.maximum(b2 - step_s2, 0.0))) / LN2
    su1 = np.log1p(first.h_ss * b1 / (sigma2 + first.h_ps * a1)) / LN2
    pu1 = np.log1p(first.h_pp * a1 / (sigma2 + first.h_sp * np.maximum(b1 - step_s1, 0.0))) / LN2

    def scan(batch: np.ndarray) -> Optional[_Incumbent]:
        used_s = used_s1[batch, None] + (b2 + c2)[None, :]
        used_p = used_p1[batch, None] + (a2 - alpha * c2)[None, :]
        feasible = (used_s <= harvest_s + slack) & (harvest_s - used_s <= e_max + slack) \
            & (used_p <= harvest_p + slack) & (harvest_p - used_p <= e_max + slack) \
            & (pu1[batch, None] + pu2[None, :] >= params.b_p)
        if not feasible.any():
            return None
        values = np.where(feasible, su1[batch, None] + su2[None, :], -np.inf)
        flat = int(np.argmax(values))
        row, column = np.unravel_index(flat, values.shape)
        return _Incumbent(float(values[row, column]), (int(batch[row]), int(column)))

    batches = [survivors[start:start + N2_BATCH] for start in range(0, survivors.size, N2_BATCH)]
    best = _Incumbent.best(parallel_map(scan, batches, workers))
    error_bound = grid_error_bound_n2(params, trace, grid)
    pu_tolerance = _pu_band(params, first, step_s1) + _pu_band(params, second, step_s2)
    if best is None:
        return OracleResult(None, math.nan, error_bound, pu_tolerance, grid.points)
    row, column = best.index
    policy = Policy([a1[row], a2[column]], [b1[row], b2[column]], [c1[row], c2[column]])
    return OracleResult(policy, trace_su_bits(trace, policy, sigma2), error_bound, pu_tolerance, grid.points)

##########################################################################################################################

def independent_constraint_check(params: SystemParams, trace: Trace, policy: Policy,
                                 tol: float = DEFAULT_TOLERANCE) -> FeasibilityReport:
    if len(trace) != params.n_slots or policy.n_slots != params.n_slots:
        raise ContractError("Trace, policy and n_slots disagree on the horizon length")
    pu_sum_rate = 0.0
    harvested_st = harvested_pt = 0.0
    consumed_st = consumed_pt = 0.0
    st_causality = st_overflow = pt_causality = pt_overflow = 0.0
    for i in range(params.n_slots):
        slot = trace[i]
        p_p = float(policy.p_p[i])
        p_s = float(policy.p_s[i])
        delta_sp = float(policy.delta_sp[i])
        pu_sum_rate += math.log2(1.0 + slot.h_pp * p_p / (params.sigma2 + slot.h_sp * p_s))
        harvested_st += slot.e_s
        harvested_pt += slot.e_p
        consumed_st += p_s + delta_sp
        consumed_pt += p_p - params.alpha * delta_sp
        battery_st = harvested_st - consumed_st
        battery_pt = harvested_pt - consumed_pt
        st_causality = max(st_causality, -battery_st)
        st_overflow = max(st_overflow, battery_st - params.e_max)
        pt_causality = max(pt_causality, -battery_pt)
        pt_overflow = max(pt_overflow, battery_pt - params.e_max)
    return FeasibilityReport(
        pu_rate_ok=pu_sum_rate >= params.b_p - tol,
        pu_sum_rate=pu_sum_rate,
        st_causality_ok=st_causality <= tol,
        st_causality_violation=st_causality,
        st_overflow_ok=st_overflow <= tol,
        st_overflow_violation=st_overflow,
        pt_causality_ok=pt_causality <= tol,
        pt_causality_violation=pt_causality,
        pt_overflow_ok=pt_overflow <= tol,
        pt_overflow_violation=pt_overflow,
        tolerance=float(tol),
    )

def clipped_trace(params: SystemParams, slot: SlotData) -> Trace:
    """The one-slot trace the single-slot problem actually sees: arrivals clipped at E_max."""
    e_p, e_s = effective_budgets(params, slot)
    return Trace((slot.replace(e_p=e_p, e_s=e_s),))
