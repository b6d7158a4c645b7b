# -*- coding: Utf-8 -*

"""
Terminal pass of the multi-slot solver.

A subgradient iterate is pulled back into the energy region slot by slot, its
PU sum rate is lifted to B_p along a path that keeps both battery profiles
valid, and the result is polished with SLSQP inside the feasible set. The
polish only ever replaces a policy by a feasible one with more SU bits.
"""

import logging
from typing import Callable, Optional
import numpy as np
from scipy.optimize import minimize
from .model import SystemParams, Trace, Policy, FeasibilityReport, ContractError, LN2, DEFAULT_TOLERANCE
from .model import check_feasibility

logger = logging.getLogger(__name__)

RESTORE_BISECTION_STEPS = 60
POLISH_MAX_ITERS = 200
POLISH_FTOL = 1e-12

class EnergyRegion:
    """Prefix energy constraints written as matrix @ x <= rhs for x = (p_p, p_s, delta_sp)."""

    def __init__(self, params: SystemParams, trace: Trace):
        trace.check_length(params)
        n = params.n_slots
        self.params = params
        self.n = n
        self.h_pp = trace.h_pp
        self.h_ps = trace.h_ps
        self.h_ss = trace.h_ss
        self.h_sp = trace.h_sp
        self.e_p = trace.e_p
        self.e_s = trace.e_s
        harvest_s = np.cumsum(self.e_s)
        harvest_p = np.cumsum(self.e_p)
        lower = np.tril(np.ones((n, n)))
        zero = np.zeros((n, n))
        st_rows = np.hstack([zero, lower, lower])
        pt_rows = np.hstack([lower, zero, -params.alpha * lower])
        self.matrix = np.vstack([st_rows, -st_rows, pt_rows, -pt_rows])
        self.rhs = np.concatenate([harvest_s, params.e_max - harvest_s, harvest_p, params.e_max - harvest_p])

    def split(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        n = self.n
        return x[:n], x[n:2 * n], x[2 * n:]

    def stored(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        p_p, p_s, delta_sp = self.split(x)
        stored_s = np.cumsum(self.e_s - p_s - delta_sp)
        stored_p = np.cumsum(self.e_p + self.params.alpha * delta_sp - p_p)
        return stored_s, stored_p

    def su(self, x: np.ndarray) -> tuple[float, np.ndarray]:
        p_p, p_s, _ = self.split(x)
        noise = self.params.sigma2 + self.h_ps * p_p
        total = noise + self.h_ss * p_s
        gradient = np.zeros(3 * self.n)
        gradient[:self.n] = -self.h_ss * self.h_ps * p_s / (total * noise * LN2)
        gradient[self.n:2 * self.n] = self.h_ss / (total * LN2)
        return float(np.sum(np.log1p(self.h_ss * p_s / noise)) / LN2), gradient

    def pu(self, x: np.ndarray) -> tuple[float, np.ndarray]:
        p_p, p_s, _ = self.split(x)
        noise = self.params.sigma2 + self.h_sp * p_s
        total = noise + self.h_pp * p_p
        gradient = np.zeros(3 * self.n)
        gradient[:self.n] = self.h_pp / (total * LN2)
        gradient[self.n:2 * self.n] = -self.h_pp * self.h_sp * p_p / (total * noise * LN2)
        return float(np.sum(np.log1p(self.h_pp * p_p / noise)) / LN2), gradient

    def pu_bits(self, x: np.ndarray) -> float:
        return self.pu(x)[0]

    def su_bits(self, x: np.ndarray) -> float:
        return self.su(x)[0]

##########################################################################################################################

def _energy_sweep(region: EnergyRegion, x: np.ndarray, tol: float) -> np.ndarray:
    params = region.params
    p_p, p_s, delta_sp = (part.copy() for part in region.split(x))
    stored_s = stored_p = 0.0
    for i in range(region.n):
        stored_s += region.e_s[i]
        excess = p_s[i] + delta_sp[i] - stored_s
        if excess > tol:
            cut = min(delta_sp[i], excess)
            delta_sp[i] -= cut
            p_s[i] = max(0.0, p_s[i] - (excess - cut))
            logger.debug("Slot %d: ST causality repaired by %.3e J", i, excess)
        overflow = stored_s - p_s[i] - delta_sp[i] - params.e_max
        if overflow > tol:
            p_s[i] += overflow
            logger.debug("Slot %d: ST overflow spent on p_s (%.3e J)", i, overflow)
        stored_s -= p_s[i] + delta_sp[i]
        stored_p += region.e_p[i] + params.alpha * delta_sp[i]
        excess = p_p[i] - stored_p
        if excess > tol:
            p_p[i] = max(0.0, p_p[i] - excess)
            logger.debug("Slot %d: PT causality repaired by %.3e J", i, excess)
        overflow = stored_p - p_p[i] - params.e_max
        if overflow > tol:
            p_p[i] += overflow
            logger.debug("Slot %d: PT overflow spent on p_p (%.3e J)", i, overflow)
        stored_p -= p_p[i]
    return np.concatenate([p_p, p_s, delta_sp])

def _spendable(stored: np.ndarray) -> np.ndarray:
    """Largest extra per-slot consumption that keeps every prefix balance non-negative."""
    floor = np.maximum(np.minimum.accumulate(stored[::-1])[::-1], 0.0)
    return np.diff(floor, prepend=0.0)

def _lazy_consumption(harvest: np.ndarray, e_max: float) -> np.ndarray:
    consumption = np.zeros_like(harvest)
    stored = 0.0
    for i, energy in enumerate(harvest):
        stored += energy
        consumption[i] = max(0.0, stored - e_max)
        stored -= consumption[i]
    return consumption

def _pu_favoring(region: EnergyRegion, x: np.ndarray, allow_transfer: bool) -> np.ndarray:
    alpha = region.params.alpha
    p_p, p_s, delta_sp = (part.copy() for part in region.split(x))
    if allow_transfer:
        # ST power becomes transfer and PT spends it at once: both balances stay put
        delta_sp += p_s
        p_p += alpha * p_s
        p_s[:] = 0.0
        stored_s, _ = region.stored(np.concatenate([p_p, p_s, delta_sp]))
        spare = _spendable(stored_s)
        delta_sp += spare
        p_p += alpha * spare
    else:
        p_s = _lazy_consumption(region.e_s, region.params.e_max)
    _, stored_p = region.stored(np.concatenate([p_p, p_s, delta_sp]))
    p_p += _spendable(stored_p)
    return np.concatenate([p_p, p_s, delta_sp])

def _free_size(region: EnergyRegion, allow_transfer: bool) -> int:
    return 3 * region.n if allow_transfer else 2 * region.n

def _expand(region: EnergyRegion, v: np.ndarray) -> np.ndarray:
    if v.size == 3 * region.n:
        return v
    return np.concatenate([v, np.zeros(3 * region.n - v.size)])

def _slsqp(region: EnergyRegion, x0: np.ndarray, allow_transfer: bool,
           objective: Callable[[np.ndarray], tuple[float, np.ndarray]], pu_target: Optional[float]) -> np.ndarray:
    free = _free_size(region, allow_transfer)
    matrix = region.matrix[:, :free]
    constraints = [{"type": "ineq", "fun": lambda v: region.rhs - matrix @ v, "jac": lambda v: -matrix}]
    if pu_target is not None:
        constraints.append({
            "type": "ineq",
            "fun": lambda v: region.pu(_expand(region, v))[0] - pu_target,
            "jac": lambda v: region.pu(_expand(region, v))[1][:free],
        })

    def fun(v: np.ndarray) -> tuple[float, np.ndarray]:
        value, gradient = objective(_expand(region, v))
        return -value, -gradient[:free]

    result = minimize(fun, x0[:free], jac=True, method="SLSQP", bounds=[(0.0, None)] * free, constraints=constraints,
                      options={"maxiter": POLISH_MAX_ITERS, "ftol": POLISH_FTOL})
    if not result.success:
        logger.debug("SLSQP stopped early: %s", result.message)
    return _expand(region, np.maximum(np.nan_to_num(result.x, nan=0.0), 0.0))

def _restore_pu_rate(region: EnergyRegion, x: np.ndarray, allow_transfer: bool, tol: float) -> np.ndarray:
    b_p = region.params.b_p
    if region.pu_bits(x) >= b_p - tol:
        return x
    target = _pu_favoring(region, x, allow_transfer)
    if region.pu_bits(target) < b_p:
        best = _energy_sweep(region, _slsqp(region, target, allow_transfer, region.pu, None), 0.0)
        if region.pu_bits(best) > region.pu_bits(target):
            target = best
    if region.pu_bits(target) < b_p:
        logger.info("PU sum rate cannot reach B_p=%g from this policy (best %.6g)", b_p, region.pu_bits(target))
        return target
    low, high = 0.0, 1.0
    for _ in range(RESTORE_BISECTION_STEPS):
        middle = 0.5 * (low + high)
        if region.pu_bits((1.0 - middle) * x + middle * target) >= b_p:
            high = middle
        else:
            low = middle
    logger.debug("PU sum rate restored at path position %.9f", high)
    return (1.0 - high) * x + high * target

def _repair(region: EnergyRegion, x: np.ndarray, allow_transfer: bool, tol: float) -> np.ndarray:
    return _restore_pu_rate(region, _energy_sweep(region, x, tol), allow_transfer, tol)

##########################################################################################################################

def repair_and_verify(params: SystemParams, trace: Trace, policy: Policy, tol: float = DEFAULT_TOLERANCE,
                      allow_transfer: bool = True) -> tuple[Policy, FeasibilityReport]:
    """Slot-ordered energy repair, then PU sum-rate restoration.

    ST causality cuts delta_sp before p_s and PT causality cuts p_p. Energy
    that would overflow a battery is spent in the same slot (p_s for ST, p_p
    for PT). A PU shortfall is closed by moving toward a policy that turns ST
    power into transfer and spends every spare Joule of PT, which never
    changes a battery level; without transfer, ST keeps only the consumption
    overflow forces.
    """
    region = EnergyRegion(params, trace)
    if policy.n_slots != len(trace):
        raise ContractError(f"Policy holds {policy.n_slots} slots but the trace holds {len(trace)}")
    x = policy.as_vector()
    repaired_x = _repair(region, x, allow_transfer, tol)
    repaired = policy if np.array_equal(repaired_x, x) else Policy.from_vector(repaired_x)
    report = check_feasibility(params, trace, repaired, tol)
    if not report.feasible:
        logger.warning("Repaired policy still infeasible: %s", report)
    return repaired, report

def polish_policy(params: SystemParams, trace: Trace, policy: Policy, allow_transfer: bool = True,
                  tol: float = DEFAULT_TOLERANCE) -> Policy:
    """Local SLSQP ascent of the SU bits from a feasible policy; returns the input unless it finds better."""
    region = EnergyRegion(params, trace)
    start = policy.as_vector()
    if not check_feasibility(params, trace, policy, tol).feasible:
        return policy
    candidate = _slsqp(region, start, allow_transfer, region.su, params.b_p)
    candidate = _repair(region, candidate, allow_transfer, 0.0)
    polished = Policy.from_vector(candidate)
    if region.su_bits(candidate) > region.su_bits(start) and check_feasibility(params, trace, polished, tol).feasible:
        logger.debug("Polish raised SU bits from %.9g to %.9g", region.su_bits(start), region.su_bits(candidate))
        return polished
    return policy
