# -*- coding: Utf-8 -*

"""
Projected primal-dual subgradient method for the N-slot problem.

The Lagrangian relaxes the PU sum-rate constraint (mu) and the four families of
prefix energy constraints (lambda: ST causality, nu: ST overflow, gamma: PT
causality, theta: PT overflow). Primal variables descend, dual variables
ascend, both clamped at zero, until the primal iterate stops moving. The
iterate then goes through the repair and polish of the repair module.
"""

import math
import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence
import numpy as np
from .model import SystemParams, Trace, Policy, FeasibilityReport, ContractError, DomainError, LN2
from .model import check_feasibility, su_bits, log2_1p
from .repair import repair_and_verify, polish_policy

logger = logging.getLogger(__name__)

@dataclass(frozen=True)
class DualState:
    mu: float
    lambda_: np.ndarray
    nu: np.ndarray
    gamma: np.ndarray
    theta: np.ndarray

    def __post_init__(self):
        if not math.isfinite(self.mu) or self.mu < 0:
            raise DomainError(f"mu must be finite and non-negative, got {self.mu!r}")
        object.__setattr__(self, "mu", float(self.mu))
        sizes = set()
        for name in ("lambda_", "nu", "gamma", "theta"):
            vector = np.array(getattr(self, name), dtype=float).reshape(-1)
            if not np.all(np.isfinite(vector)) or np.any(vector < 0):
                raise DomainError(f"{name} must be finite and non-negative")
            vector.setflags(write=False)
            object.__setattr__(self, name, vector)
            sizes.add(vector.size)
        if len(sizes) != 1:
            raise ContractError("Dual vectors must share one length")

    @staticmethod
    def zeros(n_slots: int) -> "DualState":
        return DualState(0.0, np.zeros(n_slots), np.zeros(n_slots), np.zeros(n_slots), np.zeros(n_slots))

    def as_vector(self) -> np.ndarray:
        return np.concatenate([[self.mu], self.lambda_, self.nu, self.gamma, self.theta])

    @staticmethod
    def from_vector(vector: np.ndarray) -> "DualState":
        vector = np.asarray(vector, dtype=float)
        lambda_, nu, gamma, theta = np.split(vector[1:], 4)
        return DualState(float(vector[0]), lambda_, nu, gamma, theta)

@dataclass(frozen=True)
class SubgradientConfig:
    """Step sizes, stopping rule and terminal pass of the subgradient solver.

    The step schedule multiplies every step size by a factor: 1 for "fixed",
    1/sqrt(iter) for "diminishing", and for "anneal" 1 during the first
    anneal_after iterations then anneal_rate**(iter - anneal_after).
    """

    step_power: float = 1e-3
    step_transfer: float = 1e-3
    step_mu: float = 1e-2
    step_lambda: float = 1e-2
    step_nu: float = 1e-2
    step_gamma: float = 1e-2
    step_theta: float = 1e-2
    epsilon: float = 1e-5
    max_iters: int = 200_000
    log_base_correction: bool = True
    schedule: str = "anneal"
    anneal_after: int = 5_000
    anneal_rate: float = 0.998
    warm_start: bool = False
    freeze_transfer: bool = False
    polish: bool = True
    log_stride: int = 100

    FIXED = "fixed"
    DIMINISHING = "diminishing"
    ANNEAL = "anneal"
    SCHEDULES = (FIXED, DIMINISHING, ANNEAL)

    def __post_init__(self):
        for name in ("step_power", "step_transfer", "step_mu", "step_lambda", "step_nu", "step_gamma", "step_theta"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise DomainError(f"{name} must be a positive step size, got {value!r}")
        if not self.epsilon > 0:
            raise DomainError(f"epsilon must be positive, got {self.epsilon!r}")
        for name in ("max_iters", "log_stride"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise DomainError(f"{name} must be a positive integer, got {value!r}")
        if self.schedule not in SubgradientConfig.SCHEDULES:
            raise DomainError(f"schedule must be one of {', '.join(SubgradientConfig.SCHEDULES)}, got {self.schedule!r}")
        if int(self.anneal_after) != self.anneal_after or self.anneal_after < 0:
            raise DomainError(f"anneal_after must be a non-negative integer, got {self.anneal_after!r}")
        if not 0 < self.anneal_rate < 1:
            raise DomainError(f"anneal_rate must lie in (0, 1), got {self.anneal_rate!r}")

    def step_scale(self, iteration: int) -> float:
        if self.schedule == SubgradientConfig.DIMINISHING:
            return 1.0 / math.sqrt(iteration)
        if self.schedule == SubgradientConfig.ANNEAL and iteration > self.anneal_after:
            return self.anneal_rate ** (iteration - self.anneal_after)
        return 1.0

@dataclass
class IterationLog:
    iteration: list[int] = field(default_factory=list)
    delta_norm: list[float] = field(default_factory=list)
    lagrangian: list[float] = field(default_factory=list)
    pu_slack: list[float] = field(default_factory=list)
    worst_violation: list[float] = field(default_factory=list)
    converged: bool = False
    iterations: int = 0

    COLUMNS = ("iter", "delta_norm", "lagrangian", "pu_slack", "worst_violation")

    def __len__(self) -> int:
        return len(self.iteration)

    def append(self, iteration: int, delta_norm: float, lagrangian: float, pu_slack: float, worst_violation: float) -> None:
        self.iteration.append(iteration)
        self.delta_norm.append(delta_norm)
        self.lagrangian.append(lagrangian)
        self.pu_slack.append(pu_slack)
        self.worst_violation.append(worst_violation)

    def rows(self) -> list[tuple[int, float, float, float, float]]:
        return list(zip(self.iteration, self.delta_norm, self.lagrangian, self.pu_slack, self.worst_violation))

@dataclass(frozen=True)
class PrimalGradient:
    p_p: np.ndarray
    p_s: np.ndarray
    delta_sp: np.ndarray

@dataclass(frozen=True)
class DualGradient:
    mu: float
    lambda_: np.ndarray
    nu: np.ndarray
    gamma: np.ndarray
    theta: np.ndarray

@dataclass(frozen=True)
class MultiSlotResult:
    policy: Policy
    raw_policy: Policy
    duals: DualState
    log: IterationLog
    report: FeasibilityReport
    su_bits: float

    converged = property(lambda self: self.log.converged)
    iterations = property(lambda self: self.log.iterations)

##########################################################################################################################

class _Problem:

    def __init__(self, params: SystemParams, trace: Trace, log_base_correction: bool = True):
        trace.check_length(params)
        self.n = params.n_slots
        self.alpha = params.alpha
        self.e_max = params.e_max
        self.sigma2 = params.sigma2
        self.b_p = params.b_p
        self.h_pp = trace.h_pp
        self.h_ps = trace.h_ps
        self.h_ss = trace.h_ss
        self.h_sp = trace.h_sp
        self.harvest_s = np.cumsum(trace.e_s)
        self.harvest_p = np.cumsum(trace.e_p)
        self.kappa = 1.0 / LN2 if log_base_correction else 1.0

    def split(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        n = self.n
        return x[:n], x[n:2 * n], x[2 * n:]

    def split_dual(self, y: np.ndarray) -> tuple[float, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        n = self.n
        return y[0], y[1:n + 1], y[n + 1:2 * n + 1], y[2 * n + 1:3 * n + 1], y[3 * n + 1:]

    def consumption(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        p_p, p_s, delta_sp = self.split(x)
        return np.cumsum(p_s + delta_sp), np.cumsum(p_p - self.alpha * delta_sp)

    def su_bits(self, x: np.ndarray) -> float:
        p_p, p_s, _ = self.split(x)
        return float(np.sum(log2_1p(self.h_ss * p_s / (self.sigma2 + self.h_ps * p_p))))

    def pu_bits(self, x: np.ndarray) -> float:
        p_p, p_s, _ = self.split(x)
        return float(np.sum(log2_1p(self.h_pp * p_p / (self.sigma2 + self.h_sp * p_s))))

    def lagrangian(self, x: np.ndarray, y: np.ndarray) -> float:
        mu, lambda_, nu, gamma, theta = self.split_dual(y)
        consumed_s, consumed_p = self.consumption(x)
        return float(
            -self.su_bits(x)
            + mu * (self.b_p - self.pu_bits(x))
            + lambda_ @ (consumed_s - self.harvest_s)
            + nu @ (self.harvest_s - self.e_max - consumed_s)
            + gamma @ (consumed_p - self.harvest_p)
            + theta @ (self.harvest_p - self.e_max - consumed_p)
        )

    def gradient(self, x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        n = self.n
        p_p, p_s, delta_sp = x[:n], x[n:2 * n], x[2 * n:]
        mu = y[0]
        kappa = self.kappa
        su_noise = self.sigma2 + self.h_ps * p_p
        su_total = su_noise + self.h_ss * p_s
        pu_noise = self.sigma2 + self.h_sp * p_s
        pu_total = pu_noise + self.h_pp * p_p
        # suffix sums of lambda, nu, gamma, theta in one pass
        tail_lambda, tail_nu, tail_gamma, tail_theta = np.cumsum(y[1:].reshape(4, n)[:, ::-1], axis=1)[:, ::-1]
        grad_p_p = kappa * self.h_ss * self.h_ps * p_s / (su_total * su_noise) + tail_gamma - tail_theta \
            - mu * kappa * self.h_pp / pu_total
        grad_p_s = -kappa * self.h_ss / su_total + tail_lambda - tail_nu \
            + mu * kappa * self.h_pp * self.h_sp * p_p / (pu_total * pu_noise)
        # theta enters through the PT prefix p_p - alpha*delta
        grad_delta = tail_lambda + self.alpha * tail_theta - tail_nu - self.alpha * tail_gamma
        consumed_s = np.cumsum(p_s + delta_sp)
        consumed_p = np.cumsum(p_p - self.alpha * delta_sp)
        grad_mu = self.b_p - float(np.sum(np.log1p(self.h_pp * p_p / pu_noise))) / LN2
        return (
            np.concatenate([grad_p_p, grad_p_s, grad_delta]),
            np.concatenate([[grad_mu], consumed_s - self.harvest_s, self.harvest_s - self.e_max - consumed_s,
                            consumed_p - self.harvest_p, self.harvest_p - self.e_max - consumed_p]),
        )

    def worst_violation(self, x: np.ndarray) -> float:
        consumed_s, consumed_p = self.consumption(x)
        stored_s = self.harvest_s - consumed_s
        stored_p = self.harvest_p - consumed_p
        return float(max(0.0, np.max(-stored_s), np.max(stored_s - self.e_max), np.max(-stored_p), np.max(stored_p - self.e_max)))

def _primal(policy: Policy) -> np.ndarray:
    return policy.as_vector()

##########################################################################################################################

def lagrangian(params: SystemParams, trace: Trace, policy: Policy, duals: DualState) -> float:
    problem = _Problem(params, trace)
    return problem.lagrangian(_primal(policy), duals.as_vector())

def gradients(params: SystemParams, trace: Trace, policy: Policy, duals: DualState,
              log_base_correction: bool = True) -> tuple[PrimalGradient, DualGradient]:
    problem = _Problem(params, trace, log_base_correction)
    grad_x, grad_y = problem.gradient(_primal(policy), duals.as_vector())
    p_p, p_s, delta_sp = problem.split(grad_x)
    mu, lambda_, nu, gamma, theta = problem.split_dual(grad_y)
    return PrimalGradient(p_p, p_s, delta_sp), DualGradient(float(mu), lambda_, nu, gamma, theta)

def warm_start_policy(params: SystemParams, trace: Trace) -> Policy:
    """Constant powers, no transfer, as large as every energy-causality prefix allows."""
    trace.check_length(params)
    slots = np.arange(1, params.n_slots + 1)
    power_p = float(np.min(np.cumsum(trace.e_p) / slots))
    power_s = float(np.min(np.cumsum(trace.e_s) / slots))
    return Policy(np.full(params.n_slots, power_p), np.full(params.n_slots, power_s), np.zeros(params.n_slots))

def solve_subgradient(params: SystemParams, trace: Trace, config: Optional[SubgradientConfig] = None,
                      initial: Optional[Policy] = None) -> tuple[Policy, DualState, IterationLog]:
    if config is None:
        config = SubgradientConfig()
    problem = _Problem(params, trace, config.log_base_correction)
    n = params.n_slots
    if initial is not None:
        if initial.n_slots != n:
            raise ContractError(f"Initial policy holds {initial.n_slots} slots but n_slots={n}")
        x = _primal(initial).copy()
    elif config.warm_start:
        x = _primal(warm_start_policy(params, trace)).copy()
    else:
        x = np.zeros(3 * n)
    y = np.zeros(4 * n + 1)
    step_x = np.concatenate([np.full(2 * n, config.step_power), np.full(n, config.step_transfer)])
    step_y = np.concatenate([
        [config.step_mu],
        np.full(n, config.step_lambda), np.full(n, config.step_nu),
        np.full(n, config.step_gamma), np.full(n, config.step_theta),
    ])
    if config.freeze_transfer:
        x[2 * n:] = 0.0
        step_x[2 * n:] = 0.0

    log = IterationLog()
    for iteration in range(1, config.max_iters + 1):
        grad_x, grad_y = problem.gradient(x, y)
        scale = config.step_scale(iteration)
        x_next = np.maximum(x - scale * step_x * grad_x, 0.0)
        y_next = np.maximum(y + scale * step_y * grad_y, 0.0)
        change = float(np.max(np.abs(x_next - x)))
        x, y = x_next, y_next
        done = change <= config.epsilon
        if done or iteration % config.log_stride == 0 or iteration == config.max_iters:
            log.append(iteration, change, problem.lagrangian(x, y), problem.pu_bits(x) - params.b_p, problem.worst_violation(x))
        if done:
            log.converged = True
            break
    log.iterations = iteration
    if log.converged:
        logger.debug("Subgradient converged after %d iterations", iteration)
    else:
        logger.warning("Subgradient stopped at max_iters=%d with last change %.3e > epsilon=%.1e",
                       config.max_iters, change, config.epsilon)
    policy = Policy(*problem.split(x))
    return policy, DualState.from_vector(y), log

def solve_multi_slot(params: SystemParams, trace: Trace, config: Optional[SubgradientConfig] = None,
                     initial: Optional[Policy] = None, starts: Sequence[Policy] = ()) -> MultiSlotResult:
    """Subgradient run, repair, then polish from the repaired iterate, the warm start and any extra starts.

    Extra starts are feasible policies known in advance (a non-cooperative
    solution is one for the cooperative problem); the polished policy is never
    worse than any of them once repaired.
    """
    if config is None:
        config = SubgradientConfig()
    allow_transfer = not config.freeze_transfer
    raw_policy, duals, log = solve_subgradient(params, trace, config, initial)
    policy, report = repair_and_verify(params, trace, raw_policy, allow_transfer=allow_transfer)
    if config.polish:
        candidates = [policy]
        for start in (warm_start_policy(params, trace), *starts):
            if start.n_slots != params.n_slots:
                raise ContractError(f"Start policy holds {start.n_slots} slots but n_slots={params.n_slots}")
            if not allow_transfer:
                start = Policy(start.p_p, start.p_s)
            candidates.append(repair_and_verify(params, trace, start, allow_transfer=allow_transfer)[0])
        best, best_bits = None, -math.inf
        for candidate in candidates:
            if not check_feasibility(params, trace, candidate).feasible:
                continue
            polished = polish_policy(params, trace, candidate, allow_transfer)
            bits = su_bits(trace, polished, params.sigma2)
            if bits > best_bits:
                best, best_bits = polished, bits
        if best is not None:
            policy = best
            report = check_feasibility(params, trace, policy)
    return MultiSlotResult(policy, raw_policy, duals, log, report, su_bits(trace, policy, params.sigma2))
