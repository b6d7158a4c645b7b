# -*- coding: Utf-8 -*

"""
Monte-Carlo sweeps over one system parameter.

Each trial owns a random stream derived from (seed, trial index). The gains and
unit energy draws of a trial are sampled once and reused at every grid point
and by both cooperation arms, so differences between arms and points are never
sampling noise.
"""

import math
import logging
from dataclasses import dataclass, field, replace
from functools import partial
from typing import Optional, Sequence, Union
import numpy as np
from .model import SystemParams, Trace, SlotData, DomainError, ContractError
from .single_slot import solve_single_slot, solve_no_cooperation
from .multi_slot import SubgradientConfig, solve_multi_slot
from .thread import parallel_map

logger = logging.getLogger(__name__)

class SweepError(RuntimeError):
    pass

@dataclass(frozen=True)
class ChannelModel:
    """Means of the exponentially distributed power gains (Rayleigh fading)."""

    var_pp: float = 0.1
    var_ps: float = 0.1
    var_ss: float = 0.1
    var_sp: float = 0.1

    def __post_init__(self):
        for name in ("var_pp", "var_ps", "var_ss", "var_sp"):
            value = float(getattr(self, name))
            if not (math.isfinite(value) and value > 0):
                raise DomainError(f"{name} must be positive, got {value!r}")
            object.__setattr__(self, name, value)

    @staticmethod
    def from_preset(name: str) -> "ChannelModel":
        try:
            return REGIMES[name]
        except KeyError:
            raise DomainError(f"Unknown channel preset {name!r}, expected one of {', '.join(REGIMES)}") from None

REGIMES: dict[str, ChannelModel] = {
    "weak_pt_sr": ChannelModel(var_pp=1.0, var_ps=0.1, var_ss=1.0, var_sp=1.0),
    "weak_st_pr": ChannelModel(var_pp=1.0, var_ps=1.0, var_ss=1.0, var_sp=0.1),
    "equal": ChannelModel(var_pp=0.1, var_ps=0.1, var_ss=0.1, var_sp=0.1),
    "strong_direct": ChannelModel(var_pp=1.0, var_ps=0.1, var_ss=1.0, var_sp=0.1),
    "strong_interference": ChannelModel(var_pp=0.1, var_ps=1.0, var_ss=0.1, var_sp=1.0),
}

@dataclass(frozen=True)
class FixedGains:
    """Deterministic per-slot gains; a scalar is repeated over every slot."""

    h_pp: tuple[float, ...]
    h_ps: tuple[float, ...]
    h_ss: tuple[float, ...]
    h_sp: tuple[float, ...]

    def __post_init__(self):
        for name in ("h_pp", "h_ps", "h_ss", "h_sp"):
            object.__setattr__(self, name, tuple(float(value) for value in np.atleast_1d(getattr(self, name))))

@dataclass(frozen=True)
class EnergySpec:
    kind: str = "fixed"
    e_p: tuple[float, ...] = (1.0,)
    e_s: tuple[float, ...] = (1.0,)

    FIXED = "fixed"
    EXPONENTIAL = "exponential"
    UNIFORM = "uniform"
    KINDS = (FIXED, EXPONENTIAL, UNIFORM)

    def __post_init__(self):
        if self.kind not in EnergySpec.KINDS:
            raise DomainError(f"Energy kind must be one of {', '.join(EnergySpec.KINDS)}, got {self.kind!r}")
        for name in ("e_p", "e_s"):
            values = tuple(float(value) for value in np.atleast_1d(getattr(self, name)))
            if not values or any(not (math.isfinite(value) and value >= 0) for value in values):
                raise DomainError(f"{name} must hold finite non-negative energies")
            if self.kind == EnergySpec.UNIFORM and (len(values) != 2 or values[0] > values[1]):
                raise DomainError(f"Uniform {name} must be a (low, high) pair with low <= high, got {values}")
            object.__setattr__(self, name, values)

    def with_level(self, name: str, value: float) -> "EnergySpec":
        return replace(self, **{name: (float(value),)})

@dataclass(frozen=True)
class SweepConfig:
    axis: str
    grid: tuple[float, ...]
    params: SystemParams
    channel: Union[ChannelModel, FixedGains] = field(default_factory=ChannelModel)
    energy: EnergySpec = field(default_factory=EnergySpec)
    trials: int = 1000
    seed: int = 0
    cooperation: str = "both"
    solver: SubgradientConfig = field(default_factory=SubgradientConfig)
    cross_check: bool = False
    workers: Optional[int] = None

    AXES = ("b_p", "alpha", "e_p", "e_s")
    COOPERATION_ON = "on"
    COOPERATION_OFF = "off"
    COOPERATION_BOTH = "both"

    def __post_init__(self):
        if self.axis not in SweepConfig.AXES:
            raise DomainError(f"Sweep axis must be one of {', '.join(SweepConfig.AXES)}, got {self.axis!r}")
        grid = tuple(float(value) for value in self.grid)
        if not grid:
            raise DomainError("Sweep grid is empty")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise DomainError(f"Sweep grid must be strictly increasing, got {grid}")
        object.__setattr__(self, "grid", grid)
        if int(self.trials) != self.trials or self.trials < 1:
            raise DomainError(f"trials must be a positive integer, got {self.trials!r}")
        if self.cooperation not in (SweepConfig.COOPERATION_ON, SweepConfig.COOPERATION_OFF, SweepConfig.COOPERATION_BOTH):
            raise DomainError(f"cooperation must be 'on', 'off' or 'both', got {self.cooperation!r}")
        for value in grid:
            self.params_at(value)

    @property
    def run_coop(self) -> bool:
        return self.cooperation != SweepConfig.COOPERATION_OFF

    @property
    def run_no_coop(self) -> bool:
        return self.cooperation != SweepConfig.COOPERATION_ON

    def params_at(self, value: float) -> SystemParams:
        if self.axis in ("b_p", "alpha"):
            return self.params.replace(**{self.axis: value})
        return self.params

    def energy_at(self, value: float) -> EnergySpec:
        if self.axis in ("e_p", "e_s"):
            return self.energy.with_level(self.axis, value)
        return self.energy

@dataclass(frozen=True)
class TrialOutcome:
    trial: int
    point: int
    axis_value: float
    digest: str
    su_bits_coop: float
    su_bits_no_coop: float
    transferred: float
    feasible_coop: bool
    feasible_no_coop: bool
    converged: bool = True

@dataclass(frozen=True)
class SweepPoint:
    axis_value: float
    su_bits_coop: float
    su_bits_no_coop: float
    transferred_total: float
    transferred_per_slot: float
    infeasible_coop: int
    infeasible_no_coop: int
    trials: int

@dataclass(frozen=True)
class SweepResult:
    config: SweepConfig
    points: tuple[SweepPoint, ...]
    outcomes: tuple[TrialOutcome, ...]

    def outcomes_at(self, point: int) -> list[TrialOutcome]:
        return [outcome for outcome in self.outcomes if outcome.point == point]

    def trial_outcomes(self, trial: int) -> list[TrialOutcome]:
        return [outcome for outcome in self.outcomes if outcome.trial == trial]

##########################################################################################################################

def trial_rng(seed: int, trial: int, stream: int = 0) -> np.random.Generator:
    """Generator of one trial; stream > 0 gives an independent generator for the same trial."""
    spawn_key = (int(trial),) if stream == 0 else (int(trial), int(stream))
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=spawn_key))

def _per_slot(values: Sequence[float], n_slots: int, name: str) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.size == 1:
        return np.full(n_slots, float(values[0]))
    if values.size != n_slots:
        raise ContractError(f"{name} holds {values.size} values but n_slots={n_slots}")
    return values.copy()

@dataclass(frozen=True)
class _TrialDraw:
    gains: tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]
    unit_e_p: np.ndarray
    unit_e_s: np.ndarray
    uniform_e_p: np.ndarray
    uniform_e_s: np.ndarray

    @staticmethod
    def sample(model: Union[ChannelModel, FixedGains], n_slots: int, rng: np.random.Generator) -> "_TrialDraw":
        if isinstance(model, FixedGains):
            gains = tuple(_per_slot(getattr(model, name), n_slots, name) for name in ("h_pp", "h_ps", "h_ss", "h_sp"))
        else:
            gains = tuple(rng.exponential(getattr(model, name), n_slots) for name in ("var_pp", "var_ps", "var_ss", "var_sp"))
        unit_e_p, unit_e_s = rng.exponential(1.0, n_slots), rng.exponential(1.0, n_slots)
        return _TrialDraw(gains, unit_e_p, unit_e_s, rng.uniform(0.0, 1.0, n_slots), rng.uniform(0.0, 1.0, n_slots))

    def trace(self, energy: EnergySpec, n_slots: int) -> Trace:
        if energy.kind == EnergySpec.UNIFORM:
            (low_p, high_p), (low_s, high_s) = energy.e_p, energy.e_s
            e_p = low_p + (high_p - low_p) * self.uniform_e_p
            e_s = low_s + (high_s - low_s) * self.uniform_e_s
            return Trace.from_arrays(*self.gains, e_p, e_s)
        e_p = _per_slot(energy.e_p, n_slots, "e_p")
        e_s = _per_slot(energy.e_s, n_slots, "e_s")
        if energy.kind == EnergySpec.EXPONENTIAL:
            e_p = e_p * self.unit_e_p
            e_s = e_s * self.unit_e_s
        return Trace.from_arrays(*self.gains, e_p, e_s)

def sample_trace(model: Union[ChannelModel, FixedGains], energy: EnergySpec, n_slots: int, rng: np.random.Generator) -> Trace:
    return _TrialDraw.sample(model, n_slots, rng).trace(energy, n_slots)

def _solve_point(config: SweepConfig, params: SystemParams, trace: Trace) -> tuple[float, float, float, bool, bool, bool]:
    nan = math.nan
    su_coop = su_no_coop = transferred = nan
    feasible_coop = feasible_no_coop = False
    converged = True
    if params.n_slots == 1:
        slot: SlotData = trace[0]
        if config.run_coop:
            solution = solve_single_slot(params, slot, cross_check=config.cross_check)
            feasible_coop = solution.feasible
            if feasible_coop:
                su_coop, transferred = solution.su_bits, solution.delta_sp
        if config.run_no_coop:
            solution = solve_no_cooperation(params, slot)
            feasible_no_coop = solution.feasible
            if feasible_no_coop:
                su_no_coop = solution.su_bits
    else:
        starts = list()
        if config.run_no_coop:
            result = solve_multi_slot(params, trace, replace(config.solver, freeze_transfer=True))
            feasible_no_coop = result.report.feasible
            converged = converged and result.converged
            if feasible_no_coop:
                su_no_coop = result.su_bits
                # a no-cooperation policy is a cooperative one with delta_sp = 0
                starts.append(result.policy)
        if config.run_coop:
            result = solve_multi_slot(params, trace, config.solver, starts=starts)
            feasible_coop = result.report.feasible
            converged = converged and result.converged
            if feasible_coop:
                su_coop, transferred = result.su_bits, float(np.sum(result.policy.delta_sp))
    return su_coop, su_no_coop, transferred, feasible_coop, feasible_no_coop, converged

def _run_trial(config: SweepConfig, trial: int) -> list[TrialOutcome]:
    n_slots = config.params.n_slots
    draw = _TrialDraw.sample(config.channel, n_slots, trial_rng(config.seed, trial))
    outcomes = list()
    for point, value in enumerate(config.grid):
        params = config.params_at(value)
        trace = draw.trace(config.energy_at(value), n_slots)
        try:
            solved = _solve_point(config, params, trace)
        except (ArithmeticError, RuntimeError, ValueError) as e:
            raise SweepError(
                f"Trial {trial} at {config.axis}={value!r} failed (seed={config.seed}): {e}\n"
                f"params={params!r}\ntrace={trace!r}"
            ) from e
        outcomes.append(TrialOutcome(trial, point, value, trace.digest(), *solved))
    return outcomes

def _mean(values: list[float]) -> float:
    return float(np.mean(values)) if values else math.nan

def _aggregate(config: SweepConfig, outcomes: list[TrialOutcome]) -> tuple[SweepPoint, ...]:
    points = list()
    n_slots = config.params.n_slots
    for point, value in enumerate(config.grid):
        selected = [outcome for outcome in outcomes if outcome.point == point]
        coop = [outcome for outcome in selected if outcome.feasible_coop]
        no_coop = [outcome for outcome in selected if outcome.feasible_no_coop]
        transferred = _mean([outcome.transferred for outcome in coop])
        points.append(SweepPoint(
            axis_value=value,
            su_bits_coop=_mean([outcome.su_bits_coop for outcome in coop]),
            su_bits_no_coop=_mean([outcome.su_bits_no_coop for outcome in no_coop]),
            transferred_total=transferred,
            transferred_per_slot=transferred / n_slots,
            infeasible_coop=len(selected) - len(coop) if config.run_coop else 0,
            infeasible_no_coop=len(selected) - len(no_coop) if config.run_no_coop else 0,
            trials=len(selected),
        ))
    return tuple(points)

def run_sweep(config: SweepConfig) -> SweepResult:
    logger.info("Sweep over %s: %d points x %d trials (N=%d, cooperation=%s)",
                config.axis, len(config.grid), config.trials, config.params.n_slots, config.cooperation)
    # multi-slot trials are CPU bound numpy loops: they run in worker processes
    processes = config.params.n_slots > 1
    per_trial = parallel_map(partial(_run_trial, config), range(config.trials), config.workers, processes=processes)
    outcomes = [outcome for trial_outcomes in per_trial for outcome in trial_outcomes]
    not_converged = sum(1 for outcome in outcomes if not outcome.converged)
    if not_converged:
        logger.warning("%d of %d solves stopped before convergence", not_converged, len(outcomes))
    return SweepResult(config, _aggregate(config, outcomes), tuple(outcomes))
