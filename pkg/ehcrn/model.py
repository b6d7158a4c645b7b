# -*- coding: Utf-8 -*

"""
Domain types, rate functions and constraint evaluation shared by every solver.

Slots last one second, so energies (J) and powers (W) live on the same axis and
every quantity is stored as Joules per slot.
"""

import math
import hashlib
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence, Union
import numpy as np

LN2 = math.log(2.0)
DEFAULT_TOLERANCE = 1e-7

class DomainError(ValueError):
    pass

class ContractError(ValueError):
    pass

def _check_value(name: str, value: float, *, lower: float = 0.0, upper: float = math.inf) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise DomainError(f"{name} must be finite, got {value!r}")
    if value < lower or value > upper:
        raise DomainError(f"{name} must lie in [{lower}, {upper}], got {value!r}")
    return value

def log2_1p(x: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    return np.log1p(x) / LN2

##########################################################################################################################

@dataclass(frozen=True)
class SystemParams:
    alpha: float
    e_max: float
    sigma2: float
    b_p: float
    n_slots: int = 1

    def __post_init__(self):
        object.__setattr__(self, "alpha", _check_value("alpha", self.alpha, upper=1.0))
        object.__setattr__(self, "e_max", _check_value("e_max", self.e_max))
        object.__setattr__(self, "sigma2", _check_value("sigma2", self.sigma2))
        object.__setattr__(self, "b_p", _check_value("b_p", self.b_p))
        if self.e_max <= 0:
            raise DomainError("e_max must be positive")
        if self.sigma2 <= 0:
            raise DomainError("sigma2 must be positive")
        if int(self.n_slots) != self.n_slots or self.n_slots < 1:
            raise DomainError(f"n_slots must be a positive integer, got {self.n_slots!r}")
        object.__setattr__(self, "n_slots", int(self.n_slots))

    @property
    def omega(self) -> float:
        # 2^B_p - 1
        return math.expm1(self.b_p * LN2)

    def replace(self, **changes) -> "SystemParams":
        return replace(self, **changes)

@dataclass(frozen=True)
class SlotData:
    h_pp: float
    h_ps: float
    h_ss: float
    h_sp: float
    e_p: float
    e_s: float

    def __post_init__(self):
        for name in ("h_pp", "h_ps", "h_ss", "h_sp", "e_p", "e_s"):
            object.__setattr__(self, name, _check_value(name, getattr(self, name)))

    def replace(self, **changes) -> "SlotData":
        return replace(self, **changes)

@dataclass(frozen=True)
class Trace:
    slots: tuple[SlotData, ...]

    def __post_init__(self):
        slots = tuple(self.slots)
        if not slots:
            raise DomainError("A trace needs at least one slot")
        if not all(isinstance(slot, SlotData) for slot in slots):
            raise DomainError("Trace slots must be SlotData instances")
        object.__setattr__(self, "slots", slots)

    @staticmethod
    def from_arrays(h_pp: Sequence[float], h_ps: Sequence[float], h_ss: Sequence[float], h_sp: Sequence[float],
                    e_p: Sequence[float], e_s: Sequence[float]) -> "Trace":
        columns = [np.atleast_1d(np.asarray(column, dtype=float)) for column in (h_pp, h_ps, h_ss, h_sp, e_p, e_s)]
        size = max(column.size for column in columns)
        columns = [np.broadcast_to(column, (size,)) for column in columns]
        return Trace(tuple(SlotData(*(float(column[i]) for column in columns)) for i in range(size)))

    def __len__(self) -> int:
        return len(self.slots)

    def __getitem__(self, index: int) -> SlotData:
        return self.slots[index]

    def __iter__(self) -> Iterable[SlotData]:
        return iter(self.slots)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(slot, name) for slot in self.slots], dtype=float)

    h_pp = property(lambda self: self.column("h_pp"))
    h_ps = property(lambda self: self.column("h_ps"))
    h_ss = property(lambda self: self.column("h_ss"))
    h_sp = property(lambda self: self.column("h_sp"))
    e_p = property(lambda self: self.column("e_p"))
    e_s = property(lambda self: self.column("e_s"))

    def check_length(self, params: SystemParams) -> None:
        if len(self) != params.n_slots:
            raise ContractError(f"Trace holds {len(self)} slots but n_slots={params.n_slots}")

    def digest(self) -> str:
        values = np.array([[getattr(slot, name) for name in ("h_pp", "h_ps", "h_ss", "h_sp", "e_p", "e_s")] for slot in self.slots], dtype="<f8")
        return hashlib.sha256(values.tobytes()).hexdigest()

@dataclass(frozen=True)
class Policy:
    p_p: np.ndarray
    p_s: np.ndarray
    delta_sp: np.ndarray = field(default=None)

    def __post_init__(self):
        p_p = np.array(self.p_p, dtype=float).reshape(-1)
        p_s = np.array(self.p_s, dtype=float).reshape(-1)
        delta_sp = np.zeros_like(p_p) if self.delta_sp is None else np.array(self.delta_sp, dtype=float).reshape(-1)
        if not p_p.size == p_s.size == delta_sp.size:
            raise ContractError("p_p, p_s and delta_sp must have the same length")
        for name, vector in (("p_p", p_p), ("p_s", p_s), ("delta_sp", delta_sp)):
            if not np.all(np.isfinite(vector)):
                raise DomainError(f"{name} must be finite")
            if np.any(vector < 0):
                raise DomainError(f"{name} must be elementwise non-negative")
            vector.setflags(write=False)
        object.__setattr__(self, "p_p", p_p)
        object.__setattr__(self, "p_s", p_s)
        object.__setattr__(self, "delta_sp", delta_sp)

    @staticmethod
    def zeros(n_slots: int) -> "Policy":
        return Policy(np.zeros(n_slots), np.zeros(n_slots), np.zeros(n_slots))

    @property
    def n_slots(self) -> int:
        return int(self.p_p.size)

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.p_p, self.p_s, self.delta_sp])

    @staticmethod
    def from_vector(vector: np.ndarray) -> "Policy":
        p_p, p_s, delta_sp = np.split(np.asarray(vector, dtype=float), 3)
        return Policy(p_p, p_s, delta_sp)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Policy):
            return NotImplemented
        return all(np.array_equal(a, b) for a, b in zip(
            (self.p_p, self.p_s, self.delta_sp), (other.p_p, other.p_s, other.delta_sp)
        ))

    __hash__ = None

@dataclass(frozen=True)
class FeasibilityReport:
    pu_rate_ok: bool
    pu_sum_rate: float
    st_causality_ok: bool
    st_causality_violation: float
    st_overflow_ok: bool
    st_overflow_violation: float
    pt_causality_ok: bool
    pt_causality_violation: float
    pt_overflow_ok: bool
    pt_overflow_violation: float
    tolerance: float

    @property
    def feasible(self) -> bool:
        return self.pu_rate_ok and self.energy_ok

    @property
    def energy_ok(self) -> bool:
        return self.st_causality_ok and self.st_overflow_ok and self.pt_causality_ok and self.pt_overflow_ok

    @property
    def flags(self) -> tuple[bool, ...]:
        return (self.pu_rate_ok, self.st_causality_ok, self.st_overflow_ok, self.pt_causality_ok, self.pt_overflow_ok)

    @property
    def worst_energy_violation(self) -> float:
        return max(self.st_causality_violation, self.st_overflow_violation, self.pt_causality_violation, self.pt_overflow_violation)

##########################################################################################################################

def _check_rate_inputs(slot: SlotData, p_p: float, p_s: float, sigma2: float) -> tuple[float, float, float]:
    if not isinstance(slot, SlotData):
        raise DomainError("slot must be a SlotData instance")
    p_p = _check_value("p_p", p_p)
    p_s = _check_value("p_s", p_s)
    sigma2 = _check_value("sigma2", sigma2)
    if sigma2 <= 0:
        raise DomainError("sigma2 must be positive")
    return p_p, p_s, sigma2

def su_rate(slot: SlotData, p_p: float, p_s: float, sigma2: float) -> float:
    p_p, p_s, sigma2 = _check_rate_inputs(slot, p_p, p_s, sigma2)
    if p_s == 0:
        return 0.0
    return float(log2_1p(slot.h_ss * p_s / (sigma2 + slot.h_ps * p_p)))

def pu_rate(slot: SlotData, p_p: float, p_s: float, sigma2: float) -> float:
    p_p, p_s, sigma2 = _check_rate_inputs(slot, p_p, p_s, sigma2)
    if p_p == 0:
        return 0.0
    return float(log2_1p(slot.h_pp * p_p / (sigma2 + slot.h_sp * p_s)))

def su_rates(trace: Trace, policy: Policy, sigma2: float) -> np.ndarray:
    return log2_1p(trace.h_ss * policy.p_s / (sigma2 + trace.h_ps * policy.p_p))

def pu_rates(trace: Trace, policy: Policy, sigma2: float) -> np.ndarray:
    return log2_1p(trace.h_pp * policy.p_p / (sigma2 + trace.h_sp * policy.p_s))

def su_bits(trace: Trace, policy: Policy, sigma2: float) -> float:
    return float(np.sum(su_rates(trace, policy, sigma2)))

def pu_bits(trace: Trace, policy: Policy, sigma2: float) -> float:
    return float(np.sum(pu_rates(trace, policy, sigma2)))

def prefix_balances(params: SystemParams, trace: Trace, policy: Policy) -> tuple[np.ndarray, np.ndarray]:
    """Stored energy at the end of every slot, for ST and PT (before any clipping at E_max)."""
    stored_st = np.cumsum(trace.e_s) - np.cumsum(policy.p_s + policy.delta_sp)
    stored_pt = np.cumsum(trace.e_p) - np.cumsum(policy.p_p - params.alpha * policy.delta_sp)
    return stored_st, stored_pt

def check_feasibility(params: SystemParams, trace: Trace, policy: Policy, tol: float = DEFAULT_TOLERANCE) -> FeasibilityReport:
    trace.check_length(params)
    if policy.n_slots != len(trace):
        raise ContractError(f"Policy holds {policy.n_slots} slots but the trace holds {len(trace)}")
    stored_st, stored_pt = prefix_balances(params, trace, policy)
    st_causality = max(0.0, float(np.max(-stored_st)))
    st_overflow = max(0.0, float(np.max(stored_st - params.e_max)))
    pt_causality = max(0.0, float(np.max(-stored_pt)))
    pt_overflow = max(0.0, float(np.max(stored_pt - params.e_max)))
    pu_sum_rate = pu_bits(trace, policy, params.sigma2)
    return FeasibilityReport(
        pu_rate_ok=bool(pu_sum_rate >= params.b_p - tol),
        pu_sum_rate=pu_sum_rate,
        st_causality_ok=bool(st_causality <= tol),
        st_causality_violation=st_causality,
        st_overflow_ok=bool(st_overflow <= tol),
        st_overflow_violation=st_overflow,
        pt_causality_ok=bool(pt_causality <= tol),
        pt_causality_violation=pt_causality,
        pt_overflow_ok=bool(pt_overflow <= tol),
        pt_overflow_violation=pt_overflow,
        tolerance=float(tol),
    )

def effective_budgets(params: SystemParams, slot: SlotData) -> tuple[float, float]:
    return min(slot.e_p, params.e_max), min(slot.e_s, params.e_max)

def require_single_slot(params: SystemParams) -> None:
    if params.n_slots != 1:
        raise ContractError(f"Single-slot operation called with n_slots={params.n_slots}")

def single_slot_feasible(params: SystemParams, slot: SlotData) -> bool:
    require_single_slot(params)
    omega = params.omega
    if omega == 0:
        return True
    e_p, e_s = effective_budgets(params, slot)
    # largest PT power: full transfer, silent ST
    return bool(slot.h_pp * (e_p + params.alpha * e_s) / params.sigma2 >= omega)
