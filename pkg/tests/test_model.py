# -*- coding: Utf-8 -*

import math
from decimal import Decimal, localcontext
import numpy as np
import pytest
from ehcrn import SystemParams, SlotData, Trace, Policy, DomainError, ContractError
from ehcrn import su_rate, pu_rate, su_rates, pu_bits, check_feasibility, effective_budgets, single_slot_feasible
from ehcrn.model import prefix_balances

def decimal_log2_1p(numerator: float, denominator: float) -> float:
    with localcontext() as context:
        context.prec = 50
        ratio = Decimal(numerator) / Decimal(denominator)
        return float((1 + ratio).ln() / Decimal(2).ln())

def test_system_params_validation():
    with pytest.raises(DomainError):
        SystemParams(alpha=1.5, e_max=6.0, sigma2=0.1, b_p=1.0)
    with pytest.raises(DomainError):
        SystemParams(alpha=0.5, e_max=6.0, sigma2=0.0, b_p=1.0)
    with pytest.raises(DomainError):
        SystemParams(alpha=0.5, e_max=6.0, sigma2=0.1, b_p=-1.0)
    with pytest.raises(DomainError):
        SystemParams(alpha=0.5, e_max=6.0, sigma2=0.1, b_p=1.0, n_slots=0)
    with pytest.raises(DomainError):
        SystemParams(alpha=0.5, e_max=math.inf, sigma2=0.1, b_p=1.0)

def test_omega():
    assert SystemParams(alpha=1.0, e_max=1.0, sigma2=0.1, b_p=1.0).omega == pytest.approx(1.0, abs=1e-15)
    assert SystemParams(alpha=1.0, e_max=1.0, sigma2=0.1, b_p=3.0).omega == pytest.approx(7.0, abs=1e-14)
    assert SystemParams(alpha=1.0, e_max=1.0, sigma2=0.1, b_p=0.0).omega == 0.0

def test_slot_data_rejects_negative_or_non_finite():
    with pytest.raises(DomainError):
        SlotData(-1.0, 1.0, 1.0, 1.0, 1.0, 1.0)
    with pytest.raises(DomainError):
        SlotData(1.0, math.nan, 1.0, 1.0, 1.0, 1.0)

def test_hand_rates(hand_slot):
    assert pu_rate(hand_slot, 0.85, 0.75, 0.1) == pytest.approx(1.0, abs=1e-12)
    assert su_rate(hand_slot, 0.85, 0.75, 0.1) == pytest.approx(math.log2(1.0 + 0.75 / 0.95), abs=1e-12)

def test_rates_at_zero_power(hand_slot):
    assert su_rate(hand_slot, 0.85, 0.0, 0.1) == 0.0
    assert pu_rate(hand_slot, 0.0, 0.75, 0.1) == 0.0

@pytest.mark.parametrize("p_p, p_s", [(0.0, 1e-9), (1e-6, 3.0), (2.5, 0.125), (10.0, 10.0)])
def test_rates_against_extended_precision(p_p, p_s):
    slot = SlotData(h_pp=0.37, h_ps=0.05, h_ss=1.7, h_sp=0.21, e_p=1.0, e_s=1.0)
    sigma2 = 0.1
    expected_su = decimal_log2_1p(slot.h_ss * p_s, sigma2 + slot.h_ps * p_p)
    assert su_rate(slot, p_p, p_s, sigma2) == pytest.approx(expected_su, rel=1e-12, abs=1e-300)
    if p_p > 0:
        expected_pu = decimal_log2_1p(slot.h_pp * p_p, sigma2 + slot.h_sp * p_s)
        assert pu_rate(slot, p_p, p_s, sigma2) == pytest.approx(expected_pu, rel=1e-12)

@pytest.mark.parametrize("p_p, p_s, sigma2", [(-0.1, 0.5, 0.1), (0.5, math.inf, 0.1), (0.5, 0.5, 0.0), (math.nan, 0.5, 0.1)])
def test_rates_reject_bad_inputs(hand_slot, p_p, p_s, sigma2):
    with pytest.raises(DomainError):
        su_rate(hand_slot, p_p, p_s, sigma2)
    with pytest.raises(DomainError):
        pu_rate(hand_slot, p_p, p_s, sigma2)

def test_vector_rates_match_scalar_rates():
    trace = Trace.from_arrays([1.0, 0.5], [0.2, 0.1], [0.3, 2.0], [0.7, 0.05], 1.0, 1.0)
    policy = Policy([0.4, 1.2], [0.9, 0.0], [0.0, 0.0])
    expected = [su_rate(slot, p_p, p_s, 0.1) for slot, p_p, p_s in zip(trace, policy.p_p, policy.p_s)]
    assert su_rates(trace, policy, 0.1) == pytest.approx(expected, rel=1e-14)
    assert pu_bits(trace, policy, 0.1) == pytest.approx(sum(pu_rate(slot, p_p, p_s, 0.1) for slot, p_p, p_s in zip(trace, policy.p_p, policy.p_s)))

def test_trace_from_arrays_broadcasts_scalars():
    trace = Trace.from_arrays(1.0, 0.5, [0.1, 0.2, 0.3], 2.0, [2, 3, 2], 4.0)
    assert len(trace) == 3
    assert list(trace.h_ss) == [0.1, 0.2, 0.3]
    assert list(trace.e_s) == [4.0, 4.0, 4.0]
    assert trace[1].e_p == 3.0

def test_trace_digest_is_value_based():
    first = Trace.from_arrays(1.0, 0.5, [0.1, 0.2], 2.0, 1.0, 1.0)
    second = Trace.from_arrays([1.0, 1.0], [0.5, 0.5], [0.1, 0.2], [2.0, 2.0], [1.0, 1.0], [1.0, 1.0])
    third = Trace.from_arrays(1.0, 0.5, [0.1, 0.25], 2.0, 1.0, 1.0)
    assert first.digest() == second.digest()
    assert first.digest() != third.digest()

def test_policy_validation():
    with pytest.raises(DomainError):
        Policy([0.1, -0.1], [0.0, 0.0])
    with pytest.raises(ContractError):
        Policy([0.1, 0.1], [0.0])
    policy = Policy([0.1, 0.2], [0.3, 0.4])
    assert list(policy.delta_sp) == [0.0, 0.0]
    assert Policy.from_vector(policy.as_vector()) == policy
    with pytest.raises(ValueError):
        policy.p_p[0] = 1.0

def test_prefix_balances():
    params = SystemParams(alpha=0.5, e_max=6.0, sigma2=0.1, b_p=0.0, n_slots=2)
    trace = Trace.from_arrays(1.0, 1.0, 1.0, 1.0, [1.0, 2.0], [3.0, 1.0])
    policy = Policy([1.5, 1.0], [1.0, 2.0], [1.0, 0.0])
    stored_st, stored_pt = prefix_balances(params, trace, policy)
    assert list(stored_st) == pytest.approx([1.0, 0.0])
    assert list(stored_pt) == pytest.approx([0.0, 1.0])

def test_zero_policy_with_small_arrivals_is_feasible():
    params = SystemParams(alpha=0.8, e_max=6.0, sigma2=0.1, b_p=0.0, n_slots=3)
    trace = Trace.from_arrays(0.1, 0.1, 0.1, 0.1, [0.5, 0.5, 0.5], [1.0, 1.0, 1.0])
    report = check_feasibility(params, trace, Policy.zeros(3))
    assert report.feasible
    assert report.flags == (True, True, True, True, True)

def test_only_pt_overflow_flag_is_false():
    params = SystemParams(alpha=1.0, e_max=1.5, sigma2=0.1, b_p=0.0)
    trace = Trace.from_arrays(1.0, 1.0, 1.0, 1.0, 1.0, 1.0)
    report = check_feasibility(params, trace, Policy([0.0], [0.0], [1.0]))
    assert report.flags == (True, True, True, True, False)
    assert report.pt_overflow_violation == pytest.approx(0.5)
    assert not report.feasible

def test_feasibility_detects_pu_shortfall_and_causality():
    params = SystemParams(alpha=1.0, e_max=6.0, sigma2=0.1, b_p=5.0)
    trace = Trace.from_arrays(1.0, 1.0, 1.0, 1.0, 0.5, 0.5)
    report = check_feasibility(params, trace, Policy([1.0], [0.75], [0.0]))
    assert not report.pu_rate_ok
    assert not report.pt_causality_ok
    assert report.pt_causality_violation == pytest.approx(0.5)
    assert not report.st_causality_ok
    assert report.st_causality_violation == pytest.approx(0.25)
    assert report.worst_energy_violation == pytest.approx(0.5)

def test_feasibility_length_mismatch():
    params = SystemParams(alpha=1.0, e_max=6.0, sigma2=0.1, b_p=1.0, n_slots=2)
    trace = Trace.from_arrays(1.0, 1.0, 1.0, 1.0, [1.0, 1.0], [1.0, 1.0])
    with pytest.raises(ContractError):
        check_feasibility(params, trace, Policy.zeros(3))
    with pytest.raises(ContractError):
        check_feasibility(params.replace(n_slots=3), trace, Policy.zeros(2))

def test_effective_budgets_clip_at_battery_capacity():
    params = SystemParams(alpha=1.0, e_max=2.0, sigma2=0.1, b_p=1.0)
    assert effective_budgets(params, SlotData(1.0, 1.0, 1.0, 1.0, 5.0, 1.5)) == (2.0, 1.5)

def test_single_slot_feasibility(hand_params, hand_slot):
    assert single_slot_feasible(hand_params, hand_slot)
    assert not single_slot_feasible(hand_params, hand_slot.replace(e_p=0.05, e_s=0.04))
    assert single_slot_feasible(hand_params.replace(b_p=0.0), hand_slot.replace(e_p=0.0, e_s=0.0))
    with pytest.raises(ContractError):
        single_slot_feasible(hand_params.replace(n_slots=2), hand_slot)

def test_rates_are_monotone_in_powers():
    slot = SlotData(h_pp=0.37, h_ps=0.05, h_ss=1.7, h_sp=0.21, e_p=1.0, e_s=1.0)
    powers = [0.0, 0.1, 0.5, 1.0, 4.0]
    for low, high in zip(powers, powers[1:]):
        assert su_rate(slot, 1.0, high, 0.1) > su_rate(slot, 1.0, low, 0.1)
        assert su_rate(slot, high, 1.0, 0.1) < su_rate(slot, low, 1.0, 0.1)
        assert pu_rate(slot, high, 1.0, 0.1) > pu_rate(slot, low, 1.0, 0.1)
        assert pu_rate(slot, 1.0, high, 0.1) < pu_rate(slot, 1.0, low, 0.1)

@pytest.mark.parametrize("scale", [1e-3, 0.5, 7.0, 1e4])
def test_rates_are_invariant_under_gain_and_noise_rescaling(rng, scale):
    for _ in range(20):
        gains = rng.exponential(0.1, 4)
        p_p, p_s = rng.uniform(0.0, 5.0, 2)
        slot = SlotData(*gains, e_p=1.0, e_s=1.0)
        scaled = SlotData(*(scale * gains), e_p=1.0, e_s=1.0)
        assert su_rate(scaled, p_p, p_s, scale * 0.1) == pytest.approx(su_rate(slot, p_p, p_s, 0.1), rel=1e-12, abs=1e-15)
        assert pu_rate(scaled, p_p, p_s, scale * 0.1) == pytest.approx(pu_rate(slot, p_p, p_s, 0.1), rel=1e-12, abs=1e-15)
