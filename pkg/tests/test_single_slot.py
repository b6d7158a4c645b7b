# -*- coding: Utf-8 -*

import math
import numpy as np
import pytest
from ehcrn import SystemParams, SlotData, SingleSlotSolution, ContractError, ThresholdUndefined
from ehcrn import solve_single_slot, solve_no_cooperation, cooperation_threshold, solve_cooperative_closed_form, solve_with_lp
from ehcrn import pu_rate, single_slot_feasible
from conftest import HAND_SU_BITS, random_single_slot_instance

def test_hand_instance_cooperates(hand_params, hand_slot):
    solution = solve_single_slot(hand_params, hand_slot)
    assert solution.mode == SingleSlotSolution.COOPERATION
    assert solution.delta_sp == pytest.approx(0.25, abs=1e-12)
    assert solution.p_s == pytest.approx(0.75, abs=1e-12)
    assert solution.p_p == pytest.approx(0.85, abs=1e-12)
    assert solution.zeta == pytest.approx(0.5, abs=1e-12)
    assert solution.su_bits == pytest.approx(HAND_SU_BITS, abs=1e-12)
    assert pu_rate(hand_slot, solution.p_p, solution.p_s, hand_params.sigma2) == pytest.approx(1.0, abs=1e-9)

def test_small_st_energy_means_no_cooperation(hand_params, hand_slot):
    solution = solve_single_slot(hand_params, hand_slot.replace(e_s=0.3))
    assert solution.mode == SingleSlotSolution.NO_COOPERATION
    assert solution.delta_sp == 0.0
    assert solution.p_s == pytest.approx(0.3)
    assert solution.p_p == pytest.approx(0.4)
    assert solution.zeta == pytest.approx(0.5 / 0.3)

def test_infeasible_instance(hand_params, hand_slot):
    slot = hand_slot.replace(e_p=0.05, e_s=0.04)
    solution = solve_single_slot(hand_params, slot)
    assert solution.mode == SingleSlotSolution.INFEASIBLE
    assert not solution.feasible
    assert not solve_no_cooperation(hand_params, slot).feasible

def test_vacuous_pu_constraint(hand_params, hand_slot):
    params = hand_params.replace(b_p=0.0)
    solution = solve_single_slot(params, hand_slot)
    assert solution.mode == SingleSlotSolution.NO_COOPERATION
    assert (solution.p_p, solution.p_s, solution.delta_sp) == (0.0, 1.0, 0.0)
    assert solution.su_bits == pytest.approx(math.log2(1.0 + 1.0 / 0.1))
    with pytest.raises(ThresholdUndefined):
        cooperation_threshold(params, hand_slot)

def test_threshold_undefined_without_st_energy(hand_params, hand_slot):
    with pytest.raises(ThresholdUndefined):
        cooperation_threshold(hand_params, hand_slot.replace(e_s=0.0))
    solution = solve_single_slot(hand_params, hand_slot.replace(e_s=0.0))
    assert solution.mode == SingleSlotSolution.NO_COOPERATION
    assert solution.p_s == 0.0

def test_budgets_clip_at_battery_capacity(hand_params, hand_slot):
    clipped = solve_single_slot(hand_params.replace(e_max=1.0), hand_slot.replace(e_s=10.0))
    reference = solve_single_slot(hand_params, hand_slot)
    assert clipped.su_bits == pytest.approx(reference.su_bits, abs=1e-12)
    assert clipped.delta_sp == pytest.approx(reference.delta_sp, abs=1e-12)

def test_closed_form_contracts(hand_params, hand_slot):
    with pytest.raises(ContractError):
        solve_cooperative_closed_form(hand_params, hand_slot.replace(e_s=0.3))
    with pytest.raises(ContractError):
        solve_single_slot(hand_params.replace(n_slots=2), hand_slot)

def test_threshold_with_vanishing_st_pr_gain(hand_params, hand_slot):
    assert cooperation_threshold(hand_params, hand_slot.replace(h_sp=0.0)) == math.inf
    solution = solve_single_slot(hand_params, hand_slot.replace(h_sp=0.0))
    assert solution.delta_sp == 0.0
    assert solution.p_s == pytest.approx(1.0)

def test_lp_matches_hand_instance(hand_params, hand_slot):
    solution = solve_with_lp(hand_params, hand_slot)
    assert solution.su_bits == pytest.approx(HAND_SU_BITS, abs=1e-9)
    assert solution.delta_sp == pytest.approx(0.25, abs=1e-9)

def test_closed_form_agrees_with_lp_and_threshold_law(rng):
    checked = 0
    while checked < 300:
        params, slot = random_single_slot_instance(rng)
        if not single_slot_feasible(params, slot):
            assert not solve_single_slot(params, slot, cross_check=False).feasible
            assert not solve_with_lp(params, slot).feasible
            continue
        closed = solve_single_slot(params, slot, cross_check=False)
        lp = solve_with_lp(params, slot)
        assert closed.su_bits == pytest.approx(lp.su_bits, abs=1e-6)
        zeta = cooperation_threshold(params, slot)
        assert (closed.delta_sp > 0) == (zeta < 1)
        checked += 1

@pytest.mark.slow
def test_closed_form_agrees_with_lp_on_many_instances():
    rng = np.random.default_rng(1000)
    checked = 0
    while checked < 1000:
        params, slot = random_single_slot_instance(rng)
        if single_slot_feasible(params, slot):
            solve_single_slot(params, slot, cross_check=True)
            checked += 1

def test_cooperation_dominates_no_cooperation(rng):
    for _ in range(300):
        params, slot = random_single_slot_instance(rng)
        coop = solve_single_slot(params, slot, cross_check=False)
        no_coop = solve_no_cooperation(params, slot)
        if no_coop.feasible:
            assert coop.feasible
            assert coop.su_bits >= no_coop.su_bits - 1e-12

def cooperative_instances(rng: np.random.Generator, count: int) -> list[tuple[SystemParams, SlotData]]:
    instances = list()
    while len(instances) < count:
        params, slot = random_single_slot_instance(rng, mean_gain=1.0)
        if single_slot_feasible(params, slot) and cooperation_threshold(params, slot) < 1:
            instances.append((params, slot))
    return instances

def test_transfer_shrinks_with_pt_energy_and_efficiency(rng):
    for params, slot in cooperative_instances(rng, 100):
        base = solve_single_slot(params, slot, cross_check=False).delta_sp
        more_energy = solve_single_slot(params, slot.replace(e_p=slot.e_p * 1.1), cross_check=False).delta_sp
        assert more_energy <= base + 1e-12
        if params.alpha < 0.95:
            better_transfer = solve_single_slot(params.replace(alpha=params.alpha + 0.05), slot, cross_check=False).delta_sp
            assert better_transfer <= base + 1e-12

def test_transfer_grows_with_pu_target(rng):
    for params, slot in cooperative_instances(rng, 100):
        base = solve_single_slot(params, slot, cross_check=False)
        harder = params.replace(b_p=params.b_p + 0.1)
        if single_slot_feasible(harder, slot):
            assert solve_single_slot(harder, slot, cross_check=False).delta_sp >= base.delta_sp - 1e-12

def test_su_bits_grow_with_efficiency(hand_params, hand_slot):
    bits = [solve_single_slot(hand_params.replace(alpha=alpha), hand_slot).su_bits for alpha in (0.4, 0.6, 0.8, 1.0)]
    assert all(b > a for a, b in zip(bits, bits[1:]))
