# -*- coding: Utf-8 -*

import math
import numpy as np
import pytest
from ehcrn import SystemParams, SlotData, Trace

HAND_SU_BITS = math.log2(1.0 + 0.75 / 0.95)

@pytest.fixture
def hand_params() -> SystemParams:
    return SystemParams(alpha=1.0, e_max=6.0, sigma2=0.1, b_p=1.0)

@pytest.fixture
def hand_slot() -> SlotData:
    return SlotData(h_pp=1.0, h_ps=1.0, h_ss=1.0, h_sp=1.0, e_p=0.6, e_s=1.0)

@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20201019)

def random_single_slot_instance(rng: np.random.Generator, mean_gain: float = 0.1) -> tuple[SystemParams, SlotData]:
    params = SystemParams(alpha=rng.uniform(0.0, 1.0), e_max=6.0, sigma2=0.1, b_p=rng.uniform(0.5, 3.0))
    slot = SlotData(*rng.exponential(mean_gain, 4), e_p=rng.uniform(0.5, 5.0), e_s=rng.uniform(0.5, 5.0))
    return params, slot

def random_trace(rng: np.random.Generator, n_slots: int, mean_gain: float = 0.1, energy: float = 2.0) -> Trace:
    return Trace.from_arrays(*rng.exponential(mean_gain, (4, n_slots)), rng.uniform(0.0, energy, n_slots), rng.uniform(0.0, energy, n_slots))
