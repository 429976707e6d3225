"""
Learning runs on the nonlinear benchmark grid at 1/60 time compression
"""
import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import numpy as np
import pytest

from microgrid.analysis import cycle_energy, energy_to_demand_ratio, error_norms, step_recovery
from microgrid.demand import kappa_study_spec, synthetic_trace
from microgrid.grid_model import benchmark_params
from nodes.build_demand import build_trace
from nodes.simulate import run_kappas, run_learning
from utils.config import ScenarioConfig, apply_overrides
from utils.constants import Q_CUTOFF, Q_ORDER, Scenarios


def _compressed(seed):
    return apply_overrides(ScenarioConfig(), seed=seed, compress="1/60")


@pytest.fixture(scope="module")
def kappa_norms():
    config = _compressed(3)
    trace = synthetic_trace(kappa_study_spec(4, seed=3, period=config.period), horizon_days=3)
    runs = run_kappas([0.0, 0.5, 1.0, 2.0], benchmark_params(), trace, 3, config.solver_config(),
                      Q_CUTOFF, Q_ORDER)
    return {kappa: error_norms(results) for kappa, results in runs.items()}


def test_first_cycle_is_shared(kappa_norms):
    first = [norms[0] for norms in kappa_norms.values()]
    np.testing.assert_allclose(first, first[0], rtol=1e-9)


def test_no_learning_stays_in_noise_band(kappa_norms):
    norms = kappa_norms[0.0]
    assert np.all(np.abs(norms - norms.mean()) <= 0.15 * norms.mean())


def test_gain_ordering(kappa_norms):
    last = {kappa: norms[-1] / norms[0] for kappa, norms in kappa_norms.items()}
    assert last[1.0] < 0.3
    assert last[1.0] < last[0.5] < 0.5
    # kappa = 2 flips the sign of the daily mean error every cycle
    assert last[2.0] > 0.8
    assert min(last, key=last.get) == 1.0


def test_recovery_after_first_step():
    config = _compressed(1)
    trace, steps = build_trace(config, Scenarios.STEP_CONVERGENCE, 4, 6)
    assert steps == [3]
    results = run_learning(1.0, config.grid.to_params(), trace, 6, config.solver_config(), Q_CUTOFF, Q_ORDER)
    energy = cycle_energy(results)
    assert energy[3] > 2 * energy[2]
    outcome = step_recovery(results, steps)[0]
    assert outcome["recovered"]
    assert outcome["recovered_cycle"] in (4, 5)


def test_load_profile_output_falls_below_a_tenth_of_demand():
    config = _compressed(0)
    trace, _ = build_trace(config, Scenarios.LOAD_PROFILES, 4, 3)
    results = run_learning(1.0, config.grid.to_params(), trace, 3, config.solver_config(), Q_CUTOFF, Q_ORDER)
    ratio = energy_to_demand_ratio(results)
    # without ILC input the low level carries the whole daily demand
    assert ratio[0] == pytest.approx(1.0, abs=0.02)
    assert ratio[2] < 0.1
