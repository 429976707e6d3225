"""
Tests for the nonlinear closed-loop simulation
"""
import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from types import SimpleNamespace

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from microgrid import plant_sim
from microgrid.demand import SyntheticDemandSpec, constant_trace, synthetic_trace
from microgrid.grid_model import build_compound_plant, params_from_lists, benchmark_params
from microgrid.ilc import CyclePlan, IlcController
from microgrid.lifted import build_filters, build_p_matrix
from microgrid.plant_sim import (
    PlantState, SolverConfig, FixedPlanController, power_flow, rhs, simulate_cycle,
    run_multi_cycle, results_frame, _ClosedLoop,
)
from utils.constants import CYCLES_COLUMNS, FREQUENCY_BOUND_HZ
from utils.errors import DimensionError, SolverFailure

HOUR = 10.0
PERIOD = 24 * HOUR


def test_equilibrium_has_zero_derivative():
    params = benchmark_params()
    deriv = rhs(PlantState.origin(4), np.zeros(4), np.zeros(4), params)
    np.testing.assert_array_equal(deriv, 0.0)


def test_two_node_power_flow():
    np.testing.assert_allclose(power_flow(np.array([np.pi / 2, 0.0]), np.array([[0, 6.0], [6.0, 0]])),
                               [6.0, -6.0], atol=1e-12)


def test_power_flow_is_conserved():
    rng = np.random.default_rng(0)
    params = benchmark_params()
    for _ in range(20):
        flows = power_flow(rng.uniform(-np.pi, np.pi, 4), params.coupling)
        assert abs(flows.sum()) < 1e-12 * 4 * 24


def test_rhs_matches_equations():
    params = params_from_lists([2.0, 4.0], [10.0, 20.0], [0.1, 0.2], [0.5, 0.25], [[0, 3.0], [3.0, 0]])
    state = PlantState(phases=[0.1, -0.2], freqs=[0.01, -0.02], chi=[0.3, 0.4])
    u, d = np.array([0.5, -0.1]), np.array([0.2, 0.3])
    deriv = rhs(state, u, d, params)
    u_li = -params.kp * state.freqs + state.chi
    flow = power_flow(state.phases, params.coupling)
    np.testing.assert_allclose(deriv[:2], state.freqs)
    np.testing.assert_allclose(deriv[2:4], (u_li + u - flow - d) / params.inertia)
    np.testing.assert_allclose(deriv[4:], (-state.freqs - params.ki * state.chi) / params.t_li)


def test_rhs_dimension_check():
    with pytest.raises(DimensionError):
        rhs(np.zeros(11), np.zeros(4), np.zeros(4), benchmark_params())


@pytest.mark.parametrize("linear", [False, True])
def test_jacobian_matches_finite_differences(linear):
    model = _ClosedLoop(benchmark_params(), linear=linear)
    rng = np.random.default_rng(5)
    x = rng.normal(scale=0.3, size=16)
    u, d = rng.normal(size=4), rng.normal(size=4)
    jac = model.jacobian(x)
    eps = 1e-7
    numeric = np.column_stack([
        (model.derivative(x + eps * e, u, d) - model.derivative(x - eps * e, u, d)) / (2 * eps)
        for e in np.eye(16)
    ])
    np.testing.assert_allclose(jac, numeric, rtol=1e-5, atol=1e-5)


def test_zero_input_zero_demand_stays_at_equilibrium():
    params = benchmark_params()
    trace = constant_trace(np.zeros(4), horizon_days=1, period=PERIOD)
    result = simulate_cycle(PlantState.origin(4), CyclePlan.zeros(0, 4), trace, params)
    np.testing.assert_array_equal(result.y, 0.0)
    np.testing.assert_array_equal(result.terminal.to_vector(), 0.0)
    assert result.terminal.t == pytest.approx(PERIOD)


def test_constant_demand_settles():
    params = benchmark_params()
    demand = np.array([0.2, 0.1, 0.3, 0.15])
    # hours long against the slowest leaky-integrator mode (T_4 / k_I,4 ~ 43 s)
    trace = constant_trace(demand, horizon_days=1, period=24 * 60.0)
    result = simulate_cycle(PlantState.origin(4), CyclePlan.zeros(0, 4), trace, params)
    np.testing.assert_allclose(result.y[23], result.y[22], rtol=1e-2)
    # the low level supplies the whole demand: sum_j y = -sum_j P^d
    assert result.y[23].sum() == pytest.approx(-demand.sum(), rel=1e-2)
    np.testing.assert_allclose(result.demand_mean, np.tile(demand, (24, 1)))


def test_linear_simulation_matches_lifted_model():
    params = benchmark_params()
    hour = 5.0
    lifted = build_p_matrix(build_compound_plant(params), samples_per_hour=10, hour_seconds=hour)
    trace = constant_trace(np.zeros(4), horizon_days=1, period=24 * hour)
    u = np.random.default_rng(7).normal(scale=0.1, size=(24, 4))
    cfg = SolverConfig(rtol=1e-10, atol=1e-12, linear=True)
    result = simulate_cycle(PlantState.origin(4), CyclePlan(cycle=0, inputs=u), trace, params, cfg)
    predicted = lifted.p @ u.reshape(-1) + lifted.z
    deviation = np.abs(result.y_stacked - predicted).max() / np.abs(predicted).max()
    assert deviation <= 1e-4


def test_frequency_stays_within_bound():
    params = benchmark_params()
    spec = SyntheticDemandSpec(amplitudes=(0.6, 0.9, 0.7, 0.8), fluctuation=(0.2,) * 4,
                               period=PERIOD, rng_seed=3)
    trace = synthetic_trace(spec, horizon_days=1)
    result = simulate_cycle(PlantState.origin(4), CyclePlan.zeros(0, 4), trace, params)
    assert result.max_abs_freq_hz.max() <= FREQUENCY_BOUND_HZ


def test_multi_cycle_chains_states():
    params = benchmark_params()
    spec = SyntheticDemandSpec(amplitudes=(0.5,) * 4, fluctuation=(0.0,) * 4, period=PERIOD)
    trace = synthetic_trace(spec, horizon_days=2)
    single = simulate_cycle(PlantState.origin(4), CyclePlan.zeros(0, 4), trace, params)
    results = run_multi_cycle(PlantState.origin(4), FixedPlanController(np.zeros((24, 4))), trace, params, 2)
    np.testing.assert_allclose(results[0].y, single.y)
    assert results[1].cycle == 1
    assert results[0].terminal.t == pytest.approx(PERIOD)
    assert results[1].terminal.t == pytest.approx(2 * PERIOD)


def test_zero_gain_controller_never_acts():
    params = benchmark_params()
    spec = SyntheticDemandSpec(amplitudes=(0.5,) * 4, fluctuation=(0.1,) * 4, period=PERIOD, rng_seed=1)
    trace = synthetic_trace(spec, horizon_days=3)
    controller = IlcController(build_filters(4, kappa=0.0))
    results = run_multi_cycle(PlantState.origin(4), controller, trace, params, 3)
    for result in results:
        np.testing.assert_array_equal(result.u, 0.0)
    assert len(controller.error_norms) == 3


def test_solver_failure_reports_time(monkeypatch):
    def failing(fun, t_span, y0, **kwargs):
        return SimpleNamespace(success=False, t=np.array([t_span[0], t_span[0] + 1.5]),
                               y=np.tile(y0[:, None], 2), message="step size underflow")

    monkeypatch.setattr(plant_sim, "solve_ivp", failing)
    trace = constant_trace(np.zeros(4), horizon_days=1, period=PERIOD)
    with pytest.raises(SolverFailure) as excinfo:
        simulate_cycle(PlantState.origin(4), CyclePlan.zeros(0, 4), trace, benchmark_params())
    assert excinfo.value.t_fail == pytest.approx(1.5)


def test_results_frame_layout():
    params = benchmark_params()
    trace = constant_trace(np.zeros(4), horizon_days=1, period=PERIOD)
    result = simulate_cycle(PlantState.origin(4), CyclePlan.zeros(0, 4), trace, params)
    frame = results_frame([result])
    assert list(frame.columns) == CYCLES_COLUMNS
    assert len(frame) == 96
    assert frame["hour"].min() == 1 and frame["node"].max() == 4
    assert results_frame([]).empty


def test_peak_frequency_matches_fine_grid():
    params = params_from_lists([5.0], [400.0], [0.05], [0.04], [[0.0]])
    trace = constant_trace([0.0], horizon_days=1, period=PERIOD)
    inputs = np.zeros((24, 1))
    inputs[0, 0] = 0.5
    result = simulate_cycle(PlantState.origin(1), CyclePlan(cycle=0, inputs=inputs), trace, params)

    def swing(t, x):
        omega, chi = x
        return [(-400.0 * omega + chi + 0.5) / 5.0, (-omega - 0.05 * chi) / 0.04]

    fine = solve_ivp(swing, (0.0, HOUR), [0.0, 0.0], method="Radau", rtol=1e-11, atol=1e-14,
                     t_eval=np.linspace(0.0, HOUR, 200_001))
    expected = np.abs(fine.y[0]).max()
    assert result.max_abs_omega[0, 0] == pytest.approx(expected, rel=1e-3)


def _benchmark_trace(scale=1.0):
    spec = SyntheticDemandSpec(amplitudes=tuple(scale * a for a in (0.6, 0.9, 0.7, 0.8)),
                               fluctuation=(0.2 * scale,) * 4, period=PERIOD, rng_seed=4)
    return synthetic_trace(spec, horizon_days=1)


def test_small_demand_matches_linear_model():
    params = benchmark_params()
    trace = _benchmark_trace(scale=1e-3)
    u = np.random.default_rng(2).normal(scale=1e-4, size=(24, 4))
    plan = CyclePlan(cycle=0, inputs=u)
    tight = dict(rtol=1e-10, atol=1e-14)
    nonlinear = simulate_cycle(PlantState.origin(4), plan, trace, params, SolverConfig(**tight))
    linear = simulate_cycle(PlantState.origin(4), plan, trace, params, SolverConfig(linear=True, **tight))
    deviation = np.abs(nonlinear.y - linear.y).max() / np.abs(linear.y).max()
    assert deviation < 1e-4


def test_halving_tolerances_keeps_hourly_energy():
    params = benchmark_params()
    trace = _benchmark_trace()
    plan = CyclePlan.zeros(0, 4)
    coarse = simulate_cycle(PlantState.origin(4), plan, trace, params, SolverConfig())
    fine = simulate_cycle(PlantState.origin(4), plan, trace, params,
                          SolverConfig(rtol=SolverConfig().rtol / 2, atol=SolverConfig().atol / 2))
    assert np.abs(coarse.y - fine.y).max() < 1e-3 * np.abs(fine.y).max()
