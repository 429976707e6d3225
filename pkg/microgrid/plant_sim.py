"""
Nonlinear closed-loop simulation: swing equation under leaky-integrator control with a
zero-order-hold ILC input, integrated cycle by cycle with hourly energy measurement
"""
import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import time
from dataclasses import dataclass
from typing import Callable, List, Optional, Protocol

import numpy as np
import pandas as pd
from scipy.integrate import solve_ivp

from microgrid.demand import DemandTrace
from microgrid.grid_model import GridParams, build_laplacian
from microgrid.ilc import CyclePlan
from utils.constants import (
    HOURS_PER_CYCLE, ENERGY_SIGN, SOLVER_METHOD, SOLVER_RTOL, SOLVER_ATOL, PEAK_SAMPLES,
    FREQUENCY_BOUND_HZ, CYCLES_COLUMNS,
)
from utils.errors import DimensionError, SolverFailure
from utils.logger import get_logger

logger = get_logger("PlantSim")

# fractions of a segment; input switches excite the fast modes right after the segment start
_PEAK_GRID = np.unique(np.concatenate([[0.0], np.geomspace(1e-7, 1.0, PEAK_SAMPLES)]))


@dataclass(frozen=True)
class SolverConfig:
    """
    Integrator settings

    linear replaces sin(phi_j - phi_k) by the DC approximation (Laplacian coupling).
    """
    method: str = SOLVER_METHOD
    rtol: float = SOLVER_RTOL
    atol: float = SOLVER_ATOL
    linear: bool = False


@dataclass(frozen=True)
class PlantState:
    phases: np.ndarray
    freqs: np.ndarray
    chi: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        for name in ("phases", "freqs", "chi"):
            object.__setattr__(self, name, np.array(getattr(self, name), dtype=float).reshape(-1))
        n = self.phases.size
        if self.freqs.size != n or self.chi.size != n:
            raise DimensionError("phases, freqs and chi must have the same length")
        if not np.all(np.isfinite(self.to_vector())):
            raise DimensionError("plant state has non-finite entries")

    @property
    def n_nodes(self) -> int:
        return self.phases.size

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.phases, self.freqs, self.chi])

    @classmethod
    def from_vector(cls, x: np.ndarray, t: float = 0.0) -> "PlantState":
        x = np.asarray(x, dtype=float)
        n = x.size // 3
        return cls(phases=x[:n], freqs=x[n:2 * n], chi=x[2 * n:3 * n], t=t)

    @classmethod
    def origin(cls, n_nodes: int, t: float = 0.0) -> "PlantState":
        """Synchronous origin: equal phases, zero frequency deviation, zero controller state"""
        zeros = np.zeros(n_nodes)
        return cls(phases=zeros, freqs=zeros, chi=zeros, t=t)


@dataclass(frozen=True)
class CycleResult:
    """
    Measurements of one simulated cycle; every array has shape (24, N)

    y: hourly energy ENERGY_SIGN * int u_LI dt [W h]; u: applied ILC inputs;
    max_abs_omega: per-hour max |omega_j| over solver steps and interpolant samples [rad/s];
    demand_mean: hour-averaged P^d.
    """
    cycle: int
    y: np.ndarray
    u: np.ndarray
    max_abs_omega: np.ndarray
    demand_mean: np.ndarray
    terminal: PlantState

    @property
    def y_stacked(self) -> np.ndarray:
        return self.y.reshape(-1)

    @property
    def u_stacked(self) -> np.ndarray:
        return self.u.reshape(-1)

    @property
    def max_abs_freq_hz(self) -> np.ndarray:
        return self.max_abs_omega / (2.0 * np.pi)


def power_flow(phases: np.ndarray, coupling: np.ndarray) -> np.ndarray:
    """F_j = sum_k K_jk sin(phi_j - phi_k)"""
    phases = np.asarray(phases, dtype=float)
    return np.sum(coupling * np.sin(phases[:, None] - phases[None, :]), axis=1)


def dc_power_flow(phases: np.ndarray, laplacian: np.ndarray) -> np.ndarray:
    return laplacian @ np.asarray(phases, dtype=float)


def _flow_jacobian(phases: np.ndarray, coupling: np.ndarray) -> np.ndarray:
    weights = coupling * np.cos(phases[:, None] - phases[None, :])
    return np.diag(weights.sum(axis=1)) - weights


class _ClosedLoop:
    """Right-hand side and Jacobian of [phi; omega; chi; q] with q' = u_LI"""

    def __init__(self, params: GridParams, linear: bool = False):
        self.n = params.n_nodes
        self.params = params
        self.linear = linear
        self.m_inv = 1.0 / params.inertia
        self.t_inv = 1.0 / params.t_li
        self.coupling = params.coupling
        self.laplacian = build_laplacian(params)

        n = self.n
        jac = np.zeros((4 * n, 4 * n))
        idx = np.arange(n)
        jac[idx, n + idx] = 1.0
        jac[n + idx, n + idx] = -self.m_inv * params.kp
        jac[n + idx, 2 * n + idx] = self.m_inv
        jac[2 * n + idx, n + idx] = -self.t_inv
        jac[2 * n + idx, 2 * n + idx] = -self.t_inv * params.ki
        jac[3 * n + idx, n + idx] = -params.kp
        jac[3 * n + idx, 2 * n + idx] = 1.0
        self._jac_const = jac

    def flow(self, phases: np.ndarray) -> np.ndarray:
        if self.linear:
            return dc_power_flow(phases, self.laplacian)
        return power_flow(phases, self.coupling)

    def derivative(self, x: np.ndarray, u_ilc: np.ndarray, demand: np.ndarray) -> np.ndarray:
        n = self.n
        phases, omega, chi = x[:n], x[n:2 * n], x[2 * n:3 * n]
        u_li = -self.params.kp * omega + chi
        d_omega = self.m_inv * (u_li + u_ilc - self.flow(phases) - demand)
        d_chi = self.t_inv * (-omega - self.params.ki * chi)
        return np.concatenate([omega, d_omega, d_chi, u_li])

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        n = self.n
        jac = self._jac_const.copy()
        flow_jac = self.laplacian if self.linear else _flow_jacobian(x[:n], self.coupling)
        jac[n:2 * n, :n] = -self.m_inv[:, None] * flow_jac
        return jac


def rhs(state, u_ilc, demand, params: GridParams, linear: bool = False) -> np.ndarray:
    """
    Closed-loop derivative [phi'; omega'; chi'] of a PlantState or stacked state vector

    phi' = omega; M omega' = u_LI + u_ILC - F - P^d with u_LI = -K_P omega + chi;
    T chi' = -omega - K_I chi.
    """
    x = state.to_vector() if isinstance(state, PlantState) else np.asarray(state, dtype=float)
    n = params.n_nodes
    u_ilc = np.asarray(u_ilc, dtype=float)
    demand = np.asarray(demand, dtype=float)
    if x.size != 3 * n or u_ilc.size != n or demand.size != n:
        raise DimensionError(f"rhs expects a {3 * n}-state, {n} inputs and {n} demands")
    return _ClosedLoop(params, linear).derivative(np.concatenate([x, np.zeros(n)]), u_ilc, demand)[:3 * n]


def simulate_cycle(
    state0: PlantState,
    plan: CyclePlan,
    trace: DemandTrace,
    params: GridParams,
    solver_cfg: Optional[SolverConfig] = None,
) -> CycleResult:
    """
    Integrate one cycle [c T_d, (c+1) T_d) with the ILC input held constant per hour

    The hour length is trace.period / 24. Each hour is integrated piecewise between the
    trace breakpoints; the hourly energy comes from quadrature states reset at every
    hour start.

    Raises:
        SolverFailure: integrator stopped early, with the failing time
    """
    solver_cfg = solver_cfg or SolverConfig()
    n = params.n_nodes
    if plan.n_nodes != n or state0.n_nodes != n or trace.n_nodes != n:
        raise DimensionError(
            f"node counts differ: params={n}, plan={plan.n_nodes}, state={state0.n_nodes}, trace={trace.n_nodes}"
        )

    period = trace.period
    hour = period / HOURS_PER_CYCLE
    t_start = plan.cycle * period
    if not np.isclose(state0.t, t_start, rtol=0.0, atol=1e-9 * max(period, 1.0)):
        logger.warning_flag("cycle_time_mismatch", state_t=state0.t, cycle_start=t_start)
        t_start = state0.t

    model = _ClosedLoop(params, solver_cfg.linear)
    x = state0.to_vector()

    y = np.zeros((HOURS_PER_CYCLE, n))
    max_omega = np.zeros((HOURS_PER_CYCLE, n))
    demand_mean = np.zeros((HOURS_PER_CYCLE, n))

    for h in range(HOURS_PER_CYCLE):
        ta = t_start + h * hour
        tb = ta + hour
        u_h = plan.inputs[h]
        z = np.concatenate([x, np.zeros(n)])
        points = trace.segment_points(ta, tb)
        d_points = trace(points)

        for k in range(points.size - 1):
            p0, p1 = points[k], points[k + 1]
            d0, d1 = d_points[k], d_points[k + 1]
            slope = (d1 - d0) / (p1 - p0)

            def fun(t, state, d0=d0, slope=slope, p0=p0):
                return model.derivative(state, u_h, d0 + slope * (t - p0))

            sol = solve_ivp(
                fun, (p0, p1), z, method=solver_cfg.method,
                rtol=solver_cfg.rtol, atol=solver_cfg.atol,
                jac=lambda t, state: model.jacobian(state), dense_output=True,
            )
            if not sol.success:
                t_fail = float(sol.t[-1]) if sol.t.size else p0
                logger.solver_failed(t_fail, sol.message)
                raise SolverFailure(f"integrator failed in cycle {plan.cycle}, hour {h + 1}: {sol.message}", t_fail)

            peak = np.abs(sol.y[n:2 * n]).max(axis=1)
            if sol.sol is not None:
                sampled = sol.sol(p0 + (p1 - p0) * _PEAK_GRID)
                peak = np.maximum(peak, np.abs(sampled[n:2 * n]).max(axis=1))
            max_omega[h] = np.maximum(max_omega[h], peak)
            z = sol.y[:, -1]

        x = z[:3 * n]
        y[h] = ENERGY_SIGN * z[3 * n:] / hour
        demand_mean[h] = trace.hourly_mean(ta, tb)

    _check_sensibility(plan, demand_mean)
    peak_hz = float(max_omega.max()) / (2.0 * np.pi)
    if peak_hz > FREQUENCY_BOUND_HZ:
        logger.warning_flag("frequency_bound", cycle=plan.cycle, max_abs_freq_hz=peak_hz)

    return CycleResult(
        cycle=plan.cycle,
        y=y,
        u=np.array(plan.inputs),
        max_abs_omega=max_omega,
        demand_mean=demand_mean,
        terminal=PlantState.from_vector(x, t=t_start + period),
    )


def _check_sensibility(plan: CyclePlan, demand_mean: np.ndarray):
    """Monitor |sum_j u_j - sum_j P^d_j| <= |sum_j P^d_j| per hour; logged, never enforced"""
    total_u = plan.inputs.sum(axis=1)
    total_d = demand_mean.sum(axis=1)
    violations = np.abs(total_u - total_d) > np.abs(total_d) + 1e-12
    if np.any(violations):
        logger.warning_flag("ilc_sensibility", cycle=plan.cycle, hours=int(violations.sum()))


class Controller(Protocol):
    def plan_for(self, cycle: int) -> CyclePlan: ...

    def update(self, y_stacked: np.ndarray) -> CyclePlan: ...


def run_multi_cycle(
    state0: PlantState,
    controller: Controller,
    trace: DemandTrace,
    params: GridParams,
    n_cycles: int,
    solver_cfg: Optional[SolverConfig] = None,
    first_cycle: int = 0,
    on_cycle: Optional[Callable[[CycleResult], None]] = None,
) -> List[CycleResult]:
    """
    Chain cycles in continuous time; the terminal state of cycle c starts cycle c+1

    The controller plans cycle c and is updated with the measured outputs afterwards.
    """
    results: List[CycleResult] = []
    state = state0
    for c in range(first_cycle, first_cycle + n_cycles):
        started = time.time()
        plan = controller.plan_for(c)
        result = simulate_cycle(state, plan, trace, params, solver_cfg)
        controller.update(result.y_stacked)
        results.append(result)
        state = result.terminal

        logger.cycle_completed(
            c, np.linalg.norm(result.y_stacked), float(result.max_abs_freq_hz.max()), time.time() - started
        )
        if on_cycle:
            on_cycle(result)
    return results


class FixedPlanController:
    """Applies the same hourly inputs every cycle and ignores measurements"""

    def __init__(self, inputs: np.ndarray):
        self.inputs = np.asarray(inputs, dtype=float)

    def plan_for(self, cycle: int) -> CyclePlan:
        return CyclePlan(cycle=cycle, inputs=self.inputs)

    def update(self, y_stacked: np.ndarray) -> CyclePlan:
        return CyclePlan(cycle=0, inputs=self.inputs)


def results_frame(results: List[CycleResult]) -> pd.DataFrame:
    """
    Long-format table with one row per (cycle, hour, node)

    hour and node are 1-based; max_abs_freq is max |omega| / (2 pi) in Hz.
    """
    if not results:
        return pd.DataFrame(columns=CYCLES_COLUMNS)

    frames = []
    for result in results:
        n = result.y.shape[1]
        hours, nodes = np.meshgrid(np.arange(1, HOURS_PER_CYCLE + 1), np.arange(1, n + 1), indexing="ij")
        frames.append(pd.DataFrame({
            "cycle": result.cycle,
            "hour": hours.reshape(-1),
            "node": nodes.reshape(-1),
            "u_ilc": result.u.reshape(-1),
            "y_li": result.y.reshape(-1),
            "max_abs_freq": result.max_abs_freq_hz.reshape(-1),
        }))
    return pd.concat(frames, ignore_index=True)[CYCLES_COLUMNS]
