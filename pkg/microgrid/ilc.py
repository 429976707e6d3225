"""
Cycle-to-cycle learning law u^c = Q(u^{c-1} - L y^{c-1}) and the input scheduling contract
"""
import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from microgrid.lifted import LiftedFilters, upper_bandwidth
from utils.constants import HOURS_PER_CYCLE
from utils.errors import DimensionError
from utils.logger import get_logger

logger = get_logger("ILC")


@dataclass(frozen=True)
class CyclePlan:
    """Hourly ILC inputs of one cycle, shape (24, N), in per-unit W"""
    cycle: int
    inputs: np.ndarray

    def __post_init__(self):
        inputs = np.array(self.inputs, dtype=float)
        if inputs.ndim != 2 or inputs.shape[0] != HOURS_PER_CYCLE:
            raise DimensionError(f"plan needs {HOURS_PER_CYCLE} hourly blocks, got shape {inputs.shape}")
        if not np.all(np.isfinite(inputs)):
            raise DimensionError("plan contains non-finite inputs")
        inputs.setflags(write=False)
        object.__setattr__(self, "inputs", inputs)

    @property
    def n_nodes(self) -> int:
        return self.inputs.shape[1]

    @property
    def stacked(self) -> np.ndarray:
        return self.inputs.reshape(-1)

    @classmethod
    def from_stacked(cls, cycle: int, u: np.ndarray, n_nodes: int) -> "CyclePlan":
        u = np.asarray(u, dtype=float)
        if u.size != HOURS_PER_CYCLE * n_nodes:
            raise DimensionError(f"stacked plan must have {HOURS_PER_CYCLE * n_nodes} entries, got {u.size}")
        return cls(cycle=cycle, inputs=u.reshape(HOURS_PER_CYCLE, n_nodes))

    @classmethod
    def zeros(cls, cycle: int, n_nodes: int) -> "CyclePlan":
        return cls(cycle=cycle, inputs=np.zeros((HOURS_PER_CYCLE, n_nodes)))


@dataclass
class IlcState:
    """
    Current stacked plan u^c, the filters and the recorded error norms ||e^c||_2

    The error is e^c = -y^c (zero reference), so ||e^c|| = ||y^c||.
    """
    u: np.ndarray
    filters: LiftedFilters
    cycle: int = 0
    error_norms: List[float] = field(default_factory=list)

    @property
    def n_nodes(self) -> int:
        return self.filters.n_nodes

    @property
    def plan(self) -> CyclePlan:
        return CyclePlan.from_stacked(self.cycle, self.u, self.n_nodes)


def initial_state(filters: LiftedFilters) -> IlcState:
    """u^0 = 0"""
    return IlcState(u=np.zeros(filters.q.shape[0]), filters=filters)


def learning_update(state: IlcState, y_prev: np.ndarray) -> CyclePlan:
    """
    Apply the learning law with the measured hourly energy of the previous cycle

    Args:
        state: Controller state holding u^{c-1}; advanced in place to cycle c
        y_prev: Stacked hourly outputs y^{c-1} [W h], length 24 N

    Returns:
        CyclePlan for cycle c
    """
    y_prev = np.asarray(y_prev, dtype=float).reshape(-1)
    if y_prev.shape != state.u.shape:
        raise DimensionError(f"y_prev has {y_prev.size} entries, expected {state.u.size}")

    filters = state.filters
    u_next = filters.q @ (state.u - filters.l @ y_prev)

    state.error_norms.append(float(np.linalg.norm(y_prev)))
    state.u = u_next
    state.cycle += 1
    return state.plan


def update_operators(filters: LiftedFilters) -> Tuple[np.ndarray, np.ndarray]:
    """Matrices (Q, -Q L) with u^c = Q u^{c-1} + (-Q L) y^{c-1}"""
    return filters.q, -filters.q @ filters.l


def scheduling_horizon(filters: LiftedFilters, rel_tol: float = 0.0) -> int:
    """
    Hours before midnight at which every u^{c+1,h} is fixed by measured data

    24 minus the upper bandwidth of Q_h; a dense Q_h (bandwidth 23) gives 0.
    rel_tol treats entries below rel_tol * max|Q_h| as zero.
    """
    n_hours = filters.q_hour.shape[0]
    bandwidth = upper_bandwidth(filters.q_hour, rel_tol)
    if bandwidth >= n_hours - 1:
        return 0
    return n_hours - bandwidth


class IlcController:
    """Supplies the plan of each cycle and learns from the measured hourly outputs"""

    def __init__(self, filters: LiftedFilters):
        self.state = initial_state(filters)

    def plan_for(self, cycle: int) -> CyclePlan:
        if cycle != self.state.cycle:
            logger.warning_flag("plan_cycle_mismatch", requested=cycle, controller=self.state.cycle)
        return CyclePlan.from_stacked(cycle, self.state.u, self.state.n_nodes)

    def update(self, y_stacked: np.ndarray) -> CyclePlan:
        return learning_update(self.state, y_stacked)

    @property
    def error_norms(self) -> List[float]:
        return list(self.state.error_norms)
