"""
Network topology and node parameters; weighted Laplacian and linear compound plant

State ordering is fixed for every module: x = [phi_1..phi_N, omega_1..omega_N, chi_1..chi_N].
"""
import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from utils.constants import (
    BENCHMARK_N_NODES, BENCHMARK_INERTIA, BENCHMARK_KP, BENCHMARK_KI, BENCHMARK_T, BENCHMARK_COUPLING
)
from utils.errors import GridConfigError
from utils.logger import get_logger

logger = get_logger("GridModel")


def _frozen(values, name: str, n_nodes: int) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.shape != (n_nodes,):
        raise GridConfigError(f"{name} must have {n_nodes} entries, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise GridConfigError(f"{name} contains non-finite entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class GridParams:
    """
    Per-node physical and controller constants plus the coupling matrix

    Attributes:
        n_nodes: Number of nodes N
        inertia: M_j [W s^2]
        kp: Proportional gain k_P,j [W s]
        ki: Leak k_I,j [1/(W s)]
        t_li: Leaky-integrator time constant T_j [s]
        coupling: Symmetric K_jk [W/W], zero diagonal; K_jk > 0 iff j and k are connected
    """
    n_nodes: int
    inertia: np.ndarray
    kp: np.ndarray
    ki: np.ndarray
    t_li: np.ndarray
    coupling: np.ndarray

    def __post_init__(self):
        n = self.n_nodes
        if not isinstance(n, (int, np.integer)) or n < 1:
            raise GridConfigError(f"n_nodes must be a positive integer, got {n!r}")

        for name in ("inertia", "kp", "ki", "t_li"):
            object.__setattr__(self, name, _frozen(getattr(self, name), name, n))

        coupling = np.array(self.coupling, dtype=float)
        if coupling.shape != (n, n):
            raise GridConfigError(f"coupling must be {n}x{n}, got shape {coupling.shape}")
        coupling.setflags(write=False)
        object.__setattr__(self, "coupling", coupling)

        if np.any(self.inertia <= 0):
            raise GridConfigError("inertia M_j must be strictly positive")
        if np.any(self.kp <= 0):
            raise GridConfigError("kp must be strictly positive")
        if np.any(self.t_li <= 0):
            raise GridConfigError("t_li T_j must be strictly positive")
        if np.any(self.ki < 0):
            raise GridConfigError("ki must be nonnegative")
        _check_coupling(coupling)

        if n > 1 and not is_connected(coupling):
            logger.warning_flag("disconnected_topology", n_nodes=n)

    @property
    def n_states(self) -> int:
        return 3 * self.n_nodes


def _check_coupling(coupling: np.ndarray):
    if not np.all(np.isfinite(coupling)):
        raise GridConfigError("coupling contains non-finite entries")
    if not np.allclose(coupling, coupling.T, rtol=0.0, atol=1e-12):
        raise GridConfigError("coupling matrix must be symmetric")
    if np.any(coupling < 0):
        raise GridConfigError("coupling entries must be nonnegative")
    if np.any(np.diag(coupling) != 0):
        raise GridConfigError("coupling matrix must have a zero diagonal")


def is_connected(coupling: np.ndarray) -> bool:
    """Breadth-first reachability on the graph K_jk > 0"""
    n_components, _ = connected_components(csr_matrix(np.asarray(coupling) > 0), directed=False)
    return n_components == 1


def fully_connected(n_nodes: int, weight: float) -> np.ndarray:
    coupling = np.full((n_nodes, n_nodes), float(weight))
    np.fill_diagonal(coupling, 0.0)
    return coupling


def benchmark_params(n_nodes: int = BENCHMARK_N_NODES, coupling: Optional[np.ndarray] = None) -> GridParams:
    """
    Benchmark grid parameters

    For n_nodes other than 4 the per-node lists are cycled so every node keeps a
    benchmark controller; the default topology is fully connected with K_jk = 6.
    """
    idx = [j % BENCHMARK_N_NODES for j in range(n_nodes)]
    return GridParams(
        n_nodes=n_nodes,
        inertia=[BENCHMARK_INERTIA[j] for j in idx],
        kp=[BENCHMARK_KP[j] for j in idx],
        ki=[BENCHMARK_KI[j] for j in idx],
        t_li=[BENCHMARK_T[j] for j in idx],
        coupling=fully_connected(n_nodes, BENCHMARK_COUPLING) if coupling is None else coupling,
    )


def build_laplacian(params: GridParams) -> np.ndarray:
    """
    Weighted Laplacian L_jk = delta_jk * sum_l K_jl - K_jk

    Returns:
        Symmetric positive-semidefinite N x N matrix with zero row sums
    """
    coupling = np.asarray(params.coupling, dtype=float)
    _check_coupling(coupling)
    return np.diag(coupling.sum(axis=1)) - coupling


@dataclass(frozen=True)
class CompoundPlant:
    """
    Linear compound plant x' = A x + B u + E d with output map C~ x = u_LI

    The output matrix is the physical low-level control power [0, -K_P, I].
    """
    a: np.ndarray
    b: np.ndarray
    e: np.ndarray
    c_tilde: np.ndarray
    n_nodes: int

    @property
    def n_states(self) -> int:
        return 3 * self.n_nodes


def build_compound_plant(params: GridParams) -> CompoundPlant:
    """
    Assemble A, B, E, C~ of the DC-approximated swing equation under leaky-integrator control

    Args:
        params: Validated grid parameters

    Returns:
        CompoundPlant with E = -B exactly
    """
    n = params.n_nodes
    if np.any(params.inertia == 0) or np.any(params.t_li == 0):
        raise GridConfigError("M and T must be nonsingular")

    m_inv = np.diag(1.0 / params.inertia)
    t_inv = np.diag(1.0 / params.t_li)
    lap = build_laplacian(params)
    eye = np.eye(n)
    zero = np.zeros((n, n))

    a = np.block([
        [zero, eye, zero],
        [-m_inv @ lap, -m_inv @ np.diag(params.kp), m_inv],
        [zero, -t_inv, -t_inv @ np.diag(params.ki)],
    ])
    b = np.vstack([zero, m_inv, zero])
    e = -b
    c_tilde = np.hstack([zero, -np.diag(params.kp), eye])

    logger.debug("Compound plant assembled", n_nodes=n, n_states=3 * n)
    return CompoundPlant(a=a, b=b, e=e, c_tilde=c_tilde, n_nodes=n)


def synchronous_origin(n_nodes: int, phase: float = 0.0) -> np.ndarray:
    """Equal phases, zero frequency deviation and zero controller state"""
    x0 = np.zeros(3 * n_nodes)
    x0[:n_nodes] = phase
    return x0


def params_from_lists(
    inertia: Sequence[float],
    kp: Sequence[float],
    ki: Sequence[float],
    t_li: Sequence[float],
    coupling: Sequence[Sequence[float]],
) -> GridParams:
    return GridParams(
        n_nodes=len(inertia), inertia=inertia, kp=kp, ki=ki, t_li=t_li, coupling=coupling
    )
