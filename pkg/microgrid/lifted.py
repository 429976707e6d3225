"""
Cycle-domain model y^c = P u^c + z^c of the linear compound plant, and the lifted Q and L matrices

Stacking is hour-major, node-minor: entry h * N + j is node j in hour h (0-based).
Hourly outputs are ENERGY_SIGN * integral of C~ x over the hour, in W h.
"""
import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.linalg import expm
from scipy.signal import butter, filtfilt

from microgrid.grid_model import CompoundPlant
from utils.constants import (
    HOURS_PER_CYCLE, SECONDS_PER_HOUR, SAMPLES_PER_HOUR, Q_CUTOFF, Q_ORDER,
    Q_ZERO_TOL, ENERGY_SIGN,
)
from utils.errors import DiscretizationError, FilterDesignError, DimensionError
from utils.logger import get_logger

logger = get_logger("Lifted")


@dataclass(frozen=True)
class ZohIntegrals:
    """
    Exact per-step quantities of x' = A x + B u with u held over a step of length delta

    a_d = e^{A delta}, b_d = (int_0^delta e^{A s} ds) B,
    f_state = int_0^delta e^{A s} ds, f_input = int_0^delta (delta - s) e^{A s} ds B,
    so that int_0^delta x dt = f_state x0 + f_input u.
    """
    a_d: np.ndarray
    b_d: np.ndarray
    f_state: np.ndarray
    f_input: np.ndarray
    delta: float


def zoh_integrals(a: np.ndarray, b: np.ndarray, delta: float) -> ZohIntegrals:
    """Three-block Van Loan exponential of [[A, I, 0], [0, 0, B], [0, 0, 0]] * delta"""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.asarray(b, dtype=float).reshape(a.shape[0], -1)
    n, m = b.shape
    if not delta > 0:
        raise DiscretizationError(f"step must be positive, got {delta}")

    z = np.zeros((2 * n + m, 2 * n + m))
    z[:n, :n] = a
    z[:n, n:2 * n] = np.eye(n)
    z[n:2 * n, 2 * n:] = b
    try:
        ez = expm(z * delta)
    except (ValueError, OverflowError, np.linalg.LinAlgError) as e:
        raise DiscretizationError(f"matrix exponential failed: {str(e)}") from e
    if not np.all(np.isfinite(ez)):
        raise DiscretizationError("matrix exponential returned non-finite entries")

    a_d = ez[:n, :n]
    f_state = ez[:n, n:2 * n]
    f_input = ez[:n, 2 * n:]
    return ZohIntegrals(a_d=a_d, b_d=f_state @ b, f_state=f_state, f_input=f_input, delta=delta)


def hour_discretization(
    plant: CompoundPlant,
    samples_per_hour: int = SAMPLES_PER_HOUR,
    hour_seconds: float = SECONDS_PER_HOUR,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Zero-order-hold pair over one sample delta = hour_seconds / samples_per_hour

    Returns:
        Tuple of (A_d, B_d)
    """
    zoh = _sample_integrals(plant, samples_per_hour, hour_seconds)
    return zoh.a_d, zoh.b_d


def _sample_integrals(plant: CompoundPlant, samples_per_hour: int, hour_seconds: float) -> ZohIntegrals:
    if int(samples_per_hour) < 1:
        raise DiscretizationError(f"samples_per_hour must be >= 1, got {samples_per_hour}")
    return zoh_integrals(plant.a, plant.b, hour_seconds / int(samples_per_hour))


def output_map(plant: CompoundPlant, hour_seconds: float = SECONDS_PER_HOUR) -> np.ndarray:
    """C~ scaled to hourly energy in W h with the ILC sign convention"""
    return ENERGY_SIGN * plant.c_tilde / hour_seconds


@dataclass(frozen=True)
class HourPropagators:
    """
    One-hour building blocks of the lifted model

    diag_block: P^{hh}; generator: G, the state at the end of an hour driven by a unit
    input integrated over the following hour; hour_integral: H = int_0^Delta e^{A t} dt;
    phi: e^{A Delta}; input_to_state: state after one hour of unit input from rest.
    """
    diag_block: np.ndarray
    generator: np.ndarray
    hour_integral: np.ndarray
    phi: np.ndarray
    input_to_state: np.ndarray
    c_out: np.ndarray


def hour_propagators(
    plant: CompoundPlant,
    samples_per_hour: int = SAMPLES_PER_HOUR,
    hour_seconds: float = SECONDS_PER_HOUR,
) -> HourPropagators:
    zoh = _sample_integrals(plant, samples_per_hour, hour_seconds)
    n, m = plant.b.shape

    x_resp = np.zeros((n, m))
    s_resp = np.zeros((n, m))
    hour_integral = np.zeros((n, n))
    a_pow = np.eye(n)
    for _ in range(int(samples_per_hour)):
        s_resp += zoh.f_state @ x_resp + zoh.f_input
        x_resp = zoh.a_d @ x_resp + zoh.b_d
        hour_integral += zoh.f_state @ a_pow
        a_pow = zoh.a_d @ a_pow

    c_out = output_map(plant, hour_seconds)
    return HourPropagators(
        diag_block=c_out @ s_resp,
        generator=hour_integral @ x_resp,
        hour_integral=hour_integral,
        phi=a_pow,
        input_to_state=x_resp,
        c_out=c_out,
    )


@dataclass(frozen=True)
class LiftedSystem:
    """Block-lower-triangular P, free response z and the block-Toeplitz first column"""
    p: np.ndarray
    z: np.ndarray
    markov_blocks: Tuple[np.ndarray, ...]
    n_nodes: int
    n_hours: int = HOURS_PER_CYCLE
    samples_per_hour: int = SAMPLES_PER_HOUR
    hour_seconds: float = SECONDS_PER_HOUR

    def block(self, h: int, h_prev: int) -> np.ndarray:
        """P^{h h'} with 0-based hour indices"""
        n = self.n_nodes
        return self.p[h * n:(h + 1) * n, h_prev * n:(h_prev + 1) * n]

    @property
    def size(self) -> int:
        return self.n_hours * self.n_nodes


def build_p_matrix(
    plant: CompoundPlant,
    samples_per_hour: int = SAMPLES_PER_HOUR,
    hour_seconds: float = SECONDS_PER_HOUR,
    x0=None,
    n_hours: int = HOURS_PER_CYCLE,
) -> LiftedSystem:
    """
    Assemble the lifted plant over one cycle

    Diagonal blocks come from the sample-wise double sum; the block below the diagonal
    at distance k is c_out Phi^{k-1} G. Upper blocks are never computed.

    Args:
        plant: Linear compound plant
        samples_per_hour: ZOH samples per hour
        hour_seconds: Length of one hour in seconds
        x0: Initial state for the free response (defaults to the origin)
        n_hours: Hours per cycle

    Returns:
        LiftedSystem with z for x0
    """
    n = plant.n_nodes
    props = hour_propagators(plant, samples_per_hour, hour_seconds)

    markov = [props.diag_block]
    phi_pow = np.eye(props.phi.shape[0])
    for _ in range(1, n_hours):
        markov.append(props.c_out @ phi_pow @ props.generator)
        phi_pow = props.phi @ phi_pow

    p = np.zeros((n_hours * n, n_hours * n))
    for h in range(n_hours):
        for h_prev in range(h + 1):
            p[h * n:(h + 1) * n, h_prev * n:(h_prev + 1) * n] = markov[h - h_prev]

    if x0 is None:
        z = np.zeros(n_hours * n)
    else:
        z = _free_response(props, x0, n_hours)

    ratio = np.linalg.norm(markov[1]) / max(np.linalg.norm(markov[0]), 1e-300) if n_hours > 1 else 0.0
    logger.info(
        "Lifted plant assembled",
        size=p.shape[0],
        samples_per_hour=int(samples_per_hour),
        offdiag_ratio=float(ratio),
    )
    return LiftedSystem(
        p=p, z=z, markov_blocks=tuple(markov), n_nodes=n, n_hours=n_hours,
        samples_per_hour=int(samples_per_hour), hour_seconds=float(hour_seconds),
    )


def _free_response(props: HourPropagators, x0, n_hours: int) -> np.ndarray:
    x = np.asarray(x0, dtype=float).reshape(-1)
    if x.shape[0] != props.phi.shape[0] or not np.all(np.isfinite(x)):
        raise DimensionError(f"x0 must be a finite vector of length {props.phi.shape[0]}")
    blocks = []
    for _ in range(n_hours):
        blocks.append(props.c_out @ props.hour_integral @ x)
        x = props.phi @ x
    return np.concatenate(blocks)


def free_response(
    plant: CompoundPlant,
    x0,
    samples_per_hour: int = SAMPLES_PER_HOUR,
    hour_seconds: float = SECONDS_PER_HOUR,
    n_hours: int = HOURS_PER_CYCLE,
) -> np.ndarray:
    """Hourly integrals of the unforced output from x0, stacked to length n_hours * N"""
    return _free_response(hour_propagators(plant, samples_per_hour, hour_seconds), x0, n_hours)


def q_hour_matrix(
    cutoff: float = Q_CUTOFF,
    order: int = Q_ORDER,
    n_hours: int = HOURS_PER_CYCLE,
) -> np.ndarray:
    """
    Zero-phase Butterworth low-pass over the hour index as an n_hours x n_hours matrix

    Column j is the forward-backward filtered unit impulse at hour j. The edge
    conditions follow Gustafsson's method, so constants pass unchanged and the
    matrix tends to the identity as the cutoff approaches Nyquist. Entries below
    Q_ZERO_TOL are set to zero.
    """
    if not 0.0 < float(cutoff) < 1.0:
        raise FilterDesignError(f"cutoff must lie in (0, 1), got {cutoff}")
    if int(order) < 1:
        raise FilterDesignError(f"order must be >= 1, got {order}")

    b, a = butter(int(order), float(cutoff))
    if np.any(np.abs(np.roots(a)) >= 1.0):
        raise FilterDesignError(f"unstable Butterworth design for order={order}, cutoff={cutoff}")

    q_h = filtfilt(b, a, np.eye(n_hours), axis=0, method="gust")
    q_h[np.abs(q_h) < Q_ZERO_TOL] = 0.0
    return q_h


def build_q_filter(
    n_nodes: int,
    cutoff: float = Q_CUTOFF,
    order: int = Q_ORDER,
    n_hours: int = HOURS_PER_CYCLE,
) -> np.ndarray:
    """Lifted Q = Q_h kron I_N"""
    return np.kron(q_hour_matrix(cutoff, order, n_hours), np.eye(n_nodes))


@dataclass(frozen=True)
class LiftedFilters:
    q: np.ndarray
    l: np.ndarray
    kappa: float
    q_hour: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.q.shape[0] // self.q_hour.shape[0]


def build_filters(
    n_nodes: int,
    kappa: float,
    cutoff: float = Q_CUTOFF,
    order: int = Q_ORDER,
    n_hours: int = HOURS_PER_CYCLE,
) -> LiftedFilters:
    q_hour = q_hour_matrix(cutoff, order, n_hours)
    size = n_hours * n_nodes
    return LiftedFilters(
        q=np.kron(q_hour, np.eye(n_nodes)),
        l=float(kappa) * np.eye(size),
        kappa=float(kappa),
        q_hour=q_hour,
    )


def with_kappa(filters: LiftedFilters, kappa: float) -> LiftedFilters:
    return LiftedFilters(q=filters.q, l=float(kappa) * np.eye(filters.q.shape[0]),
                         kappa=float(kappa), q_hour=filters.q_hour)


def upper_bandwidth(q_hour: np.ndarray, rel_tol: float = 0.0) -> int:
    """Largest j - i with |Q_h[i, j]| > rel_tol * max|Q_h|"""
    q_hour = np.asarray(q_hour)
    threshold = rel_tol * np.abs(q_hour).max()
    rows, cols = np.nonzero(np.abs(q_hour) > threshold)
    offsets = cols - rows
    return int(max(offsets.max(), 0)) if offsets.size else 0
