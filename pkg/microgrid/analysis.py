"""
Convergence certificates for the learning dynamics, the learning-gain sweep and
post-processing of simulated cycles
"""
import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.linalg import solve_triangular

from microgrid.lifted import LiftedFilters, LiftedSystem
from microgrid.plant_sim import CycleResult
from utils.constants import (
    AS_MARGIN, SINGULAR_COND_LIMIT, MAX_WORKERS, FREQUENCY_BOUND_HZ,
    RECOVERY_THRESHOLD, RECOVERY_CYCLES, WEEKLY_LAG, DESIGN_COLUMNS, SUMMARY_COLUMNS,
)
from utils.errors import DimensionError, NumericalError, SingularBlockError
from utils.logger import get_logger

logger = get_logger("Analysis")


def _check_dims(lifted: LiftedSystem, filters: LiftedFilters):
    size = lifted.p.shape[0]
    if filters.q.shape != (size, size) or filters.l.shape != (size, size):
        raise DimensionError(f"Q and L must be {size}x{size}, got {filters.q.shape} and {filters.l.shape}")


def _check_invertible(lifted: LiftedSystem):
    for h in range(lifted.n_hours):
        block = lifted.block(h, h)
        cond = np.linalg.cond(block)
        if not np.isfinite(cond) or cond > SINGULAR_COND_LIMIT:
            raise SingularBlockError(f"diagonal block {h + 1} of P is singular (cond={cond:.3g})")


def _p_inverse(lifted: LiftedSystem) -> np.ndarray:
    _check_invertible(lifted)
    size = lifted.p.shape[0]
    return solve_triangular(lifted.p, np.eye(size), lower=True)


def spectral_radius(matrix: np.ndarray) -> float:
    try:
        return float(np.max(np.abs(np.linalg.eigvals(matrix))))
    except np.linalg.LinAlgError as e:
        raise NumericalError(f"eigenvalue computation failed: {str(e)}") from e


def max_singular_value(matrix: np.ndarray) -> float:
    try:
        return float(np.linalg.svd(matrix, compute_uv=False)[0])
    except np.linalg.LinAlgError as e:
        raise NumericalError(f"SVD failed: {str(e)}") from e


def iteration_matrix(lifted: LiftedSystem, filters: LiftedFilters) -> np.ndarray:
    """Q (I - P L)"""
    _check_dims(lifted, filters)
    return filters.q @ (np.eye(lifted.size) - lifted.p @ filters.l)


def asymptotic_stability(lifted: LiftedSystem, filters: LiftedFilters) -> float:
    """Spectral radius of Q (I - P L); the iteration is asymptotically stable iff it is < 1"""
    return spectral_radius(iteration_matrix(lifted, filters))


def error_transition_matrix(lifted: LiftedSystem, filters: LiftedFilters) -> np.ndarray:
    """P Q P^-1 (I - P L), the map of e^c - e^inf to e^{c+1} - e^inf"""
    _check_dims(lifted, filters)
    _check_invertible(lifted)
    eye = np.eye(lifted.size)
    p_inv_term = solve_triangular(lifted.p, eye - lifted.p @ filters.l, lower=True)
    return lifted.p @ filters.q @ p_inv_term


def monotonic_convergence(lifted: LiftedSystem, filters: LiftedFilters) -> float:
    """Largest singular value of P Q P^-1 (I - P L); monotone convergence holds if it is < 1"""
    return max_singular_value(error_transition_matrix(lifted, filters))


@dataclass(frozen=True)
class ConvergenceReport:
    kappas: np.ndarray
    rho: np.ndarray
    sigma_max: np.ndarray

    @property
    def as_flags(self) -> np.ndarray:
        return self.rho < 1.0 - AS_MARGIN

    @property
    def mc_flags(self) -> np.ndarray:
        return self.sigma_max < 1.0

    @property
    def argmin_kappa(self) -> float:
        """Fastest learning gain (smallest spectral radius)"""
        return float(self.kappas[int(np.argmin(self.rho))])

    @property
    def min_rho(self) -> float:
        return float(self.rho.min())

    @property
    def mc_window(self) -> Optional[Tuple[float, float]]:
        """Smallest and largest grid gain with monotone convergence"""
        certified = self.kappas[self.mc_flags]
        if certified.size == 0:
            return None
        return float(certified.min()), float(certified.max())

    def rate(self, kappa: float) -> Optional[float]:
        """Convergence rate sigma_max at the grid point nearest to kappa, if MC holds there"""
        idx = int(np.argmin(np.abs(self.kappas - kappa)))
        return float(self.sigma_max[idx]) if self.mc_flags[idx] else None

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "kappa": self.kappas,
            "rho": self.rho,
            "sigma_max": self.sigma_max,
            "as": self.as_flags.astype(int),
            "mc": self.mc_flags.astype(int),
        })[DESIGN_COLUMNS]


def kappa_sweep(
    lifted: LiftedSystem,
    q,
    kappa_grid: Sequence[float],
    max_workers: int = MAX_WORKERS,
) -> ConvergenceReport:
    """
    Evaluate both certificates for every learning gain on the grid

    With L = kappa I: Q (I - P L) = Q - kappa Q P and
    P Q P^-1 (I - P L) = P Q P^-1 - kappa P Q, so P^-1 is formed once.

    Args:
        lifted: Lifted plant
        q: Lifted Q matrix or LiftedFilters
        kappa_grid: Learning gains [1/h]
        max_workers: Thread pool size

    Returns:
        ConvergenceReport in grid order
    """
    kappas = np.asarray(kappa_grid, dtype=float)
    if kappas.size == 0:
        raise ValueError("kappa grid must not be empty")
    q = q.q if isinstance(q, LiftedFilters) else np.asarray(q, dtype=float)
    if q.shape != lifted.p.shape:
        raise DimensionError(f"Q must be {lifted.p.shape}, got {q.shape}")

    p = lifted.p
    p_inv = _p_inverse(lifted)
    qp = q @ p
    pq = p @ q
    pqp_inv = pq @ p_inv

    def evaluate(kappa: float) -> Tuple[float, float]:
        return spectral_radius(q - kappa * qp), max_singular_value(pqp_inv - kappa * pq)

    with ThreadPoolExecutor(max_workers=max(1, int(max_workers))) as pool:
        values = list(pool.map(evaluate, kappas))

    report = ConvergenceReport(
        kappas=kappas,
        rho=np.array([v[0] for v in values]),
        sigma_max=np.array([v[1] for v in values]),
    )
    logger.info(
        "Kappa sweep finished",
        points=int(kappas.size),
        argmin_kappa=report.argmin_kappa,
        min_rho=report.min_rho,
        mc_window=report.mc_window,
    )
    if report.mc_window is None:
        logger.warning_flag("not_monotonically_convergent", points=int(kappas.size))
    return report


def kappa_grid(start: float, stop: float, points: int) -> np.ndarray:
    return np.linspace(start, stop, int(points))


def asymptotic_input(lifted: LiftedSystem, filters: LiftedFilters) -> Tuple[np.ndarray, np.ndarray]:
    """
    Fixed point of the lifted iteration

    u_inf solves (I - Q (I - L P)) u = -Q L z; e_inf = -(P u_inf + z).
    """
    _check_dims(lifted, filters)
    eye = np.eye(lifted.size)
    lhs = eye - filters.q @ (eye - filters.l @ lifted.p)
    rhs = -filters.q @ filters.l @ lifted.z
    if np.linalg.cond(lhs) > SINGULAR_COND_LIMIT:
        raise SingularBlockError("the lifted iteration has no unique fixed point (rho = 1)")
    u_inf = np.linalg.solve(lhs, rhs)
    return u_inf, -(lifted.p @ u_inf + lifted.z)


@dataclass(frozen=True)
class LinearRun:
    """Inputs and errors per cycle, shapes (n_cycles + 1, 24 N)"""
    inputs: np.ndarray
    errors: np.ndarray

    @property
    def error_norms(self) -> np.ndarray:
        return np.linalg.norm(self.errors, axis=1)


def linear_iteration(
    lifted: LiftedSystem,
    filters: LiftedFilters,
    u0: Optional[np.ndarray] = None,
    n_cycles: int = 20,
    z: Optional[np.ndarray] = None,
) -> LinearRun:
    """Iterate u^{c+1} = Q (u^c - L y^c) on y = P u + z with e^c = -y^c"""
    _check_dims(lifted, filters)
    z = lifted.z if z is None else np.asarray(z, dtype=float)
    u = np.zeros(lifted.size) if u0 is None else np.asarray(u0, dtype=float).copy()
    inputs, errors = [u], [-(lifted.p @ u + z)]
    for _ in range(n_cycles):
        y = lifted.p @ u + z
        u = filters.q @ (u - filters.l @ y)
        inputs.append(u)
        errors.append(-(lifted.p @ u + z))
    return LinearRun(inputs=np.array(inputs), errors=np.array(errors))


def operator_norm_estimate(
    matrix: np.ndarray,
    n_samples: int = 10_000,
    power_steps: int = 10,
    seed: int = 0,
) -> float:
    """
    Randomized lower bound on the induced 2-norm

    Random unit vectors are refined by power iteration on M^T M; the largest
    ||M x|| / ||x|| seen is returned.
    """
    matrix = np.asarray(matrix, dtype=float)
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((matrix.shape[1], n_samples))
    x /= np.linalg.norm(x, axis=0)
    best = float(np.max(np.linalg.norm(matrix @ x, axis=0)))
    gram = matrix.T @ matrix
    for _ in range(power_steps):
        x = gram @ x
        norms = np.linalg.norm(x, axis=0)
        x = x / np.where(norms > 0, norms, 1.0)
        best = max(best, float(np.max(np.linalg.norm(matrix @ x, axis=0))))
    return best


def error_norms(results: List[CycleResult]) -> np.ndarray:
    """||e^c||_2 = ||y^c||_2 of the stacked hourly outputs, per cycle"""
    return np.array([np.linalg.norm(r.y_stacked) for r in results])


def control_energy_ratio(results: List[CycleResult]) -> np.ndarray:
    """sum_h ||y^{c,h}||_2 / sum_h ||u^{c,h}||_2 per cycle (nan while u is zero)"""
    num = np.array([np.linalg.norm(r.y, axis=1).sum() for r in results])
    den = np.array([np.linalg.norm(r.u, axis=1).sum() for r in results])
    return np.divide(num, den, out=np.full_like(num, np.nan), where=den > 0)


def cycle_energy(results: List[CycleResult]) -> np.ndarray:
    """
    Node-summed hourly low-level energy sum_h |sum_j y_j^{c,h}| per cycle

    Opposite node outputs within an hour cancel; only the net energy the fast
    controllers supply to the grid counts.
    """
    return np.array([np.abs(r.y.sum(axis=1)).sum() for r in results])


def cycle_summary(results: List[CycleResult]) -> pd.DataFrame:
    """Per cycle: node sums of the hour-averaged demand, output and input"""
    return pd.DataFrame({
        "cycle": [r.cycle for r in results],
        "sum_demand": [float(r.demand_mean.mean(axis=0).sum()) for r in results],
        "sum_y": [float(r.y.mean(axis=0).sum()) for r in results],
        "sum_u": [float(r.u.mean(axis=0).sum()) for r in results],
    }, columns=SUMMARY_COLUMNS)


def frequency_objective(
    results: List[CycleResult], bound_hz: float = FREQUENCY_BOUND_HZ
) -> Tuple[np.ndarray, bool]:
    """Per-cycle max |omega| / (2 pi) in Hz and whether every cycle stays within the bound"""
    peaks = np.array([float(r.max_abs_freq_hz.max()) for r in results])
    return peaks, bool(np.all(peaks <= bound_hz))


def step_recovery(
    results: List[CycleResult],
    step_cycles: Sequence[int],
    within: int = RECOVERY_CYCLES,
    threshold: float = RECOVERY_THRESHOLD,
) -> List[Dict[str, object]]:
    """
    For each step, whether the node-summed hourly energy (cycle_energy) drops below
    threshold times its post-step value within the given number of cycles
    """
    energy = {r.cycle: e for r, e in zip(results, cycle_energy(results))}
    outcomes = []
    for step in step_cycles:
        if step not in energy:
            continue
        post = energy[step]
        later = [(c, energy[c]) for c in range(step + 1, step + within + 1) if c in energy]
        hit = next((c for c, e in later if e < threshold * post), None)
        outcomes.append({
            "step_cycle": int(step),
            "post_step_energy": float(post),
            "recovered_cycle": hit,
            "recovered": hit is not None,
        })
    return outcomes


def energy_to_demand_ratio(results: List[CycleResult]) -> np.ndarray:
    """|sum_y| / |sum_demand| per cycle, both node-summed and hour-averaged"""
    summary = cycle_summary(results)
    sum_y = summary["sum_y"].abs().to_numpy()
    sum_d = summary["sum_demand"].abs().to_numpy()
    return np.divide(sum_y, sum_d, out=np.full_like(sum_y, np.nan), where=sum_d > 0)


def weekly_periodicity(series: Sequence[float], lag: int = WEEKLY_LAG) -> Tuple[float, bool]:
    """
    Normalized autocorrelation at the lag and whether it is the largest among lags 2..len/2
    """
    x = np.asarray(series, dtype=float)
    x = x - x.mean()
    denom = float(np.dot(x, x))
    max_lag = x.size // 2
    if denom == 0 or lag > max_lag:
        return 0.0, False
    acf = {k: float(np.dot(x[:-k], x[k:]) / denom) for k in range(2, max_lag + 1)}
    return acf[lag], max(acf, key=acf.get) == lag
