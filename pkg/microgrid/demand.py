"""
Net power demand per node: synthetic periodic-plus-noise curves and standard-load-profile traces

All values are per unit [W/W]. Traces are piecewise linear between breakpoints and
deterministic for a given seed.
"""
import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.integrate import trapezoid

from utils.constants import (
    SECONDS_PER_DAY, HOURS_PER_CYCLE, MINUTES_PER_DAY, PROFILE_NAMES, PROFILE_MIXED,
    DAY_TYPES, PROFILE_NORM_POWER, PROFILE_RATED_POWER, PROFILE_NOISE_FRACTION,
    MAX_NOISE_FRACTION, KAPPA_STUDY_PEAK_RANGE, KAPPA_STUDY_FLUCTUATION_RANGES,
    PROFILE_DIR,
)
from utils.errors import DemandError
from utils.logger import get_logger

logger = get_logger("Demand")

StepSchedule = Sequence[Tuple[int, Sequence[float]]]


@dataclass(frozen=True)
class SyntheticDemandSpec:
    """
    Periodic baseline H_j sin^2(pi t / T_d) plus hourly Gaussian fluctuation G_j eta

    step_schedule holds (day index, per-node multiplier on H_j); the latest entry
    whose day index is <= the current day applies, from that midnight on.
    """
    amplitudes: Tuple[float, ...]
    fluctuation: Tuple[float, ...]
    period: float = SECONDS_PER_DAY
    rng_seed: int = 0
    step_schedule: Tuple[Tuple[int, Tuple[float, ...]], ...] = ()

    def __post_init__(self):
        amplitudes = tuple(float(v) for v in self.amplitudes)
        fluctuation = tuple(float(v) for v in self.fluctuation)
        if len(amplitudes) != len(fluctuation):
            raise DemandError("amplitudes and fluctuation must have one entry per node")
        if any(v < 0 for v in amplitudes) or any(v < 0 for v in fluctuation):
            raise DemandError("H_j and G_j must be nonnegative")
        if not self.period > 0:
            raise DemandError(f"period must be positive, got {self.period}")

        schedule = []
        for day, multipliers in sorted(self.step_schedule, key=lambda item: item[0]):
            multipliers = tuple(float(m) for m in multipliers)
            if len(multipliers) != len(amplitudes):
                raise DemandError(
                    f"step at day {day} has {len(multipliers)} multipliers for {len(amplitudes)} nodes"
                )
            if int(day) < 0 or any(m < 0 for m in multipliers):
                raise DemandError("step days and multipliers must be nonnegative")
            schedule.append((int(day), multipliers))

        object.__setattr__(self, "amplitudes", amplitudes)
        object.__setattr__(self, "fluctuation", fluctuation)
        object.__setattr__(self, "step_schedule", tuple(schedule))

    @property
    def n_nodes(self) -> int:
        return len(self.amplitudes)

    def multiplier(self, day: int) -> np.ndarray:
        active = np.ones(self.n_nodes)
        for step_day, multipliers in self.step_schedule:
            if step_day <= day:
                active = np.asarray(multipliers)
        return active


@dataclass(frozen=True)
class LoadProfileSpec:
    """
    Standard-load-profile assignment per node

    Attributes:
        profiles: One of H0 | G1 | G4 | mixed per node
        calendar: Day type per simulated day (weekday | saturday | sunday)
        norm_power: Power the profile peak maps to [W]
        rated_power: Per-unit base [W]
        noise_fraction: Uniform minute-wise noise amplitude, in [0, 0.1]
    """
    profiles: Tuple[str, ...]
    calendar: Tuple[str, ...]
    norm_power: float = PROFILE_NORM_POWER
    rated_power: float = PROFILE_RATED_POWER
    noise_fraction: float = PROFILE_NOISE_FRACTION
    rng_seed: int = 0
    period: float = SECONDS_PER_DAY

    def __post_init__(self):
        object.__setattr__(self, "profiles", tuple(self.profiles))
        object.__setattr__(self, "calendar", tuple(self.calendar))
        if not 0.0 <= self.noise_fraction <= MAX_NOISE_FRACTION:
            raise DemandError(f"noise_fraction must lie in [0, {MAX_NOISE_FRACTION}]")
        valid = set(PROFILE_NAMES) | {PROFILE_MIXED}
        unknown = [p for p in self.profiles if p not in valid]
        if unknown:
            raise DemandError(f"unknown load profiles {unknown}; expected one of {sorted(valid)}")
        bad_days = [d for d in self.calendar if d not in DAY_TYPES]
        if bad_days:
            raise DemandError(f"unknown day types {sorted(set(bad_days))}")
        if self.norm_power <= 0 or self.rated_power <= 0 or self.period <= 0:
            raise DemandError("norm_power, rated_power and period must be positive")

    @property
    def n_nodes(self) -> int:
        return len(self.profiles)


@dataclass(frozen=True)
class DemandTrace:
    """
    Piecewise-linear demand P^d(t) = P^p(t) + P^f(t) per node

    times has shape (K,); values and periodic_values have shape (K, N). Outside
    [times[0], times[-1]] the end values are held.
    """
    times: np.ndarray
    values: np.ndarray
    periodic_values: np.ndarray
    period: float = SECONDS_PER_DAY
    meta: Dict[str, object] = field(default_factory=dict)

    def __post_init__(self):
        for name in ("times", "values", "periodic_values"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.values.shape != self.periodic_values.shape or self.values.shape[0] != self.times.size:
            raise DemandError("trace arrays have inconsistent shapes")
        if np.any(np.diff(self.times) <= 0):
            raise DemandError("trace breakpoints must be strictly increasing")

    @property
    def n_nodes(self) -> int:
        return self.values.shape[1]

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    @property
    def breakpoints(self) -> np.ndarray:
        return self.times

    def _interp(self, table: np.ndarray, t):
        t_arr = np.clip(np.asarray(t, dtype=float), self.times[0], self.times[-1])
        scalar = t_arr.ndim == 0
        t_arr = np.atleast_1d(t_arr)
        idx = np.clip(np.searchsorted(self.times, t_arr, side="right") - 1, 0, self.times.size - 2)
        t0 = self.times[idx]
        t1 = self.times[idx + 1]
        w = ((t_arr - t0) / (t1 - t0))[:, None]
        out = (1.0 - w) * table[idx] + w * table[idx + 1]
        return out[0] if scalar else out

    def __call__(self, t):
        """Evaluate P^d at a time or an array of times"""
        return self._interp(self.values, t)

    def periodic(self, t):
        return self._interp(self.periodic_values, t)

    def fluctuating(self, t):
        return self(t) - self.periodic(t)

    def segment_points(self, t0: float, t1: float) -> np.ndarray:
        """Breakpoints strictly inside (t0, t1) with both endpoints added"""
        inner = self.times[(self.times > t0) & (self.times < t1)]
        return np.concatenate(([t0], inner, [t1]))

    def hourly_mean(self, t0: float, t1: float) -> np.ndarray:
        """Exact mean of the piecewise-linear trace over [t0, t1] per node"""
        points = self.segment_points(t0, t1)
        return trapezoid(self(points), points, axis=0) / (t1 - t0)


def synthetic_periodic(spec: SyntheticDemandSpec, t) -> np.ndarray:
    """
    Periodic baseline H_j sin^2(pi t / T_d), scaled by the step multiplier of the day containing t

    Args:
        spec: Synthetic demand parameters
        t: Time in seconds (t >= 0)

    Returns:
        Vector of length N
    """
    t = float(t)
    day = int(np.floor(t / spec.period))
    base = np.asarray(spec.amplitudes) * np.sin(np.pi * t / spec.period) ** 2
    return base * spec.multiplier(day)


def synthetic_trace(spec: SyntheticDemandSpec, horizon_days: int) -> DemandTrace:
    """
    Hourly samples P^p + G_j eta_{j,h}, linearly interpolated

    eta is drawn i.i.d. standard normal per node and hour from default_rng(rng_seed);
    rows are drawn in time order so a longer horizon extends a shorter one.
    """
    if horizon_days < 1:
        raise DemandError(f"horizon must be at least one day, got {horizon_days}")

    n_samples = HOURS_PER_CYCLE * horizon_days + 1
    hour = spec.period / HOURS_PER_CYCLE
    times = np.arange(n_samples) * hour
    periodic = np.vstack([synthetic_periodic(spec, t) for t in times])

    rng = np.random.default_rng(spec.rng_seed)
    eta = rng.standard_normal((n_samples, spec.n_nodes))
    values = periodic + eta * np.asarray(spec.fluctuation)

    logger.debug("Synthetic trace built", days=horizon_days, n_nodes=spec.n_nodes, seed=spec.rng_seed)
    return DemandTrace(
        times=times, values=values, periodic_values=periodic, period=spec.period,
        meta={"kind": "synthetic", "seed": spec.rng_seed},
    )


def constant_trace(levels: Sequence[float], horizon_days: int, period: float = SECONDS_PER_DAY) -> DemandTrace:
    """Constant demand per node, with hourly breakpoints"""
    if horizon_days < 1:
        raise DemandError(f"horizon must be at least one day, got {horizon_days}")
    levels = np.asarray(levels, dtype=float).reshape(1, -1)
    times = np.arange(HOURS_PER_CYCLE * horizon_days + 1) * (period / HOURS_PER_CYCLE)
    values = np.repeat(levels, times.size, axis=0)
    return DemandTrace(times=times, values=values, periodic_values=values, period=period,
                       meta={"kind": "constant"})


def weekly_calendar(n_days: int, start_weekday: int = 0) -> List[str]:
    """Day types for n_days consecutive days; start_weekday 0 is Monday"""
    calendar = []
    for day in range(n_days):
        weekday = (start_weekday + day) % 7
        if weekday == 5:
            calendar.append("saturday")
        elif weekday == 6:
            calendar.append("sunday")
        else:
            calendar.append("weekday")
    return calendar


def load_profile_tables(directory: Optional[str] = None) -> Tuple[Optional[Dict[str, pd.DataFrame]], Optional[str]]:
    """
    Read H0/G1/G4 minute tables from <directory>/<name lower>.csv

    Returns:
        Tuple of (tables by profile name, error message)
    """
    directory = directory or PROFILE_DIR
    tables: Dict[str, pd.DataFrame] = {}
    for name in PROFILE_NAMES:
        path = os.path.join(directory, f"{name.lower()}.csv")
        if not os.path.exists(path):
            return None, f"Missing profile table for {name}: {path}"
        try:
            frame = pd.read_csv(path)
        except (OSError, ValueError) as e:
            return None, f"Failed to read {path}: {str(e)}"

        expected = ["minute", *DAY_TYPES]
        if list(frame.columns) != expected:
            return None, f"{path} must have header {','.join(expected)}, got {','.join(frame.columns)}"
        if len(frame) != MINUTES_PER_DAY or not np.array_equal(frame["minute"].to_numpy(), np.arange(MINUTES_PER_DAY)):
            return None, f"{path} must hold minutes 0..{MINUTES_PER_DAY - 1}"
        tables[name] = frame.set_index("minute").astype(float)

    logger.debug("Profile tables loaded", directory=directory)
    return tables, None


def _normalized_profiles(tables: Dict[str, pd.DataFrame], spec: LoadProfileSpec) -> Dict[str, pd.DataFrame]:
    raw = dict(tables)
    raw[PROFILE_MIXED] = sum(tables[name] for name in PROFILE_NAMES) / len(PROFILE_NAMES)
    scale = spec.norm_power / spec.rated_power
    normalized = {}
    for name, frame in raw.items():
        peak = float(frame.to_numpy().max())
        if peak <= 0:
            raise DemandError(f"profile {name} has no positive values")
        normalized[name] = frame * (scale / peak)
    return normalized


def load_profile_trace(
    spec: LoadProfileSpec,
    horizon_days: int,
    tables: Optional[Dict[str, pd.DataFrame]] = None,
) -> DemandTrace:
    """
    Minute-resolution trace from standard load profiles with uniform multiplicative noise

    Each node follows its profile for the calendar's day type, normalized so the
    profile's peak over all day types equals norm_power / rated_power, then
    multiplied by (1 + noise_fraction * xi) with xi ~ U(-1, 1) per minute and node.
    """
    if horizon_days < 1:
        raise DemandError(f"horizon must be at least one day, got {horizon_days}")
    if len(spec.calendar) < horizon_days:
        raise DemandError(
            f"calendar covers {len(spec.calendar)} days, horizon needs {horizon_days}"
        )
    if tables is None:
        tables, error = load_profile_tables()
        if error:
            raise DemandError(error)
    missing = [name for name in PROFILE_NAMES if name not in tables]
    if missing:
        raise DemandError(f"missing profile tables: {missing}")

    profiles = _normalized_profiles(tables, spec)

    day_rows = []
    for day in range(horizon_days):
        day_type = spec.calendar[day]
        day_rows.append(np.column_stack([profiles[p][day_type].to_numpy() for p in spec.profiles]))
    # closing breakpoint at the end of the horizon: first minute of the following day type
    closing_type = spec.calendar[min(horizon_days, len(spec.calendar) - 1)]
    day_rows.append(np.array([[profiles[p][closing_type].iloc[0] for p in spec.profiles]]))
    periodic = np.vstack(day_rows)

    minute = spec.period / MINUTES_PER_DAY
    times = np.arange(periodic.shape[0]) * minute

    rng = np.random.default_rng(spec.rng_seed)
    xi = rng.uniform(-1.0, 1.0, size=periodic.shape)
    values = periodic * (1.0 + spec.noise_fraction * xi)

    logger.debug("Load profile trace built", days=horizon_days, profiles=list(spec.profiles))
    return DemandTrace(
        times=times, values=values, periodic_values=periodic, period=spec.period,
        meta={"kind": "profiles", "seed": spec.rng_seed},
    )


def kappa_study_spec(n_nodes: int, seed: int, period: float = SECONDS_PER_DAY) -> SyntheticDemandSpec:
    """
    Demand for the learning-gain comparison

    H_j ~ U(0.6, 0.9); G_j ~ U(0, 0.4) on the first half of the nodes and U(0, 0.1)
    on the rest. Parameters come from a generator separate from the noise stream.
    """
    rng = np.random.default_rng([seed, 1])
    amplitudes = rng.uniform(*KAPPA_STUDY_PEAK_RANGE, size=n_nodes)
    n_high = (n_nodes + 1) // 2
    high, low = KAPPA_STUDY_FLUCTUATION_RANGES
    fluctuation = np.concatenate([
        rng.uniform(*high, size=n_high),
        rng.uniform(*low, size=n_nodes - n_high),
    ])
    return SyntheticDemandSpec(
        amplitudes=tuple(amplitudes), fluctuation=tuple(fluctuation), period=period, rng_seed=seed,
    )
