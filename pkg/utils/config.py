"""
Scenario configuration: a JSON document validated by pydantic models

An empty document yields the four-node benchmark grid with synthetic demand.
"""
import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import json
from fractions import Fraction
from typing import Any, Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from microgrid.grid_model import GridParams, fully_connected, benchmark_params
from microgrid.plant_sim import SolverConfig
from utils.constants import (
    BENCHMARK_N_NODES, BENCHMARK_COUPLING, SAMPLES_PER_HOUR, Q_CUTOFF, Q_ORDER, DEFAULT_KAPPA,
    KAPPA_GRID, KAPPA_STUDY_SET, SOLVER_METHOD, SOLVER_RTOL, SOLVER_ATOL, DEFAULT_OUT_DIR,
    MAX_WORKERS, SYNTHETIC_FLUCTUATION, PROFILE_NAMES, PROFILE_MIXED, PROFILE_NORM_POWER,
    PROFILE_RATED_POWER, PROFILE_NOISE_FRACTION, MAX_NOISE_FRACTION, DEFAULT_STEP_SCHEDULE,
    SECONDS_PER_HOUR, HOURS_PER_CYCLE, SCENARIO_CYCLES,
)
from utils.errors import ConfigError
from utils.logger import get_logger

logger = get_logger("Config")

ProfileName = Literal["H0", "G1", "G4", "mixed"]


class _Block(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GridConfig(_Block):
    """Per-node constants default to the benchmark table, cycled when n_nodes != 4"""
    n_nodes: int = Field(default=BENCHMARK_N_NODES, ge=1)
    inertia: Optional[List[float]] = None
    kp: Optional[List[float]] = None
    ki: Optional[List[float]] = None
    t_li: Optional[List[float]] = None
    coupling: Optional[List[List[float]]] = None
    coupling_weight: float = Field(default=BENCHMARK_COUPLING, ge=0.0)

    @model_validator(mode="after")
    def _check_lengths(self):
        for name in ("inertia", "kp", "ki", "t_li"):
            values = getattr(self, name)
            if values is not None and len(values) != self.n_nodes:
                raise ValueError(f"{name} has {len(values)} entries for n_nodes={self.n_nodes}")
        if self.coupling is not None:
            if len(self.coupling) != self.n_nodes or any(len(row) != self.n_nodes for row in self.coupling):
                raise ValueError(f"coupling must be a {self.n_nodes}x{self.n_nodes} matrix")
        return self

    def to_params(self) -> GridParams:
        n = self.n_nodes
        coupling = fully_connected(n, self.coupling_weight) if self.coupling is None else np.array(self.coupling)
        base = benchmark_params(n, coupling=coupling)
        return GridParams(
            n_nodes=n,
            inertia=base.inertia if self.inertia is None else self.inertia,
            kp=base.kp if self.kp is None else self.kp,
            ki=base.ki if self.ki is None else self.ki,
            t_li=base.t_li if self.t_li is None else self.t_li,
            coupling=coupling,
        )


class StepConfig(_Block):
    day: int = Field(ge=0)
    multipliers: List[float]


class DemandConfig(_Block):
    """
    kind defaults to the scenario's own generator (profiles for load_profiles, synthetic otherwise).
    Synthetic amplitudes default to draws from U(0, 1) with the seed; fluctuation to 0.2.
    Profiles default to H0, G1, G4, mixed cycled over the nodes.
    """
    kind: Optional[Literal["synthetic", "profiles"]] = None
    seed: int = Field(default=0, ge=0)
    amplitudes: Optional[List[float]] = None
    fluctuation: Optional[List[float]] = None
    step_schedule: Optional[List[StepConfig]] = None
    profiles: Optional[List[ProfileName]] = None
    norm_power: float = Field(default=PROFILE_NORM_POWER, gt=0.0)
    rated_power: float = Field(default=PROFILE_RATED_POWER, gt=0.0)
    noise_fraction: float = Field(default=PROFILE_NOISE_FRACTION, ge=0.0, le=MAX_NOISE_FRACTION)
    start_weekday: int = Field(default=0, ge=0, le=6)
    profile_dir: Optional[str] = None

    @model_validator(mode="after")
    def _check_nonnegative(self):
        for name in ("amplitudes", "fluctuation"):
            values = getattr(self, name)
            if values is not None and any(v < 0 for v in values):
                raise ValueError(f"{name} must be nonnegative")
        return self

    def amplitudes_for(self, n_nodes: int) -> Tuple[float, ...]:
        if self.amplitudes is not None:
            return tuple(self.amplitudes)
        # separate stream from the hourly noise drawn with the same seed
        return tuple(np.random.default_rng([self.seed, 0]).uniform(0.0, 1.0, size=n_nodes))

    def fluctuation_for(self, n_nodes: int) -> Tuple[float, ...]:
        if self.fluctuation is not None:
            return tuple(self.fluctuation)
        return (SYNTHETIC_FLUCTUATION,) * n_nodes

    def steps_for(self, n_nodes: int) -> Tuple[Tuple[int, Tuple[float, ...]], ...]:
        if self.step_schedule is not None:
            return tuple((s.day, tuple(s.multipliers)) for s in self.step_schedule)
        return tuple(
            (day, tuple(multipliers[j % len(multipliers)] for j in range(n_nodes)))
            for day, multipliers in DEFAULT_STEP_SCHEDULE
        )

    def profiles_for(self, n_nodes: int) -> Tuple[str, ...]:
        if self.profiles is not None:
            return tuple(self.profiles)
        default = PROFILE_NAMES + (PROFILE_MIXED,)
        return tuple(default[j % len(default)] for j in range(n_nodes))


class KappaGridConfig(_Block):
    start: float = Field(default=KAPPA_GRID[0], ge=0.0)
    stop: float = Field(default=KAPPA_GRID[1], ge=0.0)
    points: int = Field(default=KAPPA_GRID[2], ge=1)

    @model_validator(mode="after")
    def _check_order(self):
        if self.stop < self.start:
            raise ValueError("stop must not be smaller than start")
        return self


class IlcConfig(_Block):
    kappa: float = Field(default=DEFAULT_KAPPA, ge=0.0)
    q_order: int = Field(default=Q_ORDER, ge=1)
    q_cutoff: float = Field(default=Q_CUTOFF, gt=0.0, lt=1.0)
    samples_per_hour: int = Field(default=SAMPLES_PER_HOUR, ge=1)
    kappa_grid: KappaGridConfig = Field(default_factory=KappaGridConfig)
    kappa_set: List[float] = Field(default_factory=lambda: list(KAPPA_STUDY_SET), min_length=1)


class RunConfig(_Block):
    """n_cycles defaults to the scenario's own length when left out"""
    n_cycles: Optional[int] = Field(default=None, ge=0)
    time_compression: float = Field(default=1.0, gt=0.0)
    solver_method: Literal["Radau", "BDF", "LSODA"] = SOLVER_METHOD
    rtol: float = Field(default=SOLVER_RTOL, gt=0.0)
    atol: float = Field(default=SOLVER_ATOL, gt=0.0)
    linear: bool = False
    out_dir: str = DEFAULT_OUT_DIR
    max_workers: int = Field(default=MAX_WORKERS, ge=1)


class ScenarioConfig(_Block):
    grid: GridConfig = Field(default_factory=GridConfig)
    demand: DemandConfig = Field(default_factory=DemandConfig)
    ilc: IlcConfig = Field(default_factory=IlcConfig)
    run: RunConfig = Field(default_factory=RunConfig)

    @model_validator(mode="after")
    def _check_node_counts(self):
        n = self.grid.n_nodes
        demand = self.demand
        for name in ("amplitudes", "fluctuation", "profiles"):
            values = getattr(demand, name)
            if values is not None and len(values) != n:
                raise ValueError(f"demand.{name} has {len(values)} entries for n_nodes={n}")
        for step in demand.step_schedule or []:
            if len(step.multipliers) != n:
                raise ValueError(f"step at day {step.day} has {len(step.multipliers)} multipliers for n_nodes={n}")
        return self

    @property
    def hour_seconds(self) -> float:
        return SECONDS_PER_HOUR * self.run.time_compression

    @property
    def period(self) -> float:
        return HOURS_PER_CYCLE * self.hour_seconds

    def n_cycles_for(self, scenario: str) -> int:
        if self.run.n_cycles is not None:
            return self.run.n_cycles
        return SCENARIO_CYCLES[scenario]

    def solver_config(self) -> SolverConfig:
        return SolverConfig(method=self.run.solver_method, rtol=self.run.rtol,
                            atol=self.run.atol, linear=self.run.linear)


def _format_validation_error(error: ValidationError) -> str:
    lines = []
    for item in error.errors():
        loc = ".".join(str(part) for part in item["loc"]) or "<root>"
        lines.append(f"{loc}: {item['msg']}")
    return "; ".join(lines)


def parse_config(data: Dict[str, Any]) -> ScenarioConfig:
    """Validate a decoded document; raises ConfigError with dotted field paths"""
    try:
        return ScenarioConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(_format_validation_error(e)) from e


def load_config(path: Optional[str] = None) -> Tuple[Optional[ScenarioConfig], Optional[str]]:
    """
    Load and validate a scenario file

    Args:
        path: JSON file; None gives the all-default configuration

    Returns:
        Tuple of (config, error_message)
    """
    if path is None:
        return ScenarioConfig(), None
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except FileNotFoundError:
        return None, f"config file not found: {path}"
    except json.JSONDecodeError as e:
        return None, f"{path}:{e.lineno}:{e.colno}: {e.msg}"
    except OSError as e:
        return None, f"cannot read {path}: {str(e)}"

    if not isinstance(data, dict):
        return None, f"{path}: top level must be an object"
    try:
        config = parse_config(data)
    except ConfigError as e:
        return None, f"{path}: {str(e)}"

    logger.debug("Config loaded", path=path)
    return config, None


def parse_fraction(text: str) -> float:
    """Accepts '0.25' or '1/60'"""
    try:
        value = float(Fraction(str(text).strip()))
    except (ValueError, ZeroDivisionError) as e:
        raise ConfigError(f"not a number or fraction: {text!r}") from e
    if value <= 0:
        raise ConfigError(f"time compression must be positive, got {text!r}")
    return value


def apply_overrides(
    config: ScenarioConfig,
    out_dir: Optional[str] = None,
    seed: Optional[int] = None,
    kappa: Optional[float] = None,
    cycles: Optional[int] = None,
    compress: Optional[str] = None,
) -> ScenarioConfig:
    """Return a revalidated copy with command-line values taking precedence"""
    data = config.model_dump()
    if out_dir is not None:
        data["run"]["out_dir"] = out_dir
    if seed is not None:
        data["demand"]["seed"] = seed
    if kappa is not None:
        data["ilc"]["kappa"] = kappa
    if cycles is not None:
        data["run"]["n_cycles"] = cycles
    if compress is not None:
        data["run"]["time_compression"] = parse_fraction(compress)
    return parse_config(data)
