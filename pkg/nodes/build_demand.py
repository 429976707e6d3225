import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

"""
Build Demand Node - Creates the demand trace for the requested scenario
"""
import time
from typing import Dict, Any, List, Tuple

from graphs.state import ScenarioState
from microgrid.demand import (
    DemandTrace, LoadProfileSpec, SyntheticDemandSpec, kappa_study_spec, load_profile_tables,
    load_profile_trace, synthetic_trace, weekly_calendar,
)
from nodes.common import finish_stage, stage_failure
from utils.constants import NodeNames, Scenarios
from utils.errors import DemandError
from utils.logger import get_logger

logger = get_logger("BuildDemandNode")


def demand_kind(config, scenario: str) -> str:
    if config.demand.kind:
        return config.demand.kind
    return "profiles" if scenario == Scenarios.LOAD_PROFILES else "synthetic"


def synthetic_spec(config, scenario: str, n_nodes: int) -> SyntheticDemandSpec:
    """
    step_convergence carries the step schedule; kappa_study draws its own amplitudes
    unless the config fixes them
    """
    demand = config.demand
    if scenario == Scenarios.KAPPA_STUDY and demand.amplitudes is None and demand.fluctuation is None:
        return kappa_study_spec(n_nodes, demand.seed, period=config.period)
    steps = demand.steps_for(n_nodes) if scenario == Scenarios.STEP_CONVERGENCE else ()
    return SyntheticDemandSpec(
        amplitudes=demand.amplitudes_for(n_nodes),
        fluctuation=demand.fluctuation_for(n_nodes),
        period=config.period,
        rng_seed=demand.seed,
        step_schedule=steps,
    )


def build_trace(config, scenario: str, n_nodes: int, n_cycles: int) -> Tuple[DemandTrace, List[int]]:
    """
    Returns:
        Tuple of (trace, step cycles inside the horizon)
    """
    demand = config.demand
    if demand_kind(config, scenario) == "profiles":
        tables, error = load_profile_tables(demand.profile_dir)
        if error:
            raise DemandError(error)
        spec = LoadProfileSpec(
            profiles=demand.profiles_for(n_nodes),
            calendar=weekly_calendar(n_cycles, demand.start_weekday),
            norm_power=demand.norm_power,
            rated_power=demand.rated_power,
            noise_fraction=demand.noise_fraction,
            rng_seed=demand.seed,
            period=config.period,
        )
        return load_profile_trace(spec, n_cycles, tables), []

    spec = synthetic_spec(config, scenario, n_nodes)
    steps = [day for day, _ in spec.step_schedule if 0 < day < n_cycles]
    return synthetic_trace(spec, n_cycles), steps


def build_demand_node(state: ScenarioState) -> Dict[str, Any]:
    """
    Build the demand trace covering all simulated cycles

    With n_cycles = 0 no trace is built and the later stages produce empty outputs.

    Args:
        state: Current pipeline state

    Returns:
        Updated state dictionary
    """
    logger.node_entry(NodeNames.BUILD_DEMAND, state)
    started = time.time()

    try:
        config = state["config"]
        scenario = state["scenario"]
        n_cycles = state.get("n_cycles", 0)
        n_nodes = state["params"].n_nodes

        if n_cycles == 0:
            logger.info("No cycles requested, skipping demand")
            return finish_stage(state, NodeNames.BUILD_DEMAND, started, {"trace": None})

        trace, steps = build_trace(config, scenario, n_nodes, n_cycles)
        logger.info(
            "Demand trace built",
            kind=trace.meta.get("kind"),
            days=n_cycles,
            breakpoints=int(trace.breakpoints.size),
        )
        return finish_stage(state, NodeNames.BUILD_DEMAND, started, {
            "trace": trace,
            "metadata": {
                **state.get("metadata", {}),
                "demand_kind": trace.meta.get("kind"),
                "step_cycles": steps,
            },
        })

    except Exception as e:
        return stage_failure(state, NodeNames.BUILD_DEMAND, e, started)
