import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

"""
Configure Node - Loads the scenario file, applies command-line overrides and builds grid parameters
"""
import time
from typing import Dict, Any
from graphs.state import ScenarioState
from nodes.common import finish_stage, stage_failure
from utils.config import load_config, apply_overrides
from utils.constants import NodeNames, Modes, SCENARIO_CYCLES
from utils.errors import ConfigError
from utils.logger import get_logger

logger = get_logger("ConfigureNode")


def configure_node(state: ScenarioState) -> Dict[str, Any]:
    """
    Resolve the configuration for this command

    This node:
    1. Loads the scenario file (or takes the config already in the state)
    2. Applies command-line overrides
    3. Checks the command and scenario name
    4. Builds GridParams and the cycle count

    Args:
        state: Current pipeline state

    Returns:
        Updated state dictionary
    """
    logger.node_entry(NodeNames.CONFIGURE, state)
    started = time.time()

    try:
        mode = state.get("mode")
        scenario = state.get("scenario")
        if mode not in (Modes.DESIGN, Modes.SIMULATE, Modes.EXPORT_MATRICES):
            raise ConfigError(f"unknown command {mode!r}")
        if mode == Modes.SIMULATE and scenario not in SCENARIO_CYCLES:
            raise ConfigError(
                f"unknown scenario {scenario!r}; expected one of {sorted(SCENARIO_CYCLES)}"
            )

        config = state.get("config")
        if config is None:
            config, error = load_config(state.get("config_path"))
            if error:
                raise ConfigError(error)

        overrides = {k: v for k, v in (state.get("overrides") or {}).items() if v is not None}
        if overrides:
            config = apply_overrides(config, **overrides)
            logger.info("Command-line overrides applied", keys=sorted(overrides))

        params = config.grid.to_params()
        n_cycles = config.n_cycles_for(scenario) if mode == Modes.SIMULATE else 0

        logger.info(
            "Configuration resolved",
            mode=mode,
            scenario=scenario,
            n_nodes=params.n_nodes,
            n_cycles=n_cycles,
            hour_seconds=config.hour_seconds,
        )
        return finish_stage(state, NodeNames.CONFIGURE, started, {
            "config": config,
            "params": params,
            "n_cycles": n_cycles,
            "out_dir": config.run.out_dir,
            "error_info": None,
            "metadata": {
                **state.get("metadata", {}),
                "n_nodes": params.n_nodes,
                "hour_seconds": config.hour_seconds,
            },
        })

    except Exception as e:
        return stage_failure(state, NodeNames.CONFIGURE, e, started)


def route_after_configure(state: ScenarioState) -> str:
    """
    Branch on the command

    Args:
        state: Current pipeline state

    Returns:
        Next node name
    """
    if state.get("error_info"):
        return NodeNames.ERROR_HANDLER
    if state.get("mode") == Modes.SIMULATE:
        return NodeNames.BUILD_DEMAND
    return NodeNames.BUILD_LIFTED
