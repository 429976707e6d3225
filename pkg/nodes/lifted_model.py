import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

"""
Lifted Model Node - Builds the compound plant, the lifted P and the Q, L filters
"""
import time
from typing import Dict, Any
from graphs.state import ScenarioState
from microgrid.grid_model import build_compound_plant, synchronous_origin
from microgrid.lifted import build_p_matrix, build_filters
from nodes.common import finish_stage, stage_failure
from utils.constants import NodeNames, Modes
from utils.logger import get_logger

logger = get_logger("LiftedModelNode")


def build_lifted_node(state: ScenarioState) -> Dict[str, Any]:
    """
    Assemble the cycle-domain model for the configured grid

    The free response is taken from the synchronous origin, so z = 0.

    Args:
        state: Current pipeline state

    Returns:
        Updated state dictionary
    """
    logger.node_entry(NodeNames.BUILD_LIFTED, state)
    started = time.time()

    try:
        config = state["config"]
        params = state["params"]
        ilc = config.ilc

        plant = build_compound_plant(params)
        lifted = build_p_matrix(
            plant,
            samples_per_hour=ilc.samples_per_hour,
            hour_seconds=config.hour_seconds,
            x0=synchronous_origin(params.n_nodes),
        )
        filters = build_filters(params.n_nodes, kappa=ilc.kappa, cutoff=ilc.q_cutoff, order=ilc.q_order)

        return finish_stage(state, NodeNames.BUILD_LIFTED, started, {
            "plant": plant,
            "lifted": lifted,
            "filters": filters,
        })

    except Exception as e:
        return stage_failure(state, NodeNames.BUILD_LIFTED, e, started)


def route_after_lifted(state: ScenarioState) -> str:
    if state.get("error_info"):
        return NodeNames.ERROR_HANDLER
    if state.get("mode") == Modes.EXPORT_MATRICES:
        return NodeNames.EXPORT
    return NodeNames.DESIGN_SWEEP
