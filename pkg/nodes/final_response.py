import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

"""
Final Response and Error Handler Nodes
"""
from typing import Dict, Any
from graphs.state import ScenarioState
from utils.constants import NodeNames, EXIT_CODES, EXIT_OK, EXIT_NUMERICAL_ERROR, ERROR_MESSAGES
from utils.logger import get_logger
from utils.run_record import get_run_ledger

logger = get_logger("FinalResponseNode")
ledger = get_run_ledger()


def error_handler_node(state: ScenarioState) -> Dict[str, Any]:
    """
    Map a stage failure to its exit code

    This node:
    1. Reads error_info set by the failing stage
    2. Adds the user-facing hint for the error type
    3. Picks the exit code (1 config error, 2 numerical failure)

    Args:
        state: Current pipeline state

    Returns:
        Updated state dictionary
    """
    logger.node_entry(NodeNames.ERROR_HANDLER, state)

    error_info = dict(state.get("error_info") or {})
    error_type = error_info.get("type", "unexpected_error")
    error_info.setdefault("hint", ERROR_MESSAGES.get(error_type, ""))
    exit_code = EXIT_CODES.get(error_type, EXIT_NUMERICAL_ERROR)

    logger.error(
        f"Run stopped in {error_info.get('node', 'unknown node')}",
        error_type=error_type,
        exit_code=exit_code,
    )
    logger.node_exit(NodeNames.ERROR_HANDLER, success=True)

    return {
        "error_info": error_info,
        "error_type": error_type,
        "exit_code": exit_code,
        "node_history": state.get("node_history", []) + [NodeNames.ERROR_HANDLER],
    }


def final_response_node(state: ScenarioState) -> Dict[str, Any]:
    """
    Close the run and attach the ledger summary

    Args:
        state: Current pipeline state

    Returns:
        Updated state dictionary
    """
    logger.node_entry(NodeNames.FINAL_RESPONSE, state)

    error_info = state.get("error_info")
    success = not error_info
    exit_code = EXIT_OK if success else state.get("exit_code") or EXIT_NUMERICAL_ERROR

    if success:
        logger.info("Run completed successfully", files=len(state.get("outputs", [])))
    else:
        logger.warning("Run completed with errors", exit_code=exit_code)

    logger.node_exit(NodeNames.FINAL_RESPONSE, success=True)

    return {
        "exit_code": exit_code,
        "node_history": state.get("node_history", []) + [NodeNames.FINAL_RESPONSE],
        "metadata": {
            **state.get("metadata", {}),
            "run_completed": True,
            "final_success": success,
            "run_summary": ledger.get_run_summary(state.get("run_id")),
        },
    }
