"""
Shared bookkeeping for pipeline stages: ledger entries, node history and failure updates
"""
import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import time
from typing import Any, Callable, Dict, Optional

from utils.constants import NodeNames
from utils.errors import error_info_from
from utils.logger import get_logger
from utils.run_record import get_run_ledger

logger = get_logger("Pipeline")
ledger = get_run_ledger()


def finish_stage(
    state: Dict[str, Any],
    node: str,
    started: float,
    updates: Dict[str, Any],
    success: bool = True,
    message: Optional[str] = None,
) -> Dict[str, Any]:
    """Record the stage in the run ledger and append it to node_history"""
    ledger.record_stage(node, success, message, time.time() - started, run_id=state.get("run_id"))
    logger.node_exit(node, success=success)
    updates["node_history"] = state.get("node_history", []) + [node]
    return updates


def stage_failure(state: Dict[str, Any], node: str, exc: BaseException, started: float) -> Dict[str, Any]:
    info = error_info_from(exc, node)
    logger.error_occurred(info["type"], info["message"], node)
    return finish_stage(
        state, node, started,
        {"error_info": info, "error_type": info["type"]},
        success=False, message=info["message"],
    )


def route_on_error(next_node: str) -> Callable[[Dict[str, Any]], str]:
    """Routing function: next_node on success, the error handler once error_info is set"""
    def route(state: Dict[str, Any]) -> str:
        if state.get("error_info"):
            return NodeNames.ERROR_HANDLER
        return next_node
    route.__name__ = f"route_to_{next_node}"
    return route
