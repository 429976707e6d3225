import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

"""
Design Sweep Node - Evaluates both convergence certificates over the learning-gain grid
"""
import time
from typing import Dict, Any

import numpy as np

from graphs.state import ScenarioState
from microgrid.analysis import ConvergenceReport, kappa_sweep, kappa_grid
from microgrid.lifted import LiftedSystem
from nodes.common import finish_stage, stage_failure
from utils.constants import NodeNames, DEFAULT_KAPPA
from utils.logger import get_logger

logger = get_logger("DesignSweepNode")


def design_checks(report: ConvergenceReport, lifted: LiftedSystem) -> Dict[str, Any]:
    """Reported outcomes of the design sweep; informational, they never fail the run"""
    positive = report.kappas > 0
    nearest = int(np.argmin(np.abs(report.kappas - DEFAULT_KAPPA)))
    if lifted.n_hours > 1:
        offdiag_ratio = float(np.linalg.norm(lifted.block(1, 0)) / np.linalg.norm(lifted.block(0, 0)))
    else:
        offdiag_ratio = 0.0
    window = report.mc_window
    upper = np.kron(np.triu(np.ones((lifted.n_hours, lifted.n_hours)), k=1), np.ones((lifted.n_nodes,) * 2))
    return {
        "as_for_all_positive_kappa": bool(np.all(report.as_flags[positive])) if positive.any() else None,
        "mc_window": list(window) if window else None,
        "argmin_kappa": report.argmin_kappa,
        "min_rho": report.min_rho,
        "rho_at_kappa_1": float(report.rho[nearest]),
        "sigma_max_at_kappa_1": float(report.sigma_max[nearest]),
        "offdiag_ratio": offdiag_ratio,
        "upper_blocks_zero": bool(np.all(lifted.p[upper > 0] == 0.0)),
    }


def design_sweep_node(state: ScenarioState) -> Dict[str, Any]:
    """
    Run the kappa sweep on the lifted model

    Args:
        state: Current pipeline state

    Returns:
        Updated state dictionary
    """
    logger.node_entry(NodeNames.DESIGN_SWEEP, state)
    started = time.time()

    try:
        config = state["config"]
        grid_cfg = config.ilc.kappa_grid
        grid = kappa_grid(grid_cfg.start, grid_cfg.stop, grid_cfg.points)

        report = kappa_sweep(state["lifted"], state["filters"], grid, max_workers=config.run.max_workers)
        checks = design_checks(report, state["lifted"])

        return finish_stage(state, NodeNames.DESIGN_SWEEP, started, {
            "design_report": report,
            "checks": checks,
        })

    except Exception as e:
        return stage_failure(state, NodeNames.DESIGN_SWEEP, e, started)
