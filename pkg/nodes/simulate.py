import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

"""
Simulate Node - Runs the nonlinear closed loop under iterative learning for every learning gain
"""
import time
from concurrent.futures import ProcessPoolExecutor
from typing import Dict, Any, List, Sequence

from graphs.state import ScenarioState
from microgrid.demand import DemandTrace
from microgrid.grid_model import GridParams
from microgrid.ilc import IlcController
from microgrid.lifted import build_filters
from microgrid.plant_sim import CycleResult, PlantState, SolverConfig, run_multi_cycle
from nodes.common import finish_stage, stage_failure
from utils.constants import NodeNames, Scenarios
from utils.logger import get_logger

logger = get_logger("SimulateNode")


def run_learning(
    kappa: float,
    params: GridParams,
    trace: DemandTrace,
    n_cycles: int,
    solver_cfg: SolverConfig,
    q_cutoff: float,
    q_order: int,
) -> List[CycleResult]:
    """One learning run from the synchronous origin with u^0 = 0"""
    filters = build_filters(params.n_nodes, kappa=kappa, cutoff=q_cutoff, order=q_order)
    controller = IlcController(filters)
    return run_multi_cycle(PlantState.origin(params.n_nodes), controller, trace, params, n_cycles, solver_cfg)


def _run_job(job: tuple) -> List[CycleResult]:
    return run_learning(*job)


def run_kappas(
    kappas: Sequence[float],
    params: GridParams,
    trace: DemandTrace,
    n_cycles: int,
    solver_cfg: SolverConfig,
    q_cutoff: float,
    q_order: int,
    max_workers: int = 1,
) -> Dict[float, List[CycleResult]]:
    """Independent runs per learning gain, in a process pool when more than one worker is allowed"""
    jobs = [(float(k), params, trace, n_cycles, solver_cfg, q_cutoff, q_order) for k in kappas]
    workers = min(max_workers, len(jobs))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_run_job, jobs))
    else:
        outcomes = [_run_job(job) for job in jobs]
    return {job[0]: results for job, results in zip(jobs, outcomes)}


def simulate_node(state: ScenarioState) -> Dict[str, Any]:
    """
    Simulate the scenario

    kappa_study runs the configured kappa set; the other scenarios run the single
    configured kappa. Results are keyed by kappa.

    Args:
        state: Current pipeline state

    Returns:
        Updated state dictionary
    """
    logger.node_entry(NodeNames.SIMULATE, state)
    started = time.time()

    try:
        config = state["config"]
        scenario = state["scenario"]
        n_cycles = state.get("n_cycles", 0)
        if scenario == Scenarios.KAPPA_STUDY:
            kappas = sorted(set(float(k) for k in config.ilc.kappa_set))
        else:
            kappas = [float(config.ilc.kappa)]

        if n_cycles == 0:
            results = {k: [] for k in kappas}
        else:
            logger.info("Simulating", scenario=scenario, kappas=kappas, n_cycles=n_cycles)
            results = run_kappas(
                kappas, state["params"], state["trace"], n_cycles, config.solver_config(),
                config.ilc.q_cutoff, config.ilc.q_order, max_workers=config.run.max_workers,
            )

        return finish_stage(state, NodeNames.SIMULATE, started, {"results": results})

    except Exception as e:
        update = stage_failure(state, NodeNames.SIMULATE, e, started)
        update["error_info"]["scenario"] = state.get("scenario")
        return update
