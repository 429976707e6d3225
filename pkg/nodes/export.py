import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

"""
Export Node - Writes the result CSVs, checks.json and manifest.json
"""
import time
from typing import Dict, Any, List

from graphs.state import ScenarioState
from microgrid.analysis import cycle_summary, error_norms
from microgrid.grid_model import build_laplacian
from microgrid.plant_sim import CycleResult, results_frame
from nodes.common import finish_stage, stage_failure
from utils.constants import (
    NodeNames, Modes, Scenarios, CYCLES_CSV, ERROR_NORMS_CSV, SUMMARY_CSV, DESIGN_CSV,
    KAPPA_NORMS_CSV, MANIFEST_FILE, CHECKS_FILE,
)
from utils.errors import ConfigError
from utils.io_export import (
    error_norms_frame, export_matrices, kappa_norms_frame, write_frame, write_json,
)
from utils.logger import get_logger
from utils.run_record import build_manifest, get_run_ledger

logger = get_logger("ExportNode")
ledger = get_run_ledger()


def kappa_dirname(kappa: float) -> str:
    return f"kappa_{kappa:g}"


def write_cycle_outputs(out_dir: str, runs: List[CycleResult]) -> List[str]:
    """cycles.csv, error_norms.csv and summary.csv for one learning run"""
    return [
        write_frame(results_frame(runs), os.path.join(out_dir, CYCLES_CSV)),
        write_frame(error_norms_frame([r.cycle for r in runs], error_norms(runs)),
                    os.path.join(out_dir, ERROR_NORMS_CSV)),
        write_frame(cycle_summary(runs), os.path.join(out_dir, SUMMARY_CSV)),
    ]


def write_outputs(state: ScenarioState, out_dir: str) -> List[str]:
    mode = state["mode"]
    if mode == Modes.DESIGN:
        return [write_frame(state["design_report"].to_frame(), os.path.join(out_dir, DESIGN_CSV))]
    if mode == Modes.EXPORT_MATRICES:
        return export_matrices(
            out_dir, state["plant"], build_laplacian(state["params"]), state["lifted"], state["filters"]
        )

    results = state.get("results", {})
    if state.get("scenario") == Scenarios.KAPPA_STUDY:
        paths = []
        for kappa in sorted(results):
            paths += write_cycle_outputs(os.path.join(out_dir, kappa_dirname(kappa)), results[kappa])
        paths.append(write_frame(kappa_norms_frame(state.get("error_norms", {})),
                                 os.path.join(out_dir, KAPPA_NORMS_CSV)))
        return paths
    (runs,) = results.values()
    return write_cycle_outputs(out_dir, runs)


def export_node(state: ScenarioState) -> Dict[str, Any]:
    """
    Write every output of the command into the run's output directory

    Args:
        state: Current pipeline state

    Returns:
        Updated state dictionary
    """
    logger.node_entry(NodeNames.EXPORT, state)
    started = time.time()

    try:
        config = state["config"]
        out_dir = state.get("out_dir") or config.run.out_dir
        try:
            os.makedirs(out_dir, exist_ok=True)
            paths = write_outputs(state, out_dir)
            paths.append(write_json(state.get("checks", {}), os.path.join(out_dir, CHECKS_FILE)))
        except OSError as e:
            raise ConfigError(f"cannot write to output directory {out_dir}: {str(e)}") from e

        outputs = sorted(os.path.relpath(p, out_dir) for p in paths)
        record = ledger.get_run(state.get("run_id"))
        if record is None:
            record = ledger.get_run(ledger.create_run(state["mode"], state.get("scenario"), state.get("run_id")))
        record.outputs = sorted(outputs + [MANIFEST_FILE])
        manifest = build_manifest(
            record,
            config=config.model_dump(mode="json"),
            seeds={"demand": config.demand.seed},
        )
        write_json(manifest, os.path.join(out_dir, MANIFEST_FILE))
        outputs = record.outputs

        logger.info("Outputs written", out_dir=out_dir, files=len(outputs))
        return finish_stage(state, NodeNames.EXPORT, started, {"outputs": outputs})

    except Exception as e:
        return stage_failure(state, NodeNames.EXPORT, e, started)
