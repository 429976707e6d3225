import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

"""
Evaluate Node - Error norms, per-cycle summaries and the control-objective checks
"""
import time
from typing import Dict, Any, List

import numpy as np

from graphs.state import ScenarioState
from microgrid.analysis import (
    control_energy_ratio, cycle_summary, energy_to_demand_ratio, error_norms, frequency_objective,
    step_recovery, weekly_periodicity,
)
from microgrid.plant_sim import CycleResult
from nodes.common import finish_stage, stage_failure
from utils.constants import (
    NodeNames, Scenarios, FREQUENCY_BOUND_HZ, RECOVERY_CYCLES, RECOVERY_THRESHOLD, WEEKLY_LAG,
)
from utils.logger import get_logger

logger = get_logger("EvaluateNode")

# noise band for the no-learning error norm
NO_LEARNING_BAND = 0.15
KAPPA_STUDY_COMPARE_CYCLE = 5


def frequency_checks(results: Dict[float, List[CycleResult]]) -> Dict[str, Any]:
    peaks = [frequency_objective(runs)[0] for runs in results.values() if runs]
    if not peaks:
        return {}
    worst = float(max(p.max() for p in peaks))
    return {"max_abs_freq_hz": worst, "frequency_bound_ok": worst <= FREQUENCY_BOUND_HZ}


def step_checks(runs: List[CycleResult], step_cycles: List[int]) -> Dict[str, Any]:
    outcomes = step_recovery(runs, step_cycles, within=RECOVERY_CYCLES, threshold=RECOVERY_THRESHOLD)
    return {
        "step_recovery": outcomes,
        "step_recovery_ok": all(o["recovered"] for o in outcomes) if outcomes else None,
    }


def profile_checks(runs: List[CycleResult]) -> Dict[str, Any]:
    """Steady energy-to-demand ratio from the second week on and the weekly period of sum_y"""
    ratio = energy_to_demand_ratio(runs)
    checks: Dict[str, Any] = {"energy_to_demand_ratio": ratio.tolist()}
    later = ratio[WEEKLY_LAG:]
    checks["steady_ratio_below_10pct"] = bool(np.all(later < 0.1)) if later.size else None
    series = cycle_summary(runs)["sum_y"].to_numpy()
    if series.size >= 2 * WEEKLY_LAG:
        acf, is_peak = weekly_periodicity(series, WEEKLY_LAG)
        checks["weekly_autocorrelation"] = acf
        checks["weekly_period_detected"] = is_peak
    return checks


def energy_ratio_checks(results: Dict[float, List[CycleResult]]) -> Dict[str, Any]:
    """Per-cycle control-energy ratio; cycles without ILC input report null"""
    ratios = {
        kappa: [None if np.isnan(v) else float(v) for v in control_energy_ratio(runs)]
        for kappa, runs in results.items()
    }
    if len(ratios) == 1:
        (values,) = ratios.values()
        return {"control_energy_ratio": values}
    return {"control_energy_ratio": {f"{kappa:g}": values for kappa, values in sorted(ratios.items())}}


def kappa_checks(norms: Dict[float, List[float]]) -> Dict[str, Any]:
    """Ordering of the learning gains over the cycles"""
    checks: Dict[str, Any] = {}
    if 2.0 in norms and len(norms[2.0]) > 1:
        checks["kappa_2_not_converging"] = bool(norms[2.0][-1] >= norms[2.0][0])
    if 0.0 in norms and len(norms[0.0]) > 1:
        values = np.asarray(norms[0.0])
        mean = values.mean()
        checks["kappa_0_within_noise_band"] = bool(
            mean == 0 or np.all(np.abs(values - mean) <= NO_LEARNING_BAND * mean)
        )
    compare = {k: v[KAPPA_STUDY_COMPARE_CYCLE] for k, v in norms.items() if len(v) > KAPPA_STUDY_COMPARE_CYCLE}
    if 1.0 in compare:
        checks["kappa_1_smallest_at_cycle_5"] = bool(compare[1.0] == min(compare.values()))
    return checks


def summary_rows(results: Dict[float, List[CycleResult]], norms: Dict[float, List[float]]) -> List[Dict[str, Any]]:
    if len(results) == 1:
        (kappa, runs), = results.items()
        frame = cycle_summary(runs)
        frame.insert(1, "error_norm", norms[kappa])
        return frame.to_dict("records")
    return [
        {
            "kappa": kappa,
            "first_error_norm": values[0] if values else None,
            "last_error_norm": values[-1] if values else None,
            "cycles": len(values),
        }
        for kappa, values in sorted(norms.items())
    ]


def evaluate_node(state: ScenarioState) -> Dict[str, Any]:
    """
    Evaluate the simulated cycles

    Checks are reported, never enforced; a failing check does not change the exit code.

    Args:
        state: Current pipeline state

    Returns:
        Updated state dictionary
    """
    logger.node_entry(NodeNames.EVALUATE, state)
    started = time.time()

    try:
        scenario = state["scenario"]
        results = state.get("results", {})
        norms = {k: error_norms(runs).tolist() for k, runs in results.items()}

        checks: Dict[str, Any] = {"n_cycles": state.get("n_cycles", 0)}
        checks.update(frequency_checks(results))
        checks.update(energy_ratio_checks(results))
        if scenario == Scenarios.KAPPA_STUDY:
            checks.update(kappa_checks(norms))
        else:
            (runs,) = results.values()
            if runs:
                if scenario == Scenarios.STEP_CONVERGENCE:
                    checks.update(step_checks(runs, state.get("metadata", {}).get("step_cycles", [])))
                elif scenario == Scenarios.LOAD_PROFILES:
                    checks.update(profile_checks(runs))

        if checks.get("frequency_bound_ok") is False:
            logger.warning_flag("frequency_objective", max_abs_freq_hz=checks["max_abs_freq_hz"])

        return finish_stage(state, NodeNames.EVALUATE, started, {
            "error_norms": norms,
            "checks": checks,
            "summary_rows": summary_rows(results, norms),
        })

    except Exception as e:
        return stage_failure(state, NodeNames.EVALUATE, e, started)
