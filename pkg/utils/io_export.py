"""
CSV and JSON writers for run outputs
"""
import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import json
from typing import Any, Dict, List, Sequence

import numpy as np
import pandas as pd

from microgrid.grid_model import CompoundPlant
from microgrid.lifted import LiftedFilters, LiftedSystem
from utils.constants import CSV_FLOAT_FORMAT, ERROR_NORMS_COLUMNS, KAPPA_NORMS_COLUMNS
from utils.logger import get_logger

logger = get_logger("IOExport")


def _ensure_parent(path: str):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)


def write_frame(frame: pd.DataFrame, path: str) -> str:
    _ensure_parent(path)
    frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
    logger.debug("CSV written", path=path, rows=len(frame))
    return path


def write_matrix(matrix: np.ndarray, path: str) -> str:
    """Bare matrix, no header or index"""
    _ensure_parent(path)
    pd.DataFrame(np.atleast_2d(matrix)).to_csv(
        path, index=False, header=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n"
    )
    return path


def _json_default(value: Any):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, tuple):
        return list(value)
    raise TypeError(f"not JSON serializable: {type(value).__name__}")


def write_json(payload: Dict[str, Any], path: str) -> str:
    _ensure_parent(path)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, sort_keys=True, default=_json_default)
        f.write("\n")
    return path


def error_norms_frame(cycles: Sequence[int], norms: Sequence[float]) -> pd.DataFrame:
    return pd.DataFrame({"cycle": list(cycles), "error_norm": list(norms)}, columns=ERROR_NORMS_COLUMNS)


def kappa_norms_frame(norms_by_kappa: Dict[float, Sequence[float]]) -> pd.DataFrame:
    """Long format kappa,cycle,error_norm in ascending kappa order"""
    rows = [
        (kappa, cycle, norm)
        for kappa in sorted(norms_by_kappa)
        for cycle, norm in enumerate(norms_by_kappa[kappa])
    ]
    return pd.DataFrame(rows, columns=KAPPA_NORMS_COLUMNS)


def export_matrices(
    out_dir: str,
    plant: CompoundPlant,
    laplacian: np.ndarray,
    lifted: LiftedSystem,
    filters: LiftedFilters,
) -> List[str]:
    """A, B, E, C~, the Laplacian, P, Q, Q_h and z as headerless CSV files"""
    matrices = {
        "A": plant.a,
        "B": plant.b,
        "E": plant.e,
        "C_tilde": plant.c_tilde,
        "laplacian": laplacian,
        "P": lifted.p,
        "Q": filters.q,
        "Q_h": filters.q_hour,
        "z": lifted.z.reshape(-1, 1),
    }
    paths = [write_matrix(matrix, os.path.join(out_dir, f"{name}.csv")) for name, matrix in matrices.items()]
    logger.info("Matrices exported", out_dir=out_dir, files=len(paths))
    return paths
