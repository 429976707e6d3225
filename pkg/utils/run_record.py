"""
Run ledger: stage timings and outcomes per run, and the manifest written next to the outputs
"""
import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from dataclasses import dataclass, field, asdict
from datetime import datetime
from typing import Any, Dict, List, Optional

from utils.constants import PACKAGE_VERSION
from utils.logger import get_logger

logger = get_logger("RunRecord")


@dataclass
class StageRecord:
    """One pipeline stage of a run"""
    node: str
    success: bool = True
    message: Optional[str] = None
    duration_seconds: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class RunRecord:
    run_id: str
    started_at: str
    command: str
    scenario: Optional[str] = None
    stages: List[StageRecord] = field(default_factory=list)
    outputs: List[str] = field(default_factory=list)
    metadata: Dict[str, Any] = field(default_factory=dict)

    def add_stage(
        self,
        node: str,
        success: bool = True,
        message: Optional[str] = None,
        duration_seconds: Optional[float] = None,
    ):
        self.stages.append(StageRecord(node, success, message, duration_seconds))

    @property
    def succeeded(self) -> bool:
        return all(stage.success for stage in self.stages)

    def get_stage_summary(self) -> str:
        parts = []
        for stage in self.stages:
            status = "✓" if stage.success else "✗"
            timing = f" ({stage.duration_seconds:.2f}s)" if stage.duration_seconds is not None else ""
            parts.append(f"{status} {stage.node}{timing}")
        return "\n".join(parts)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "run_id": self.run_id,
            "started_at": self.started_at,
            "command": self.command,
            "scenario": self.scenario,
            "stages": [stage.to_dict() for stage in self.stages],
            "outputs": list(self.outputs),
            "metadata": self.metadata,
        }


def build_manifest(
    record: RunRecord,
    config: Dict[str, Any],
    seeds: Dict[str, int],
) -> Dict[str, Any]:
    """Config echo, code version and seeds; written as manifest.json"""
    return {
        "package_version": PACKAGE_VERSION,
        "command": record.command,
        "scenario": record.scenario,
        "run_id": record.run_id,
        "started_at": record.started_at,
        "config": config,
        "seeds": seeds,
        "outputs": sorted(record.outputs),
    }


class RunLedger:
    """Keeps the records of every run started in this process"""

    def __init__(self):
        self.runs: Dict[str, RunRecord] = {}
        self.current_run_id: Optional[str] = None

    def create_run(self, command: str, scenario: Optional[str] = None, run_id: Optional[str] = None) -> str:
        if not run_id:
            run_id = f"run_{datetime.now().strftime('%Y%m%d_%H%M%S_%f')}"
        self.runs[run_id] = RunRecord(
            run_id=run_id,
            started_at=datetime.now().isoformat(),
            command=command,
            scenario=scenario,
        )
        self.current_run_id = run_id
        logger.info(f"Created new run: {run_id}", command=command, scenario=scenario)
        return run_id

    def get_run(self, run_id: Optional[str] = None) -> Optional[RunRecord]:
        return self.runs.get(run_id or self.current_run_id)

    def record_stage(
        self,
        node: str,
        success: bool = True,
        message: Optional[str] = None,
        duration_seconds: Optional[float] = None,
        run_id: Optional[str] = None,
    ):
        record = self.get_run(run_id)
        if not record:
            logger.warning("No active run found, stage not recorded", node=node)
            return
        record.add_stage(node, success, message, duration_seconds)

    def get_run_summary(self, run_id: Optional[str] = None) -> str:
        record = self.get_run(run_id)
        if not record:
            return "No active run"

        failed = sum(1 for stage in record.stages if not stage.success)
        summary = f"""
Run Summary:
- Run ID: {record.run_id}
- Command: {record.command}{' ' + record.scenario if record.scenario else ''}
- Started: {record.started_at}
- Stages: {len(record.stages)} ({failed} failed)
- Files written: {len(record.outputs)}

Stages:
{record.get_stage_summary()}
        """
        return summary.strip()


# Global ledger instance
run_ledger = RunLedger()


def get_run_ledger() -> RunLedger:
    """Get the global run ledger"""
    return run_ledger
