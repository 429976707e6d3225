"""
State definition for the scenario pipeline graph
"""
from typing import TypedDict, List, Dict, Any, Optional


class ScenarioState(TypedDict):
    """
    State that flows through the graph nodes

    Holds the request, the built models and the results of one command
    (design, simulate <scenario> or export-matrices).
    """
    # Request
    mode: str
    scenario: Optional[str]
    config_path: Optional[str]
    overrides: Dict[str, Any]

    # Run context
    run_id: str
    config: Optional[Any]
    out_dir: Optional[str]

    # Models
    params: Optional[Any]
    plant: Optional[Any]
    lifted: Optional[Any]
    filters: Optional[Any]

    # Design
    design_report: Optional[Any]

    # Simulation
    trace: Optional[Any]
    n_cycles: int
    results: Dict[float, List[Any]]

    # Evaluation
    error_norms: Dict[float, List[float]]
    checks: Dict[str, Any]
    summary_rows: List[Dict[str, Any]]

    # Output
    outputs: List[str]

    # Error handling
    error_info: Optional[Dict[str, Any]]
    error_type: Optional[str]
    exit_code: int

    # Metadata
    metadata: Dict[str, Any]
    node_history: List[str]


def create_initial_state(
    mode: str,
    run_id: str,
    scenario: Optional[str] = None,
    config_path: Optional[str] = None,
    overrides: Optional[Dict[str, Any]] = None,
    config: Optional[Any] = None,
) -> ScenarioState:
    """
    Create initial state for a new command

    Args:
        mode: design | simulate | export-matrices
        run_id: Run identifier from the ledger
        scenario: Scenario name for simulate
        config_path: Scenario file, None for defaults
        overrides: Command-line values that take precedence over the file
        config: Already validated ScenarioConfig, skips loading

    Returns:
        Initial ScenarioState
    """
    return ScenarioState(
        # Request
        mode=mode,
        scenario=scenario,
        config_path=config_path,
        overrides=overrides or {},

        # Run context
        run_id=run_id,
        config=config,
        out_dir=None,

        # Models
        params=None,
        plant=None,
        lifted=None,
        filters=None,

        # Design
        design_report=None,

        # Simulation
        trace=None,
        n_cycles=0,
        results={},

        # Evaluation
        error_norms={},
        checks={},
        summary_rows=[],

        # Output
        outputs=[],

        # Error handling
        error_info=None,
        error_type=None,
        exit_code=0,

        # Metadata
        metadata={},
        node_history=[],
    )
