"""
Command-line interface for the microgrid ILC toolkit
"""
import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import argparse
from typing import Any, Dict, List, Optional

from tabulate import tabulate

from graphs.scenario_graph import get_scenario_graph
from graphs.state import create_initial_state
from utils.constants import (
    Modes, SCENARIO_CYCLES, PACKAGE_VERSION, EXIT_CONFIG_ERROR, EXIT_NUMERICAL_ERROR,
)
from utils.logger import get_logger, sim_logger
from utils.run_record import get_run_ledger

logger = get_logger("CLI")
ledger = get_run_ledger()

TABLE_FORMAT = "github"
MAX_ROWS_DISPLAY = 40


def print_banner(command: str):
    print(f"Microgrid ILC toolkit v{PACKAGE_VERSION} - {command}")
    print_separator()


def print_separator():
    print("─" * 60)


def format_rows(rows: List[Dict[str, Any]], max_rows: int = MAX_ROWS_DISPLAY) -> str:
    """Rows as a text table, truncated to max_rows"""
    if not rows:
        return "No rows to display"
    table = tabulate(rows[:max_rows], headers="keys", tablefmt=TABLE_FORMAT, floatfmt=".6g", showindex=False)
    if len(rows) > max_rows:
        table += f"\n\n... and {len(rows) - max_rows} more rows (showing first {max_rows} of {len(rows)})"
    return table


def format_checks(checks: Dict[str, Any]) -> str:
    rows = [
        {"check": key, "value": value}
        for key, value in checks.items()
        if not isinstance(value, (list, dict))
    ]
    return format_rows(rows)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="Scenario file (JSON); defaults apply when omitted")
    common.add_argument("--out-dir", help="Output directory")
    common.add_argument("--seed", type=int, help="Demand seed")
    common.add_argument("--kappa", type=float, help="Learning gain [1/h]")
    common.add_argument("--cycles", type=int, help="Number of simulated cycles (days)")
    common.add_argument("--compress", help="Time compression of the hour, e.g. 1/60")

    parser = argparse.ArgumentParser(
        description="Iterative learning control for prosumer microgrids",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  python main.py design                               # kappa sweep for the benchmark grid
  python main.py simulate step_convergence --compress 1/60
  python main.py simulate kappa_study --cycles 20
  python main.py export-matrices --out-dir results/matrices
        """
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    subparsers.add_parser(Modes.DESIGN, parents=[common], help="Convergence certificates over the kappa grid")
    simulate = subparsers.add_parser(Modes.SIMULATE, parents=[common], help="Run a validation scenario")
    simulate.add_argument("scenario", choices=sorted(SCENARIO_CYCLES))
    subparsers.add_parser(Modes.EXPORT_MATRICES, parents=[common], help="Write A, B, E, C, P, Q_h and z")
    return parser


def run_command(
    command: str,
    scenario: Optional[str] = None,
    config_path: Optional[str] = None,
    overrides: Optional[Dict[str, Any]] = None,
    config: Optional[Any] = None,
) -> Dict[str, Any]:
    """
    Run one command through the scenario graph

    Returns:
        Final pipeline state
    """
    run_id = ledger.create_run(command, scenario)
    sim_logger.set_run(run_id)
    state = create_initial_state(
        mode=command,
        run_id=run_id,
        scenario=scenario,
        config_path=config_path,
        overrides=overrides,
        config=config,
    )
    return get_scenario_graph().invoke(state)


def report(final_state: Dict[str, Any]):
    """Print the outcome of a run: tables on stdout, errors on stderr"""
    error_info = final_state.get("error_info")
    if error_info:
        print(f"✗ {error_info.get('exception', 'Error')}: {error_info.get('message')}", file=sys.stderr)
        if error_info.get("hint"):
            print(f"  {error_info['hint']}", file=sys.stderr)
        return

    rows = final_state.get("summary_rows", [])
    if rows:
        print(format_rows(rows))
        print_separator()
    checks = final_state.get("checks", {})
    if checks:
        print(format_checks(checks))
        print_separator()
    print(f"✓ {len(final_state.get('outputs', []))} files written to {final_state.get('out_dir')}")
    print(final_state.get("metadata", {}).get("run_summary", ""))


def main(argv: Optional[List[str]] = None) -> int:
    """Entry point; returns the process exit code"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse usage errors are configuration errors
        return EXIT_CONFIG_ERROR if e.code else 0

    print_banner(args.command if args.command != Modes.SIMULATE else f"{args.command} {args.scenario}")
    overrides = {
        "out_dir": args.out_dir,
        "seed": args.seed,
        "kappa": args.kappa,
        "cycles": args.cycles,
        "compress": args.compress,
    }
    try:
        final_state = run_command(
            args.command,
            scenario=getattr(args, "scenario", None),
            config_path=args.config,
            overrides=overrides,
        )
    except KeyboardInterrupt:
        print("\n\nRun interrupted.", file=sys.stderr)
        return EXIT_NUMERICAL_ERROR
    except Exception as e:
        logger.error(f"Fatal error in CLI: {str(e)}")
        print(f"\nUnexpected error: {str(e)}", file=sys.stderr)
        return EXIT_NUMERICAL_ERROR

    report(final_state)
    return int(final_state.get("exit_code", 0))


if __name__ == "__main__":
    sys.exit(main())
