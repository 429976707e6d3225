"""
Colored console logging plus a shared run log file, with key=value context suffixes
"""
import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import logging
import colorlog
from typing import Any, Dict, Optional
from utils.constants import LOG_LEVEL, LOG_FORMAT, LOG_FILE, LOG_TO_FILE

_file_handler: Optional[logging.Handler] = None
_loggers: Dict[str, "SimLogger"] = {}


def _shared_file_handler() -> Optional[logging.Handler]:
    """One handler on LOG_FILE for every named logger in the process"""
    global _file_handler
    if _file_handler is None:
        try:
            os.makedirs(os.path.dirname(LOG_FILE) or ".", exist_ok=True)
            _file_handler = logging.FileHandler(LOG_FILE)
        except OSError:
            # read-only checkouts still get console logging
            return None
        _file_handler.setLevel(logging.DEBUG)
        _file_handler.setFormatter(logging.Formatter(LOG_FORMAT))
    return _file_handler


def setup_logger(
    name: str,
    level: Optional[str] = None,
    log_to_file: Optional[bool] = None
) -> logging.Logger:
    """
    Setup a logger with color formatting on stderr and optional file logging

    stdout is left to the result tables printed by the CLI.

    Args:
        name: Logger name
        level: Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        log_to_file: Whether to log to file; defaults to LOG_TO_FILE

    Returns:
        Configured logger instance
    """
    logger = colorlog.getLogger(name)
    logger.setLevel(logging.DEBUG)
    logger.propagate = False
    logger.handlers = []

    console_handler = colorlog.StreamHandler(sys.stderr)
    console_handler.setLevel(level or LOG_LEVEL)
    console_handler.setFormatter(colorlog.ColoredFormatter(
        '%(log_color)s%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        datefmt='%H:%M:%S',
        log_colors={
            'DEBUG': 'cyan',
            'INFO': 'green',
            'WARNING': 'yellow',
            'ERROR': 'red',
            'CRITICAL': 'red,bg_white',
        }
    ))
    logger.addHandler(console_handler)

    if LOG_TO_FILE if log_to_file is None else log_to_file:
        file_handler = _shared_file_handler()
        if file_handler is not None:
            logger.addHandler(file_handler)

    return logger


def _format_value(value: Any) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


class SimLogger:
    """Named logger for pipeline stages and simulation progress"""

    # run context is shared by every named logger of the process
    run_id: Optional[str] = None

    def __init__(self, name: str = "Microgrid-ILC"):
        self.logger = setup_logger(name)

    @classmethod
    def set_run(cls, run_id: Optional[str]):
        cls.run_id = run_id

    def _log(self, level: int, message: str, **context):
        if not self.logger.isEnabledFor(level):
            return
        prefix = f"[{SimLogger.run_id}] " if SimLogger.run_id else ""
        suffix = " ".join(f"{key}={_format_value(value)}" for key, value in context.items())
        self.logger.log(level, f"{prefix}{message}" + (f" | {suffix}" if suffix else ""))

    def debug(self, message: str, **context):
        self._log(logging.DEBUG, message, **context)

    def info(self, message: str, **context):
        self._log(logging.INFO, message, **context)

    def warning(self, message: str, **context):
        self._log(logging.WARNING, message, **context)

    def error(self, message: str, **context):
        self._log(logging.ERROR, message, **context)

    def node_entry(self, node_name: str, state: dict):
        self.debug(f"Entering {node_name}", mode=state.get("mode"), scenario=state.get("scenario"))

    def node_exit(self, node_name: str, success: bool = True):
        self.info(f"{node_name} {'done' if success else 'FAILED'}")

    def cycle_completed(self, cycle: int, error_norm: float, max_freq: float, duration: float):
        """One simulated day finished"""
        self.info(
            f"Cycle {cycle} completed",
            error_norm=float(error_norm),
            max_abs_freq_hz=float(max_freq),
            seconds=round(duration, 3),
        )

    def solver_failed(self, t_fail: float, message: str):
        self.error("Integrator stopped", t_fail=float(t_fail), reason=message)

    def warning_flag(self, flag: str, **context):
        """Non-fatal numerical condition; the run continues"""
        self.warning(f"Flag: {flag}", **context)

    def error_occurred(self, error_type: str, error_message: str, node: Optional[str] = None):
        self.error(f"Error in {node or 'unknown node'}", type=error_type, reason=error_message)


def get_logger(name: Optional[str] = None) -> SimLogger:
    """Named logger, created once per name; no name gives the shared default"""
    name = name or "Microgrid-ILC"
    if name not in _loggers:
        _loggers[name] = SimLogger(name)
    return _loggers[name]


sim_logger = get_logger()
