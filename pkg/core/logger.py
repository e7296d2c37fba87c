import os
import json
import uuid
from datetime import datetime
from typing import Any, Dict, Optional
import logging


class RunLogger:
    """Logs CLI runs: unified runtime log, sessions log and one JSON per run."""

    def __init__(self, logs_dir: Optional[str] = "storage/logs", level: str = "INFO"):
        """
        Initialize the run logger.

        Args:
            logs_dir: Directory to store log files; None disables file output
            level: Level for the runtime log
        """
        self.logs_dir = logs_dir
        self.enabled = logs_dir is not None

        # Session ID: timestamp plus a short suffix so parallel runs never collide
        self.session_start = datetime.now()
        self.session_id = f"{self.session_start.strftime('%Y-%m-%d_%H-%M-%S')}_{uuid.uuid4().hex[:6]}"
        self.command = None

        if self.enabled:
            os.makedirs(logs_dir, exist_ok=True)
            self.json_log_path = os.path.join(logs_dir, f"run_{self.session_id}.json")
            self.runtime_log_path = os.path.join(logs_dir, "runtime.log")
            self.sessions_log_path = os.path.join(logs_dir, "sessions.log")
        else:
            self.json_log_path = None
            self.runtime_log_path = None
            self.sessions_log_path = None

        self._setup_runtime_logger(level)

    def _setup_runtime_logger(self, level: str):
        """Setup unified runtime logger for tail -f functionality."""
        self.runtime_logger = logging.getLogger(f"lumpchain.run.{self.session_id}")
        self.runtime_logger.setLevel(getattr(logging, level, logging.INFO))
        self.runtime_logger.propagate = False

        # Remove existing handlers to avoid duplicates
        self.runtime_logger.handlers.clear()

        if not self.enabled:
            self.runtime_logger.addHandler(logging.NullHandler())
            return

        runtime_handler = logging.FileHandler(self.runtime_log_path)
        runtime_handler.setFormatter(logging.Formatter(
            '%(asctime)s [%(levelname)s] [Run: %(session_id)s] %(message)s',
            datefmt='%Y-%m-%d %H:%M:%S'
        ))
        self.runtime_logger.addHandler(runtime_handler)

    def _log_to_sessions_file(self, message: str):
        """
        Append a message to the unified sessions log file.

        Args:
            message: Message to log
        """
        if not self.enabled:
            return
        timestamp = datetime.now().strftime('%Y-%m-%d %H:%M:%S')
        with open(self.sessions_log_path, 'a') as f:
            f.write(f"[{timestamp}] [Run: {self.session_id}] {message}\n")

    def log_command_start(self, command: str, argv):
        """
        Record the subcommand and its raw arguments.

        Args:
            command: Subcommand name
            argv: Argument list as given on the command line
        """
        self.command = command
        self.log_info(f"Command started: {command} {' '.join(argv)}")
        self._log_to_sessions_file(f"RUN STARTED: {command}")

    def log_run_end(self, report: Dict[str, Any], exit_code: int):
        """
        Log the end of a run and save its report.

        Args:
            report: Final report dictionary (already JSON-compatible)
            exit_code: Process exit code
        """
        duration = (datetime.now() - self.session_start).total_seconds()
        self.log_info(f"Run ended - exit {exit_code}, {duration:.3f}s")

        if not self.enabled:
            return
        record = {
            "session_id": self.session_id,
            "session_start": self.session_start.isoformat(),
            "duration_seconds": duration,
            "exit_code": exit_code,
            "report": report,
        }
        with open(self.json_log_path, 'w') as f:
            json.dump(record, f, indent=2)

        for warning in report.get("warnings", []):
            self._log_to_sessions_file(f"WARNING: {warning}")
        self._log_to_sessions_file(f"RUN ENDED: {self.command} exit={exit_code} ({duration:.3f}s)")

    def log_info(self, message: str):
        self.runtime_logger.info(message, extra={'session_id': self.session_id})

    def log_warning(self, message: str):
        self.runtime_logger.warning(message, extra={'session_id': self.session_id})

    def log_error(self, message: str):
        self.runtime_logger.error(message, extra={'session_id': self.session_id})

    def close(self):
        for handler in list(self.runtime_logger.handlers):
            handler.close()
            self.runtime_logger.removeHandler(handler)

    def get_json_log_path(self) -> Optional[str]:
        """Get the per-run JSON path."""
        return self.json_log_path

    def get_runtime_log_path(self) -> Optional[str]:
        """Get the unified runtime log file path."""
        return self.runtime_log_path

    def get_sessions_log_path(self) -> Optional[str]:
        """Get the unified sessions log file path."""
        return self.sessions_log_path
