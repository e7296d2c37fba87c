"""
Runtime configuration for lumpchain.
Defaults for every command-line flag plus the environment-driven settings.
"""

import os
from dataclasses import dataclass

from dotenv import load_dotenv

from core.errors import ConfigError

# Command-line defaults
DEFAULT_TOL_VALIDATE = 1e-9
DEFAULT_TOL_LUMP = 1e-9
DEFAULT_TOL_EIG = 1e-10
DEFAULT_TOL_GROUP = 1e-8
DEFAULT_TOL_ELEMENT = 1e-7
DEFAULT_ZETA = 0.5
DEFAULT_GUARD = 10 ** 6
DEFAULT_MAX_CANDIDATES = 10 ** 5
DEFAULT_MAX_ROTATION_PATTERNS = 10 ** 4
DEFAULT_EXHAUSTIVE_SUBSET_LIMIT = 12

DEFAULT_LOGS_DIR = "storage/logs"


@dataclass(frozen=True)
class Settings:
    """Environment-level settings shared by every subcommand."""

    threads: int = 0
    logs_dir: str = DEFAULT_LOGS_DIR
    log_level: str = "INFO"

    @classmethod
    def from_env(cls) -> "Settings":
        """
        Build settings from the process environment (and `.env` if present).

        Returns:
            Settings instance

        Raises:
            ConfigError: if a variable holds an unusable value
        """
        load_dotenv()

        raw_threads = os.getenv("LUMPCHAIN_THREADS", "0")
        try:
            threads = int(raw_threads)
        except ValueError:
            raise ConfigError(f"LUMPCHAIN_THREADS must be an integer, got {raw_threads!r}")
        if threads < 0:
            raise ConfigError(f"LUMPCHAIN_THREADS must be >= 0, got {threads}")

        log_level = os.getenv("LUMPCHAIN_LOG_LEVEL", "INFO").upper()
        if log_level not in ("DEBUG", "INFO", "WARNING", "ERROR"):
            raise ConfigError(f"LUMPCHAIN_LOG_LEVEL not recognised: {log_level!r}")

        return cls(
            threads=threads,
            logs_dir=os.getenv("LUMPCHAIN_LOGS_DIR", DEFAULT_LOGS_DIR),
            log_level=log_level,
        )
