"""
Run report: what every subcommand emits, as JSON on stdout and as a table
on stderr in --table mode.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

SCHEMA_VERSION = 1

# Top-level keys in emission order
REPORT_FIELDS = ("command", "input_digest", "config", "results", "warnings", "error")


@dataclass
class RunReport:
    """Stores the outcome of one CLI run."""

    command: str
    input_digest: Optional[str] = None
    config: Dict[str, Any] = field(default_factory=dict)
    results: Dict[str, Any] = field(default_factory=dict)
    warnings: List[str] = field(default_factory=list)
    error: Optional[Dict[str, Any]] = None

    def warn(self, message: str):
        """Append a warning; duplicates are kept once."""
        if message not in self.warnings:
            self.warnings.append(message)

    def to_dict(self) -> dict:
        """Convert the report to a dictionary with a fixed key order."""
        data = {"schema": SCHEMA_VERSION}
        for key in REPORT_FIELDS:
            data[key] = getattr(self, key)
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "RunReport":
        """Rebuild a report from its JSON form."""
        if data.get("schema") != SCHEMA_VERSION:
            raise ValueError(f"unsupported report schema {data.get('schema')!r}")
        unknown = set(data) - set(REPORT_FIELDS) - {"schema"}
        if unknown:
            raise ValueError(f"unknown report fields: {sorted(unknown)}")
        return cls(**{key: data[key] for key in REPORT_FIELDS if key in data})

    def __str__(self) -> str:
        """Return the report as a human-readable table."""
        lines = [
            "=" * 60,
            f"LUMPCHAIN {self.command.upper()}",
            "=" * 60,
            f"Input digest.................. {self.input_digest or '[NONE]'}",
        ]
        for key, value in self.config.items():
            lines.append(f"{key:.<30} {value}")
        lines.append("-" * 60)

        lumpings = self.results.get("lumpings")
        if lumpings is not None:
            lines.append(f"{'#':>3}  {'lumps':>5}  {'max_deviation':>14}  partition")
            for i, entry in enumerate(lumpings, start=1):
                blocks = "".join("{" + ",".join(map(str, b)) + "}" for b in entry["blocks"])
                lines.append(f"{i:>3}  {entry['lumps']:>5}  {entry['max_deviation']:>14.3e}  {blocks}")
        for key, value in self.results.items():
            if key == "lumpings" or isinstance(value, (list, dict)):
                continue
            lines.append(f"{key:.<30} {value}")

        for warning in self.warnings:
            lines.append(f"WARNING: {warning}")
        if self.error:
            lines.append(f"ERROR: {self.error['type']}: {self.error['message']}")
        lines.append("=" * 60)
        return "\n".join(lines)
