"""
Text and JSON formats for matrices, partitions and reports.

Matrix text: one row per line, entries separated by commas and/or
whitespace, '#' starts a comment. JSON: an array of arrays, or an object
with a "matrix" key.

Partition text: blocks "{1,2}{3,4}" (1-based states) or a lump-label string
"0 0 1 1". JSON: an assignment array.
"""

import hashlib
import json
import re
from pathlib import Path
from typing import Any, List

import numpy as np

from core.chain import Partition, StochasticMatrix
from core.errors import DimensionMismatch, InputFileError, ParseError

_TOKEN = re.compile(r"[^\s,]+")
_BLOCK = re.compile(r"\{([^{}]*)\}")


def read_text(path) -> str:
    try:
        return Path(path).read_text()
    except OSError as e:
        raise InputFileError(f"cannot read {path}: {e.strerror or e}")


def write_text(path, text: str):
    try:
        target = Path(path)
        if target.parent and not target.parent.exists():
            target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(text)
    except OSError as e:
        raise InputFileError(f"cannot write {path}: {e.strerror or e}")


def _parse_json(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, e.lineno, e.colno)


def parse_matrix(text: str) -> np.ndarray:
    """
    Parse a matrix from the text or JSON format.

    Returns:
        2-D float array (not yet validated as stochastic)

    Raises:
        ParseError: with the line and column of the offending token
    """
    if text.lstrip().startswith(("[", "{")):
        data = _parse_json(text)
        if isinstance(data, dict):
            if "matrix" not in data:
                raise ParseError("JSON object has no 'matrix' key")
            data = data["matrix"]
        if not isinstance(data, list) or not all(isinstance(row, list) for row in data):
            raise ParseError("JSON matrix must be an array of arrays")
        width = len(data[0]) if data else 0
        for i, row in enumerate(data):
            if len(row) != width:
                raise ParseError(f"row {i + 1} has {len(row)} entries, expected {width}")
            for value in row:
                if isinstance(value, bool) or not isinstance(value, (int, float)):
                    raise ParseError(f"row {i + 1} holds a non-numeric value {value!r}")
        return np.array(data, dtype=float).reshape(len(data), width)

    rows: List[List[float]] = []
    width = None
    for line_no, line in enumerate(text.splitlines(), start=1):
        content = line.split("#", 1)[0]
        tokens = list(_TOKEN.finditer(content))
        if not tokens:
            continue
        row = []
        for match in tokens:
            try:
                row.append(float(match.group()))
            except ValueError:
                raise ParseError(f"not a number: {match.group()!r}", line_no, match.start() + 1)
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise ParseError(f"row has {len(row)} entries, expected {width}", line_no, 1)
        rows.append(row)

    if not rows:
        raise ParseError("no matrix rows found")
    return np.array(rows, dtype=float)


def load_matrix(path) -> np.ndarray:
    return parse_matrix(read_text(path))


def parse_partition(text: str, n: int) -> Partition:
    """
    Parse a partition of n states.

    Raises:
        ParseError: malformed text or blocks that overlap / miss states
        DimensionMismatch: label string of the wrong length
    """
    stripped = text.strip()
    if not stripped:
        raise ParseError("empty partition")

    if stripped.startswith("["):
        labels = _parse_json(stripped)
        if not isinstance(labels, list) or not all(
            isinstance(v, int) and not isinstance(v, bool) for v in labels
        ):
            raise ParseError("JSON partition must be an array of integers")
        if len(labels) != n:
            raise DimensionMismatch(n, len(labels))
        return Partition.from_labels(labels)

    if "{" in stripped:
        blocks = []
        position = 0
        for match in _BLOCK.finditer(stripped):
            gap = stripped[position:match.start()]
            if gap.strip(" ,"):
                raise ParseError(f"unexpected text {gap.strip()!r}", 1, position + 1)
            block = []
            for token in _TOKEN.finditer(match.group(1)):
                column = match.start(1) + token.start() + 1
                try:
                    state = int(token.group())
                except ValueError:
                    raise ParseError(f"not a state index: {token.group()!r}", 1, column)
                if not 1 <= state <= n:
                    raise ParseError(f"state {state} outside 1..{n}", 1, column)
                block.append(state - 1)
            blocks.append(block)
            position = match.end()
        if stripped[position:].strip(" ,"):
            raise ParseError("unbalanced braces", 1, position + 1)
        try:
            return Partition.from_blocks(blocks, n)
        except ValueError as e:
            raise ParseError(str(e))

    labels = []
    for token in _TOKEN.finditer(stripped):
        try:
            labels.append(int(token.group()))
        except ValueError:
            raise ParseError(f"not a lump label: {token.group()!r}", 1, token.start() + 1)
    if len(labels) != n:
        raise DimensionMismatch(n, len(labels))
    return Partition.from_labels(labels)


def load_partition(value: str, n: int) -> Partition:
    """Partition from a literal string, or from a file when value starts with '@'."""
    if value.startswith("@"):
        return parse_partition(read_text(value[1:]), n)
    return parse_partition(value, n)


def blocks_one_based(part: Partition) -> List[List[int]]:
    return [[state + 1 for state in block] for block in part.blocks]


def matrix_digest(P: StochasticMatrix) -> str:
    """sha256 over the shape and the little-endian float64 entries."""
    digest = hashlib.sha256()
    digest.update(f"{P.n}x{P.n}:".encode())
    digest.update(np.ascontiguousarray(P.entries, dtype="<f8").tobytes())
    return "sha256:" + digest.hexdigest()


def to_jsonable(value: Any) -> Any:
    """Convert numpy scalars/arrays and complex numbers to plain JSON types."""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, (complex, np.complexfloating)):
        return {"re": float(value.real), "im": float(value.imag)}
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return 0.0 if value == 0 else value
    return value


def dumps_report(data: dict) -> str:
    """
    Deterministic JSON: insertion-ordered keys, shortest round-trip floats
    (Python's float repr), two-space indent, trailing newline.
    """
    return json.dumps(to_jsonable(data), indent=2, ensure_ascii=False, allow_nan=False) + "\n"
