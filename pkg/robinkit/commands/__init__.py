"""
Subcommand handlers for the robinkit CLI.
Each module exposes `register(subparsers, parents)`, which adds its parser and
binds `handler=run`; `run(args)` returns a CommandResult for main to write out.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

from robinkit.config import _parse_float
from robinkit.errors import InvalidInputError
from robinkit.models import VerificationReport


@dataclass
class CommandResult:
    payload: Dict[str, Any]
    summary: str
    inputs: List[Path] = field(default_factory=list)
    csv_header: Optional[Sequence[str]] = None
    csv_rows: List[Sequence[Any]] = field(default_factory=list)
    reports: List[VerificationReport] = field(default_factory=list)
    # writes --csv itself when the rows are not a flat table
    csv_writer: Optional[Callable[[Path], None]] = None
    # extra files owned by the command, e.g. --field-out
    writer: Optional[Callable[[], None]] = None
    exit_code: int = 0


def parse_vector(raw: str) -> List[float]:
    """Comma-separated reals without spaces, e.g. `0.5,0,0`."""
    try:
        return [_parse_float(v) for v in raw.split(",")]
    except ValueError:
        raise InvalidInputError(f"malformed vector '{raw}': expected comma-separated reals")


def parse_spacing(raw: str) -> float:
    try:
        value = _parse_float(raw)
    except ValueError:
        raise InvalidInputError(f"malformed spacing '{raw}'")
    if value <= 0:
        raise InvalidInputError("grid spacing must be positive")
    return value
