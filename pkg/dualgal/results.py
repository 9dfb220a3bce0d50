from __future__ import annotations
import json
import sys
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Sequence

import numpy as np

from .errors import ArgumentError
from .utils import fmt_float

Summary = Mapping[str, Any]


def _cell(v: Any) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return fmt_float(v)
    return str(v)


def _plain(v: Any) -> Any:
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(v)
    return str(v)


def render_csv(columns: Sequence[str], rows, summary: Summary) -> str:
    """Header row, one line per record, then `# key=value` footer lines."""
    lines = [",".join(columns)]
    lines.extend(",".join(_cell(v) for v in row) for row in rows)
    lines.extend(f"# {k}={_cell(v)}" for k, v in summary.items())
    return "\n".join(lines) + "\n"


def render_json(columns: Sequence[str], rows, summary: Summary) -> str:
    doc: Dict[str, Any] = {
        "columns": list(columns),
        "rows": [[_plain(v) for v in row] for row in rows],
        "summary": {k: _plain(v) for k, v in summary.items()},
    }
    return json.dumps(doc, indent=1) + "\n"


def write_table(path: Optional[Path], fmt: str, columns: Sequence[str], rows, summary: Summary) -> None:
    """Write a result table to path, or stdout when path is None."""
    if fmt == "csv":
        text = render_csv(columns, rows, summary)
    elif fmt == "json":
        text = render_json(columns, rows, summary)
    else:
        raise ArgumentError(f"unknown output format {fmt!r}")
    if path is None:
        sys.stdout.write(text)
        return
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
