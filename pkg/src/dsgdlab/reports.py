"""CSV and metadata persistence for the CLI commands.

Formatting rules keep outputs byte-identical across platforms, invocations,
and thread counts: header row always present, fixed column order, floats
rendered with ``repr`` (shortest round-trip), booleans as ``true``/``false``,
LF line endings, no locale formatting. A sidecar JSON per command records the
config hash and the seeds (and nothing volatile like timestamps).
"""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path


def format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool) or type(v).__name__ == "bool_":
        return "true" if v else "false"
    if isinstance(v, str):
        return v
    if isinstance(v, int):
        return str(v)
    if hasattr(v, "item"):  # numpy scalar
        return format_value(v.item())
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(v) for v in row])


def write_metadata(path: Path, command: str, config_text: str, seeds: dict) -> None:
    meta = {
        "command": command,
        "config_sha256": hashlib.sha256(config_text.encode("utf-8")).hexdigest(),
        "seeds": seeds,
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n", encoding="utf-8")
