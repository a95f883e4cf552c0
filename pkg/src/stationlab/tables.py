"""Deterministic CSV/JSON emission shared by the CLI commands.

Every CSV gets a header row and one footer comment line recording the config
hash and seed, so identical (config, seed, code version) runs are
byte-identical. Floats are formatted with ``repr`` (shortest round-trip).
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path


def config_hash(config: dict) -> str:
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()[:16]


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path: Path, header: list[str], rows, meta: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    tail = " ".join(f"{k}={v}" for k, v in meta.items())
    lines.append(f"# {tail}")
    path.write_text("\n".join(lines) + "\n")


def write_json(path: Path, payload) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
