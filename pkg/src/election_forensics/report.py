"""JSON report assembly with a fixed caveat footer and atomic writes.

Every report carries the library version, the full run configuration
(seeds and thresholds included), SHA-256 digests of the input files, and a
fixed caveat string.  Reports are byte-deterministic for identical inputs;
the wall-clock timestamp goes to a separate ``report.meta.json`` sidecar so
it never perturbs the main file.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
import time
from pathlib import Path

from . import __version__

CAVEAT = (
    "Caveat: statistical screening cannot deliver final answers. These "
    "indicators quantify how surprising the reported figures are under an "
    "explicit null model; they are diagnostics to be weighed together with "
    "observation reports and other evidence, not standalone proof of fraud."
)

REPORT_FILENAME = "report.json"
META_FILENAME = "report.meta.json"


def input_digest(path: str | Path) -> dict:
    digest = hashlib.sha256(Path(path).read_bytes()).hexdigest()
    return {"path": str(path), "sha256": digest}


def build_report(command: str, config: dict, inputs: list[dict], results: dict) -> dict:
    return {
        "tool": {"name": "election-forensics", "version": __version__},
        "command": command,
        "config": config,
        "inputs": inputs,
        "results": results,
        "caveat": CAVEAT,
    }


def atomic_write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def render_report(report: dict) -> str:
    return json.dumps(report, indent=2, ensure_ascii=False, sort_keys=True) + "\n"


def write_report(out_dir: str | Path, report: dict) -> Path:
    out = Path(out_dir)
    target = out / REPORT_FILENAME
    atomic_write_text(target, render_report(report))
    meta = {"written_at_unix": time.time(), "report": REPORT_FILENAME}
    atomic_write_text(out / META_FILENAME, json.dumps(meta, indent=2) + "\n")
    return target


REPORT_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "title": "election-forensics report",
    "type": "object",
    "required": ["tool", "command", "config", "inputs", "results", "caveat"],
    "properties": {
        "tool": {
            "type": "object",
            "required": ["name", "version"],
            "properties": {
                "name": {"type": "string"},
                "version": {"type": "string"},
            },
        },
        "command": {"type": "string"},
        "config": {"type": "object"},
        "inputs": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["path", "sha256"],
                "properties": {
                    "path": {"type": "string"},
                    "sha256": {"type": "string", "pattern": "^[0-9a-f]{64}$"},
                },
            },
        },
        "results": {"type": "object"},
        "caveat": {"type": "string"},
    },
}


def validate_report(report: dict) -> list[str]:
    """Structural check against REPORT_SCHEMA; returns a list of problems."""
    problems: list[str] = []
    if not isinstance(report, dict):
        return ["report is not an object"]
    for key in REPORT_SCHEMA["required"]:
        if key not in report:
            problems.append(f"missing key {key!r}")
    tool = report.get("tool")
    if not isinstance(tool, dict) or not isinstance(tool.get("name"), str) or not isinstance(
        tool.get("version"), str
    ):
        problems.append("tool must carry string name and version")
    if not isinstance(report.get("command"), str):
        problems.append("command must be a string")
    if not isinstance(report.get("config"), dict):
        problems.append("config must be an object")
    inputs = report.get("inputs")
    if not isinstance(inputs, list):
        problems.append("inputs must be an array")
    else:
        for item in inputs:
            if (
                not isinstance(item, dict)
                or not isinstance(item.get("path"), str)
                or not isinstance(item.get("sha256"), str)
                or len(item.get("sha256", "")) != 64
            ):
                problems.append(f"bad input entry: {item!r}")
    if not isinstance(report.get("results"), dict):
        problems.append("results must be an object")
    if report.get("caveat") != CAVEAT:
        problems.append("caveat footer missing or altered")
    return problems
