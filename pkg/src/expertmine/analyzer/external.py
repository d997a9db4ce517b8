"""Adapter for third-party metric tools.

A checker is invoked as ``<command...> <dir>`` where ``<dir>`` holds the
revision-pinned files at their repository-relative paths. It must print a JSON
array of ``{"path": ..., "cc": ..., "hv": ...}`` objects and exit with 0.
Metrics a checker does not report stay absent.
"""

from __future__ import annotations

import json
import logging
import math
import os
import shlex
import subprocess
import tempfile
from typing import Iterable, Sequence

from ..errors import CheckerProcessFailure, CheckerProtocolError
from .metrics import METRIC_IDS, MetricVector

logger = logging.getLogger(__name__)


def _command_list(command: str | Sequence[str]) -> list[str]:
    if isinstance(command, str):
        return shlex.split(command)
    return list(command)


def parse_checker_output(payload: str, expected: set[str]) -> dict[str, MetricVector]:
    try:
        data = json.loads(payload)
    except ValueError as exc:
        raise CheckerProtocolError(f"checker output is not JSON: {exc}", payload) from exc
    if not isinstance(data, list):
        raise CheckerProtocolError("checker output must be a JSON array", payload)
    results: dict[str, MetricVector] = {}
    for item in data:
        if not isinstance(item, dict) or not isinstance(item.get("path"), str):
            raise CheckerProtocolError(f"entry without a string 'path': {item!r}", payload)
        path = item["path"]
        if path not in expected:
            raise CheckerProtocolError(f"checker reported unknown path {path!r}", payload)
        values = {}
        for key in METRIC_IDS:
            if key not in item or item[key] is None:
                continue
            value = item[key]
            if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
                raise CheckerProtocolError(f"{path}: {key} is not a finite number", payload)
            values[key] = value
        extra = set(item) - set(METRIC_IDS) - {"path"}
        if extra:
            logger.debug("ignoring unknown checker keys %s", sorted(extra))
        results[path] = MetricVector(**values)
    return results


def run_external_checker(
    command: str | Sequence[str], files: Iterable[tuple[str, str | bytes]]
) -> dict[str, MetricVector]:
    """Run one checker over a batch of (path, content) pairs."""
    cmd = _command_list(command)
    files = list(files)
    with tempfile.TemporaryDirectory(prefix="expertmine-check-") as tmp:
        for path, content in files:
            target = os.path.join(tmp, *path.split("/"))
            os.makedirs(os.path.dirname(target), exist_ok=True)
            data = content.encode("utf-8") if isinstance(content, str) else content
            with open(target, "wb") as fh:
                fh.write(data)
        try:
            proc = subprocess.run(cmd + [tmp], capture_output=True)
        except OSError as exc:
            raise CheckerProcessFailure(cmd, 127, str(exc)) from exc
    stderr = proc.stderr.decode("utf-8", "replace")
    if proc.returncode != 0:
        raise CheckerProcessFailure(cmd, proc.returncode, stderr)
    return parse_checker_output(proc.stdout.decode("utf-8", "replace"), {p for p, _ in files})
