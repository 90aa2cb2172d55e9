"""JSON experiment reports with exact values kept as strings."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

from . import __version__
from .errors import ParseError

STATUSES = ("ok", "inconclusive", "error")


@dataclass
class ExperimentReport:
    command: str
    config: dict
    result: dict
    status: str = "ok"
    version: str = __version__
    runtime_ms: float = 0.0
    warnings: list = field(default_factory=list)

    def __post_init__(self):
        if self.status not in STATUSES:
            raise ValueError(f"unknown status {self.status!r}")

    def to_dict(self) -> dict:
        return {"command": self.command, "config": self.config, "result": self.result,
                "status": self.status, "version": self.version, "runtime_ms": self.runtime_ms,
                "warnings": list(self.warnings)}

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def loads(cls, text: str) -> ExperimentReport:
        try:
            obj = json.loads(text)
            return cls(obj["command"], obj["config"], obj["result"], obj["status"],
                       obj["version"], obj["runtime_ms"], obj.get("warnings", []))
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise ParseError(f"not an experiment report: {exc}") from exc


def strip_runtime(obj: Any) -> Any:
    """Copy of a JSON tree without any runtime_ms keys."""
    if isinstance(obj, dict):
        return {k: strip_runtime(v) for k, v in obj.items() if k != "runtime_ms"}
    if isinstance(obj, list):
        return [strip_runtime(v) for v in obj]
    return obj
