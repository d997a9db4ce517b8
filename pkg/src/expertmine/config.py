"""Run configuration: one JSON file, overridden by command-line flags."""

from __future__ import annotations

import json
import os
import shlex
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

from .analyzer.profiles import PROFILES
from .components import ComponentMap
from .errors import ConfigError
from .expertise import DEFAULT_WINDOW_DAYS, EPSILON, ExpertiseWindow
from .miner import DEFAULT_BRANCH, AliasMap, RepositoryRef, load_alias_map
from .pipeline import CheckerSpec, FileAnalyzer
from .reports import DEFAULT_SERIES_METRICS, SERIES_METRICS
from .squale import DEFAULT_LAMBDA, SqualeConfig, Threshold

FORMATS = ("json", "csv", "svg")
DEFAULT_STORE = ".expertmine-store"


def parse_time(value) -> Optional[int]:
    """Accept epoch seconds or an ISO 8601 timestamp (naive means UTC)."""
    if value is None:
        return None
    if isinstance(value, bool):
        raise ConfigError(f"invalid timestamp {value!r}")
    if isinstance(value, (int, float)):
        return int(value)
    text = str(value).strip()
    if text.lstrip("-").isdigit():
        return int(text)
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    try:
        dt = datetime.fromisoformat(text)
    except ValueError:
        raise ConfigError(f"invalid ISO 8601 timestamp {value!r}") from None
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(dt.timestamp())


@dataclass
class RunConfig:
    repository: str = "."
    branch: str = DEFAULT_BRANCH
    name: str = ""
    store: str = DEFAULT_STORE
    alias_map: Optional[str] = None
    components: list = field(default_factory=list)
    profile: str = "c-family"
    checkers: list = field(default_factory=list)
    lam: float = DEFAULT_LAMBDA
    thresholds: list = field(default_factory=list)
    reference_time: Optional[int] = None
    window_days: int = DEFAULT_WINDOW_DAYS
    epsilon: float = EPSILON
    top_k: int = 3
    format: str = "json"
    metrics: tuple = DEFAULT_SERIES_METRICS
    component_glob: Optional[str] = None
    jobs: int = 1

    def validate(self) -> "RunConfig":
        if self.profile not in PROFILES:
            raise ConfigError(f"unknown profile {self.profile!r}; choose from {sorted(PROFILES)}")
        if self.format not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}")
        if not isinstance(self.window_days, int) or self.window_days < 1:
            raise ConfigError("window duration must be a positive integer number of days")
        if not isinstance(self.top_k, int) or self.top_k < 1:
            raise ConfigError("top-k must be a positive integer")
        unknown = set(self.metrics) - set(SERIES_METRICS)
        if unknown:
            raise ConfigError(f"unknown metrics {sorted(unknown)}")
        self.squale()
        return self

    # -- derived objects ---------------------------------------------------

    def repo_ref(self) -> RepositoryRef:
        return RepositoryRef(self.repository, self.branch, self.name)

    def squale(self) -> SqualeConfig:
        try:
            overrides = [Threshold(t["metric"], t.get("formula", t["metric"]), t["lower"], t["upper"])
                         for t in self.thresholds]
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"malformed threshold override: {exc}") from exc
        return SqualeConfig(self.lam).with_overrides(overrides)

    def component_map(self) -> ComponentMap:
        try:
            return ComponentMap.from_rules((r["pattern"], r["component"]) for r in self.components)
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"malformed component rule: {exc}") from exc

    def window(self) -> ExpertiseWindow:
        return ExpertiseWindow(self.reference_time, self.window_days)

    def aliases(self) -> AliasMap:
        return load_alias_map(self.alias_map) if self.alias_map else AliasMap()

    def analyzer(self) -> FileAnalyzer:
        specs = []
        for c in self.checkers:
            try:
                cmd = c["command"]
                command = tuple(shlex.split(cmd) if isinstance(cmd, str) else cmd)
                exts = c.get("extensions")
                specs.append(CheckerSpec(command, frozenset(e.lower() for e in exts) if exts else None))
            except (KeyError, TypeError, AttributeError) as exc:
                raise ConfigError(f"malformed checker entry {c!r}") from exc
        return FileAnalyzer(self.profile, tuple(specs))

    def metadata(self) -> dict:
        """Every effective setting, echoed into reports."""
        table = self.squale().thresholds
        return {
            "repository": self.repository,
            "branch": self.branch,
            "store": self.store,
            "alias_map": self.alias_map,
            "components": self.component_map().to_json(),
            "profile": self.profile,
            "checkers": self.checkers,
            "lambda": self.lam,
            "thresholds": [table[m].to_json() for m in sorted(table)],
            "reference_time": self.reference_time,
            "window_days": self.window_days,
            "epsilon": self.epsilon,
            "top_k": self.top_k,
            "format": self.format,
            "metrics": list(self.metrics),
            "component": self.component_glob,
        }


_FILE_KEYS = {
    "repository", "branch", "name", "store", "alias_map", "components", "profile",
    "checkers", "lambda", "thresholds", "window", "epsilon", "top_k", "format",
    "metrics", "component", "jobs",
}


def load_config(path: Optional[str]) -> RunConfig:
    """Read a configuration file; relative paths are resolved against its directory."""
    cfg = RunConfig()
    if path is None:
        return cfg
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    unknown = set(data) - _FILE_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    base = os.path.dirname(os.path.abspath(path))

    def rel(p):
        return p if p is None or os.path.isabs(p) else os.path.normpath(os.path.join(base, p))

    repo = data.get("repository")
    if isinstance(repo, dict):
        cfg.repository = rel(repo.get("path", "."))
        cfg.branch = repo.get("branch", cfg.branch)
        cfg.name = repo.get("name", "")
    elif repo is not None:
        cfg.repository = rel(repo)
    cfg.branch = data.get("branch", cfg.branch)
    cfg.name = data.get("name", cfg.name)
    cfg.store = rel(data.get("store", DEFAULT_STORE))
    cfg.alias_map = rel(data.get("alias_map"))
    cfg.components = list(data.get("components", []))
    cfg.profile = data.get("profile", cfg.profile)
    cfg.checkers = list(data.get("checkers", []))
    cfg.lam = data.get("lambda", cfg.lam)
    cfg.thresholds = list(data.get("thresholds", []))
    window = data.get("window", {}) or {}
    cfg.reference_time = parse_time(window.get("reference_time"))
    cfg.window_days = window.get("duration_days", cfg.window_days)
    cfg.epsilon = data.get("epsilon", cfg.epsilon)
    cfg.top_k = data.get("top_k", cfg.top_k)
    cfg.format = data.get("format", cfg.format)
    cfg.metrics = tuple(data.get("metrics", cfg.metrics))
    cfg.component_glob = data.get("component")
    cfg.jobs = data.get("jobs", cfg.jobs)
    return cfg
