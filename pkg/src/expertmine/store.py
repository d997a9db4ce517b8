"""Incremental on-disk analysis cache.

Layout of a store directory::

    manifest.json          {"schema_version", "analyzer_version", "profile"}
    records/<xx>.jsonl     AnalysisRecord lines, sharded by the first two
                           characters of the revision id
    revisions.jsonl        one RevisionRecord per fully analyzed revision,
                           appended after that revision's records
    history.json           {"branch", "revisions": [ids oldest first]} of the
                           last completed run

A record line looks like::

    {"revision_id": "...", "path": "src/a.c", "status": "ok",
     "metrics": {"cc": 3, "hv": 80.0, "hd": 4.0, "sloc": 10},
     "imports": {"module": ..., "package": ..., "imports": [...]},
     "analyzer_version": "...", "profile": "c-family"}

``status`` is ``ok``, ``unanalyzable`` (with a ``reason``) or ``tombstone``.
Only files changed by a revision get records there; the state of every other
file is inherited from the first parent.
"""

from __future__ import annotations

import json
import logging
import os
import shutil
import tempfile
from collections import OrderedDict
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Optional

from .analyzer.coupling import ImportFacts, coupling_from_facts
from .analyzer.metrics import MetricVector
from .components import ComponentMap
from .errors import MissingMetrics, StoreCorrupted
from .miner import DELETED, RENAMED, RevisionRecord

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1

OK = "ok"
UNANALYZABLE = "unanalyzable"
TOMBSTONE = "tombstone"

_STATE_CACHE_SIZE = 32


@dataclass(frozen=True)
class AnalysisRecord:
    revision_id: str
    path: str
    status: str
    analyzer_version: str
    profile: str
    metrics: Optional[MetricVector] = None
    imports: Optional[ImportFacts] = None
    reason: Optional[str] = None

    @property
    def analyzable(self) -> bool:
        return self.status == OK

    def to_json(self) -> dict:
        d = {
            "revision_id": self.revision_id,
            "path": self.path,
            "status": self.status,
            "analyzer_version": self.analyzer_version,
            "profile": self.profile,
        }
        if self.metrics is not None:
            d["metrics"] = self.metrics.to_json()
        if self.imports is not None:
            d["imports"] = self.imports.to_json()
        if self.reason is not None:
            d["reason"] = self.reason
        return d

    @classmethod
    def from_json(cls, d: dict) -> "AnalysisRecord":
        return cls(
            revision_id=d["revision_id"],
            path=d["path"],
            status=d["status"],
            analyzer_version=d["analyzer_version"],
            profile=d["profile"],
            metrics=MetricVector.from_json(d["metrics"]) if "metrics" in d else None,
            imports=ImportFacts.from_json(d["imports"]) if "imports" in d else None,
            reason=d.get("reason"),
        )


@dataclass(frozen=True)
class PlanItem:
    revision_id: str
    paths: tuple
    tombstones: tuple = ()


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def _atomic_write(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _read_jsonl(path: Path) -> list[dict]:
    if not path.exists():
        return []
    raw = path.read_text(encoding="utf-8")
    lines = raw.split("\n")
    out = []
    for n, line in enumerate(lines):
        if not line:
            continue
        try:
            out.append(json.loads(line))
        except ValueError:
            if n == len(lines) - 1:
                # torn final write from an interrupted run
                logger.warning("ignoring truncated last line of %s", path)
                continue
            raise StoreCorrupted(f"{path}:{n + 1}: invalid JSON") from None
    return out


def _trim_torn_tail(path: Path) -> None:
    """Cut an unterminated last line so later appends start on a fresh line."""
    if not path.exists():
        return
    data = path.read_bytes()
    if not data or data.endswith(b"\n"):
        return
    logger.warning("dropping torn last line of %s", path)
    with open(path, "r+b") as fh:
        fh.truncate(data.rfind(b"\n") + 1)


class Store:
    """Single-writer cache of per-(revision, path) analysis records."""

    def __init__(self, root: str | os.PathLike, analyzer_version: str, profile: str) -> None:
        self.root = Path(root)
        self.analyzer_version = analyzer_version
        self.profile = profile
        self.records: dict[tuple[str, str], AnalysisRecord] = {}
        self.by_revision: dict[str, list[AnalysisRecord]] = {}
        self.completed: dict[str, RevisionRecord] = {}
        self._states: OrderedDict = OrderedDict()
        self._vectors: OrderedDict = OrderedDict()

    # -- opening -------------------------------------------------------

    @classmethod
    def open(cls, root: str | os.PathLike, analyzer_version: str, profile: str) -> "Store":
        """Open for writing, creating the store or invalidating it on a version change."""
        store = cls(root, analyzer_version, profile)
        store.root.mkdir(parents=True, exist_ok=True)
        manifest = store._read_manifest()
        if manifest is not None and (
            manifest.get("analyzer_version") != analyzer_version or manifest.get("profile") != profile
        ):
            logger.info("analyzer version changed, invalidating %s", store.root)
            store._clear()
            manifest = None
        if manifest is None:
            store._write_manifest()
        for path in [store.root / "revisions.jsonl", *sorted((store.root / "records").glob("*.jsonl"))]:
            _trim_torn_tail(path)
        store._load()
        return store

    @classmethod
    def open_existing(cls, root: str | os.PathLike) -> "Store":
        """Open read-only with whatever version the store was written by."""
        probe = cls(root, "", "")
        manifest = probe._read_manifest()
        if manifest is None:
            raise MissingMetrics(f"no analysis store at {root}; run 'analyze' first")
        store = cls(root, manifest["analyzer_version"], manifest["profile"])
        store._load()
        return store

    def _read_manifest(self) -> Optional[dict]:
        path = self.root / "manifest.json"
        if not path.exists():
            return None
        try:
            manifest = json.loads(path.read_text(encoding="utf-8"))
        except ValueError as exc:
            raise StoreCorrupted(f"{path}: {exc}") from exc
        if not isinstance(manifest, dict) or manifest.get("schema_version") != SCHEMA_VERSION:
            raise StoreCorrupted(f"{path}: unsupported store schema")
        return manifest

    def _write_manifest(self) -> None:
        _atomic_write(
            self.root / "manifest.json",
            _dumps({
                "schema_version": SCHEMA_VERSION,
                "analyzer_version": self.analyzer_version,
                "profile": self.profile,
            }) + "\n",
        )

    def _clear(self) -> None:
        shutil.rmtree(self.root / "records", ignore_errors=True)
        for name in ("revisions.jsonl", "history.json"):
            p = self.root / name
            if p.exists():
                p.unlink()

    def _load(self) -> None:
        records_dir = self.root / "records"
        try:
            if records_dir.is_dir():
                for shard in sorted(records_dir.glob("*.jsonl")):
                    for d in _read_jsonl(shard):
                        rec = AnalysisRecord.from_json(d)
                        if rec.analyzer_version != self.analyzer_version:
                            continue
                        self._index(rec)
            for d in _read_jsonl(self.root / "revisions.jsonl"):
                rev = RevisionRecord.from_json(d)
                self.completed[rev.id] = rev
        except (KeyError, TypeError) as exc:
            raise StoreCorrupted(f"malformed record in {self.root}: {exc}") from exc

    def _index(self, rec: AnalysisRecord) -> None:
        key = (rec.revision_id, rec.path)
        old = self.records.get(key)
        self.records[key] = rec
        bucket = self.by_revision.setdefault(rec.revision_id, [])
        if old is not None:
            bucket.remove(old)
        bucket.append(rec)

    # -- writing -------------------------------------------------------

    def has_record(self, revision_id: str, path: str) -> bool:
        return (revision_id, path) in self.records

    def get(self, revision_id: str, path: str) -> Optional[AnalysisRecord]:
        return self.records.get((revision_id, path))

    def put_records(self, records: Iterable[AnalysisRecord]) -> None:
        """Append records in (revision, path) order; rewriting a key is idempotent."""
        records = sorted(records, key=lambda r: (r.revision_id, r.path))
        if not records:
            return
        records_dir = self.root / "records"
        records_dir.mkdir(exist_ok=True)
        shards: dict[str, list[AnalysisRecord]] = {}
        for rec in records:
            shards.setdefault(rec.revision_id[:2], []).append(rec)
        for prefix, recs in sorted(shards.items()):
            with open(records_dir / f"{prefix}.jsonl", "a", encoding="utf-8") as fh:
                fh.write("".join(_dumps(r.to_json()) + "\n" for r in recs))
                fh.flush()
                os.fsync(fh.fileno())
        for rec in records:
            self._index(rec)
        self._states.clear()
        self._vectors.clear()

    def mark_complete(self, revision: RevisionRecord) -> None:
        with open(self.root / "revisions.jsonl", "a", encoding="utf-8") as fh:
            fh.write(_dumps(revision.to_json()) + "\n")
            fh.flush()
            os.fsync(fh.fileno())
        self.completed[revision.id] = revision

    def write_history(self, branch: Optional[str], revisions: list[RevisionRecord]) -> None:
        _atomic_write(
            self.root / "history.json",
            _dumps({"branch": branch, "revisions": [r.id for r in revisions]}) + "\n",
        )

    # -- reading -------------------------------------------------------

    def history(self) -> list[RevisionRecord]:
        """Revisions of the last completed run, oldest first."""
        path = self.root / "history.json"
        if not path.exists():
            raise MissingMetrics(f"{self.root} holds no completed analysis; run 'analyze' first")
        try:
            ids = json.loads(path.read_text(encoding="utf-8"))["revisions"]
        except (ValueError, KeyError, TypeError) as exc:
            raise StoreCorrupted(f"{path}: {exc}") from exc
        missing = [i for i in ids if i not in self.completed]
        if missing:
            raise MissingMetrics(f"revision {missing[0][:12]} has not been analyzed")
        return [self.completed[i] for i in ids]

    def records_at(self, revision_id: str) -> dict[str, AnalysisRecord]:
        """Live records (tombstones resolved, inheritance followed) at a revision."""
        cached = self._states.get(revision_id)
        if cached is not None:
            self._states.move_to_end(revision_id)
            return cached
        chain = []
        rev_id: Optional[str] = revision_id
        base: dict[str, AnalysisRecord] = {}
        while rev_id is not None:
            if rev_id in self._states:
                base = self._states[rev_id]
                break
            rev = self.completed.get(rev_id)
            if rev is None:
                raise MissingMetrics(f"revision {rev_id[:12]} has not been analyzed")
            chain.append(rev)
            rev_id = rev.parent_id
        state = dict(base)
        for rev in reversed(chain):
            for rec in self.by_revision.get(rev.id, ()):
                if rec.status == TOMBSTONE:
                    state.pop(rec.path, None)
                else:
                    state[rec.path] = rec
            self._remember(self._states, rev.id, state)
            state = dict(state)
        return self._states[revision_id]

    def vectors_at(self, revision_id: Optional[str]) -> dict[str, MetricVector]:
        """Metric vectors of every analyzable live file, with coupling resolved."""
        if revision_id is None:
            return {}
        cached = self._vectors.get(revision_id)
        if cached is not None:
            self._vectors.move_to_end(revision_id)
            return cached
        live = {p: r for p, r in self.records_at(revision_id).items() if r.analyzable}
        facts = {p: r.imports for p, r in live.items() if r.imports is not None}
        coupling = coupling_from_facts(facts) if facts else {}
        vectors = {}
        for path in sorted(live):
            vec = live[path].metrics or MetricVector()
            if path in coupling:
                ca, ce = coupling[path]
                vec = MetricVector(Ca=ca, Ce=ce).merged(vec)
            vectors[path] = vec
        self._remember(self._vectors, revision_id, vectors)
        return vectors

    @staticmethod
    def _remember(cache: OrderedDict, key: str, value) -> None:
        cache[key] = value
        cache.move_to_end(key)
        while len(cache) > _STATE_CACHE_SIZE:
            cache.popitem(last=False)


def plan_incremental(
    revisions: Iterable[RevisionRecord],
    store: Store,
    accepts: Callable[[str], bool] = lambda path: True,
) -> list[PlanItem]:
    """Work needed to bring ``store`` up to date with ``revisions``.

    A revision appears in the plan when it is not yet recorded as complete or
    when any of its changed, accepted files lacks a current record. Only the
    missing paths are listed; deletions and rename sources become tombstones.
    """
    plan = []
    for rev in revisions:
        paths = []
        tombstones = []
        for change in rev.changed_files:
            if change.kind == DELETED:
                if accepts(change.path) and not store.has_record(rev.id, change.path):
                    tombstones.append(change.path)
                continue
            if change.kind == RENAMED and accepts(change.old_path) and not store.has_record(rev.id, change.old_path):
                tombstones.append(change.old_path)
            if accepts(change.path) and not store.has_record(rev.id, change.path):
                paths.append(change.path)
        if paths or tombstones or rev.id not in store.completed:
            plan.append(PlanItem(rev.id, tuple(sorted(paths)), tuple(sorted(tombstones))))
    return plan


def component_state(
    revision_id: Optional[str], component: str, component_map: ComponentMap, store: Store
) -> list[MetricVector]:
    """Metric vectors of the component's live, analyzable files, in path order."""
    vectors = store.vectors_at(revision_id)
    return [vec for path, vec in vectors.items() if component_map.component_of(path) == component]


def component_states(revision_id: Optional[str], component_map: ComponentMap, store: Store) -> dict[str, list[MetricVector]]:
    grouped: dict[str, list[MetricVector]] = {}
    for path, vec in store.vectors_at(revision_id).items():
        grouped.setdefault(component_map.component_of(path), []).append(vec)
    return grouped
