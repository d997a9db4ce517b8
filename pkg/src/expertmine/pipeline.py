"""Mine -> analyze -> store: bring the analysis store up to date with a branch."""

from __future__ import annotations

import hashlib
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .analyzer.coupling import import_facts
from .analyzer.external import run_external_checker
from .analyzer.metrics import MetricVector, analyze_tokens
from .analyzer.profiles import get_profile
from .errors import ParseFailure
from .miner import AliasMap, RepositoryRef, file_bytes_at_revision, list_revisions, resolve_branch
from .store import OK, TOMBSTONE, UNANALYZABLE, AnalysisRecord, Store, plan_incremental

logger = logging.getLogger(__name__)

ANALYZER_VERSION = "1"


@dataclass(frozen=True)
class CheckerSpec:
    command: tuple
    extensions: Optional[frozenset] = None

    def handles(self, path: str) -> bool:
        if self.extensions is None:
            return True
        dot = path.rfind(".")
        return dot > path.rfind("/") and path[dot:].lower() in self.extensions

    def to_json(self) -> dict:
        d = {"command": list(self.command)}
        if self.extensions is not None:
            d["extensions"] = sorted(self.extensions)
        return d


@dataclass
class FileAnalyzer:
    """Turns file contents at one revision into AnalysisRecords."""

    profile: str = "c-family"
    checkers: Sequence[CheckerSpec] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        self._profile = get_profile(self.profile)

    @property
    def version(self) -> str:
        if not self.checkers:
            return f"builtin-{ANALYZER_VERSION}"
        digest = hashlib.sha256(
            json.dumps([c.to_json() for c in self.checkers], sort_keys=True).encode()
        ).hexdigest()[:12]
        return f"builtin-{ANALYZER_VERSION}+checkers-{digest}"

    def accepts(self, path: str) -> bool:
        return self._profile.handles(path) or any(c.handles(path) for c in self.checkers)

    def _builtin(self, path: str, text: str) -> tuple[MetricVector, Optional[object]]:
        analysis = analyze_tokens(text, self._profile)
        facts = import_facts(path, analysis.tokens, self._profile) if self._profile.import_analysis else None
        return analysis.vector(), facts

    def analyze(self, revision_id: str, contents: dict[str, Optional[bytes]]) -> list[AnalysisRecord]:
        version, prof = self.version, self.profile

        def record(path, status, metrics=None, imports=None, reason=None):
            return AnalysisRecord(revision_id, path, status, version, prof, metrics, imports, reason)

        results: dict[str, AnalysisRecord] = {}
        texts: dict[str, bytes] = {}
        for path in sorted(contents):
            raw = contents[path]
            if raw is None:
                results[path] = record(path, TOMBSTONE)
                continue
            if b"\0" in raw:
                results[path] = record(path, UNANALYZABLE, reason="binary content")
                continue
            texts[path] = raw
            if not self._profile.handles(path):
                continue
            try:
                vec, facts = self._builtin(path, raw.decode("utf-8", "replace"))
            except ParseFailure as exc:
                logger.info("%s@%s unanalyzable: %s", path, revision_id[:12], exc)
                results[path] = record(path, UNANALYZABLE, reason=str(exc))
                continue
            results[path] = record(path, OK, vec, facts)

        for checker in self.checkers:
            batch = [(p, texts[p]) for p in sorted(texts) if checker.handles(p)
                     and (p not in results or results[p].status == OK)]
            if not batch:
                continue
            reported = run_external_checker(list(checker.command), batch)
            for path, vec in reported.items():
                prev = results.get(path)
                base = prev.metrics if prev is not None and prev.metrics is not None else MetricVector()
                results[path] = record(path, OK, base.merged(vec), prev.imports if prev else None)

        for path in texts:
            if path not in results:
                results[path] = record(path, UNANALYZABLE, reason="no checker reported metrics")
        return [results[p] for p in sorted(results)]


@dataclass
class AnalysisSummary:
    repository: str
    branch: Optional[str]
    revisions: int = 0
    revisions_processed: int = 0
    files_total: int = 0
    files_analyzed: int = 0
    cache_hits: int = 0
    unanalyzable: int = 0
    tombstones: int = 0

    def to_json(self) -> dict:
        return dict(self.__dict__)


def run_analysis(
    repo: RepositoryRef,
    store_path: str,
    analyzer: Optional[FileAnalyzer] = None,
    alias_map: Optional[AliasMap] = None,
    jobs: int = 1,
) -> AnalysisSummary:
    analyzer = analyzer or FileAnalyzer()
    branch = resolve_branch(repo)
    revisions = list_revisions(repo, alias_map)
    store = Store.open(store_path, analyzer.version, analyzer.profile)
    plan = plan_incremental(revisions, store, analyzer.accepts)
    by_id = {r.id: r for r in revisions}

    summary = AnalysisSummary(repository=repo.path, branch=branch, revisions=len(revisions))
    summary.files_total = sum(
        1 for r in revisions for c in r.changed_files
        if c.kind != "deleted" and analyzer.accepts(c.path)
    )

    def fetch(args):
        rev_id, path = args
        return file_bytes_at_revision(repo, rev_id, path)

    pool = ThreadPoolExecutor(max_workers=jobs) if jobs > 1 else None
    try:
        for item in plan:
            rev = by_id[item.revision_id]
            jobs_list = [(rev.id, p) for p in item.paths]
            blobs = list(pool.map(fetch, jobs_list)) if pool else [fetch(j) for j in jobs_list]
            contents = dict(zip(item.paths, blobs))
            records = analyzer.analyze(rev.id, contents)
            records += [
                AnalysisRecord(rev.id, p, TOMBSTONE, analyzer.version, analyzer.profile)
                for p in item.tombstones
            ]
            store.put_records(records)
            store.mark_complete(rev)
            summary.revisions_processed += 1
            summary.files_analyzed += len(item.paths)
            summary.unanalyzable += sum(1 for r in records if r.status == UNANALYZABLE)
            summary.tombstones += len(item.tombstones)
    finally:
        if pool:
            pool.shutdown()
    store.write_history(branch, revisions)
    summary.cache_hits = summary.files_total - summary.files_analyzed
    return summary
