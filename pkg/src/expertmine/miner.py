"""Git connector: first-parent revision history, changed files and file contents.

All repository access goes through the system ``git`` executable using plumbing
commands, one invocation at a time.
"""

from __future__ import annotations

import json
import logging
import os
import posixpath
import subprocess
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from .errors import BranchNotFound, ConfigError, RepositoryNotFound, VcsToolFailure

logger = logging.getLogger(__name__)

DEFAULT_BRANCH = "master"
FALLBACK_BRANCH = "main"

ADDED = "added"
MODIFIED = "modified"
DELETED = "deleted"
RENAMED = "renamed"

LOG_FORMAT = "%H%x00%an%x00%ae%x00%at%x00%P"


@dataclass(frozen=True)
class RepositoryRef:
    path: str
    branch: str = DEFAULT_BRANCH
    name: str = ""

    @property
    def label(self) -> str:
        return self.name or os.path.basename(os.path.abspath(self.path))


@dataclass(frozen=True)
class AuthorIdentity:
    canonical_name: str
    aliases: frozenset = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        if not self.canonical_name.strip():
            raise ConfigError("canonical author name must be non-empty")


@dataclass(frozen=True)
class ChangedFile:
    path: str
    kind: str
    old_path: Optional[str] = None

    def to_json(self) -> dict:
        d = {"path": self.path, "kind": self.kind}
        if self.old_path is not None:
            d["old_path"] = self.old_path
        return d

    @classmethod
    def from_json(cls, d: dict) -> "ChangedFile":
        return cls(d["path"], d["kind"], d.get("old_path"))


@dataclass(frozen=True)
class RevisionRecord:
    id: str
    author: str
    timestamp: int
    parent_id: Optional[str]
    changed_files: tuple = ()
    author_email: str = ""

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "author": self.author,
            "author_email": self.author_email,
            "timestamp": self.timestamp,
            "parent_id": self.parent_id,
            "changed_files": [c.to_json() for c in self.changed_files],
        }

    @classmethod
    def from_json(cls, d: dict) -> "RevisionRecord":
        return cls(
            id=d["id"],
            author=d["author"],
            timestamp=int(d["timestamp"]),
            parent_id=d.get("parent_id"),
            changed_files=tuple(ChangedFile.from_json(c) for c in d["changed_files"]),
            author_email=d.get("author_email", ""),
        )


class AliasMap:
    """Resolves raw (name, email) pairs to canonical author names."""

    def __init__(self, identities: Iterable[AuthorIdentity] = ()) -> None:
        self._pairs: dict[tuple[str, str], str] = {}
        self._canonical: set[str] = set()
        for ident in identities:
            self._canonical.add(ident.canonical_name)
            for name, email in ident.aliases:
                key = _alias_key(name, email)
                other = self._pairs.get(key)
                if other is not None and other != ident.canonical_name:
                    raise ConfigError(
                        f"alias {name!r} <{email}> maps to both {other!r} and "
                        f"{ident.canonical_name!r}"
                    )
                self._pairs[key] = ident.canonical_name

    def resolve(self, name: str, email: str) -> str:
        name = name.strip()
        if name in self._canonical:
            return name
        return self._pairs.get(_alias_key(name, email), name)

    def __len__(self) -> int:
        return len(self._canonical)


def _alias_key(name: str, email: str) -> tuple[str, str]:
    return name.strip(), email.strip().lower()


def load_alias_map(path: str | os.PathLike) -> AliasMap:
    """Read the alias file: a JSON array of ``{"canonical", "aliases"}`` objects."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read alias map {path}: {exc}") from exc
    if not isinstance(data, list):
        raise ConfigError("alias map must be a JSON array")
    identities = []
    for entry in data:
        try:
            aliases = frozenset(
                (a["name"], a.get("email", "")) for a in entry.get("aliases", [])
            )
            identities.append(AuthorIdentity(entry["canonical"], aliases))
        except (KeyError, TypeError, AttributeError) as exc:
            raise ConfigError(f"malformed alias entry {entry!r}") from exc
    return AliasMap(identities)


def run_git(repo_path: str, *args: str, check: bool = True) -> subprocess.CompletedProcess:
    cmd = ["git", "-C", str(repo_path), *args]
    logger.debug("running %s", cmd)
    try:
        proc = subprocess.run(cmd, capture_output=True)
    except FileNotFoundError as exc:
        raise VcsToolFailure(cmd, 127, "git executable not found") from exc
    if check and proc.returncode != 0:
        raise VcsToolFailure(cmd, proc.returncode, proc.stderr.decode("utf-8", "replace"))
    return proc


def _check_repository(repo: RepositoryRef) -> None:
    if not os.path.isdir(repo.path):
        raise RepositoryNotFound(f"{repo.path} does not exist")
    proc = run_git(repo.path, "rev-parse", "--git-dir", check=False)
    if proc.returncode != 0:
        raise RepositoryNotFound(f"{repo.path} is not a git repository")


def _ref_exists(repo_path: str, branch: str) -> bool:
    proc = run_git(
        repo_path, "rev-parse", "--verify", "--quiet", f"refs/heads/{branch}^{{commit}}",
        check=False,
    )
    return proc.returncode == 0


def _has_any_commit(repo_path: str) -> bool:
    proc = run_git(repo_path, "for-each-ref", "--count=1", "--format=%(objectname)")
    return bool(proc.stdout.strip())


def resolve_branch(repo: RepositoryRef) -> Optional[str]:
    """Return the branch to mine, or None for a repository with no commits."""
    _check_repository(repo)
    if _ref_exists(repo.path, repo.branch):
        return repo.branch
    if repo.branch == DEFAULT_BRANCH and _ref_exists(repo.path, FALLBACK_BRANCH):
        logger.info("branch %s absent, falling back to %s", DEFAULT_BRANCH, FALLBACK_BRANCH)
        return FALLBACK_BRANCH
    if not _has_any_commit(repo.path):
        return None
    raise BranchNotFound(f"branch {repo.branch!r} not found in {repo.path}")


def normalize_path(path: str) -> str:
    norm = posixpath.normpath(path.replace("\\", "/"))
    if norm.startswith("../") or norm in (".", "..") or norm.startswith("/"):
        raise ValueError(f"path escapes the repository: {path!r}")
    return norm


def parse_name_status(raw: bytes) -> tuple:
    """Parse ``diff-tree -z --name-status`` output into ChangedFile entries."""
    fields = raw.decode("utf-8", "surrogateescape").split("\0")
    if fields and fields[-1] == "":
        fields.pop()
    changes = []
    i = 0
    while i < len(fields):
        status = fields[i]
        code = status[:1]
        if code in ("R", "C"):
            old, new = fields[i + 1], fields[i + 2]
            i += 3
            if code == "R":
                changes.append(ChangedFile(normalize_path(new), RENAMED, normalize_path(old)))
            else:
                changes.append(ChangedFile(normalize_path(new), ADDED))
            continue
        path = normalize_path(fields[i + 1])
        i += 2
        if code == "A":
            changes.append(ChangedFile(path, ADDED))
        elif code == "D":
            changes.append(ChangedFile(path, DELETED))
        else:
            # M, T (type change) and U all count as content modification
            changes.append(ChangedFile(path, MODIFIED))
    return tuple(changes)


def changed_files(repo_path: str, revision_id: str, parent_id: Optional[str]) -> tuple:
    if parent_id is None:
        proc = run_git(
            repo_path, "diff-tree", "--root", "--no-commit-id", "--name-status",
            "-r", "-M", "-z", revision_id,
        )
    else:
        proc = run_git(
            repo_path, "diff-tree", "--no-commit-id", "--name-status",
            "-r", "-M", "-z", parent_id, revision_id,
        )
    return parse_name_status(proc.stdout)


def list_revisions(repo: RepositoryRef, alias_map: Optional[AliasMap] = None) -> list[RevisionRecord]:
    """First-parent history of the configured branch, oldest first."""
    alias_map = alias_map or AliasMap()
    branch = resolve_branch(repo)
    if branch is None:
        return []
    ref = f"refs/heads/{branch}"
    ids = run_git(repo.path, "rev-list", "--first-parent", "--reverse", ref).stdout.decode().split()
    proc = run_git(repo.path, "log", "--first-parent", "--reverse", f"--format={LOG_FORMAT}", ref)
    meta = {}
    for line in proc.stdout.decode("utf-8", "replace").splitlines():
        if not line:
            continue
        sha, name, email, ts, parents = line.split("\0")
        meta[sha] = (name, email, int(ts), parents.split())

    records = []
    last_ts = None
    for sha in ids:
        name, email, ts, parents = meta[sha]
        parent = parents[0] if parents else None
        if last_ts is not None and ts < last_ts:
            logger.warning("timestamp of %s precedes its first parent (clock skew)", sha[:12])
        last_ts = ts
        records.append(
            RevisionRecord(
                id=sha,
                author=alias_map.resolve(name, email),
                timestamp=ts,
                parent_id=parent,
                changed_files=changed_files(repo.path, sha, parent),
                author_email=email.strip().lower(),
            )
        )
    return records


def file_at_revision(repo: RepositoryRef, revision_id: str, path: str) -> Optional[str]:
    """Content of ``path`` at ``revision_id`` decoded as UTF-8, or None if absent."""
    raw = file_bytes_at_revision(repo, revision_id, path)
    return None if raw is None else raw.decode("utf-8", "replace")


def file_bytes_at_revision(repo: RepositoryRef, revision_id: str, path: str) -> Optional[bytes]:
    proc = run_git(repo.path, "show", f"{revision_id}:{path}", check=False)
    if proc.returncode == 0:
        return proc.stdout
    err = proc.stderr.decode("utf-8", "replace")
    if "does not exist in" in err or "exists on disk, but not in" in err:
        return None
    raise VcsToolFailure(["git", "-C", repo.path, "show", f"{revision_id}:{path}"], proc.returncode, err)


def list_files(repo: RepositoryRef, revision_id: str) -> list[str]:
    """Every tracked file path at a revision, sorted."""
    proc = run_git(repo.path, "ls-tree", "-r", "-z", "--name-only", revision_id)
    names = proc.stdout.decode("utf-8", "surrogateescape").split("\0")
    return sorted(n for n in names if n)
