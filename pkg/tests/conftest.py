from __future__ import annotations

import os
import subprocess
from pathlib import Path
from typing import Optional

import pytest

DAY = 86400
# Monday 2024-01-01 00:00:00 UTC
EPOCH = 1704067200


class GitRepo:
    """Scripted repository builder with fully controlled authors and dates."""

    def __init__(self, path: Path, branch: str = "master") -> None:
        self.path = Path(path)
        self.path.mkdir(parents=True, exist_ok=True)
        self.git("init", "-q", "-b", branch)
        self.git("config", "user.name", "Fixture")
        self.git("config", "user.email", "fixture@example.org")
        self.git("config", "commit.gpgsign", "false")

    def git(self, *args: str, env: Optional[dict] = None) -> str:
        full_env = dict(os.environ)
        full_env.update({"GIT_CONFIG_NOSYSTEM": "1", "HOME": str(self.path)})
        if env:
            full_env.update(env)
        proc = subprocess.run(
            ["git", "-C", str(self.path), *args], capture_output=True, env=full_env, check=True
        )
        return proc.stdout.decode()

    def _env(self, author: tuple, when: int) -> dict:
        name, email = author
        return {
            "GIT_AUTHOR_NAME": name,
            "GIT_AUTHOR_EMAIL": email,
            "GIT_AUTHOR_DATE": f"@{when} +0000",
            "GIT_COMMITTER_NAME": name,
            "GIT_COMMITTER_EMAIL": email,
            "GIT_COMMITTER_DATE": f"@{when} +0000",
        }

    def write(self, files: dict) -> None:
        for rel, content in files.items():
            target = self.path / rel
            if content is None:
                self.git("rm", "-q", rel)
                continue
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_text(content, encoding="utf-8")
            self.git("add", rel)

    def commit(self, files: dict, author=("Alice", "a@x"), when: int = EPOCH, message: str = "change") -> str:
        self.write(files)
        self.git("commit", "-q", "--allow-empty", "-m", message, env=self._env(author, when))
        return self.head()

    def mv(self, old: str, new: str) -> None:
        (self.path / new).parent.mkdir(parents=True, exist_ok=True)
        self.git("mv", old, new)

    def head(self) -> str:
        return self.git("rev-parse", "HEAD").strip()

    def checkout(self, *args: str) -> None:
        self.git("checkout", "-q", *args)

    def merge(self, branch: str, author=("Alice", "a@x"), when: int = EPOCH) -> str:
        self.git("merge", "-q", "--no-ff", "-m", f"merge {branch}", branch, env=self._env(author, when))
        return self.head()


@pytest.fixture
def git_repo(tmp_path):
    return GitRepo(tmp_path / "repo")


def c_function(name: str, decisions: int) -> str:
    """A C function with exactly ``decisions`` if-statements (cc = decisions + 1)."""
    body = "".join(f"  if (x > {i}) {{ x = x - {i}; }}\n" for i in range(decisions))
    return f"int {name}(int x) {{\n{body}  return x;\n}}\n"


# One line per acceptance criterion, filled in by tests/test_acceptance.py.
ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
