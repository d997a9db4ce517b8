"""Path-to-component mapping by ordered glob rules."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import lru_cache

ROOT_COMPONENT = "(root)"


@lru_cache(maxsize=None)
def glob_regex(pattern: str) -> re.Pattern:
    """Translate a path glob: ``**`` spans directories, ``*`` and ``?`` do not."""
    out = []
    i = 0
    while i < len(pattern):
        c = pattern[i]
        if pattern.startswith("**/", i):
            out.append("(?:.*/)?")
            i += 3
        elif pattern.startswith("**", i):
            out.append(".*")
            i += 2
        elif c == "*":
            out.append("[^/]*")
            i += 1
        elif c == "?":
            out.append("[^/]")
            i += 1
        elif c == "[":
            end = pattern.find("]", i + 1)
            if end < 0:
                out.append(re.escape(c))
                i += 1
            else:
                body = pattern[i + 1:end]
                if body.startswith("!"):
                    body = "^" + body[1:]
                out.append(f"[{body}]")
                i = end + 1
        else:
            out.append(re.escape(c))
            i += 1
    return re.compile("".join(out) + r"\Z")


def glob_match(pattern: str, path: str) -> bool:
    return glob_regex(pattern).match(path) is not None


@dataclass(frozen=True)
class ComponentMap:
    """First matching rule wins; unmatched paths fall back to their top-level directory."""

    rules: tuple = field(default_factory=tuple)

    @classmethod
    def from_rules(cls, rules) -> "ComponentMap":
        return cls(tuple((str(p), str(c)) for p, c in rules))

    def component_of(self, path: str) -> str:
        for pattern, name in self.rules:
            if glob_match(pattern, path):
                return name
        head, sep, _ = path.partition("/")
        return head if sep else ROOT_COMPONENT

    def to_json(self) -> list:
        return [{"pattern": p, "component": c} for p, c in self.rules]
