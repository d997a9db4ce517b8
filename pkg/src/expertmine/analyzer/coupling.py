"""Internal afferent/efferent coupling from import statements."""

from __future__ import annotations

import posixpath
from dataclasses import dataclass
from typing import Mapping, Optional

from ..errors import ProfileLacksCoupling
from .profiles import Profile, get_profile
from .tokens import IDENT, KEYWORD, OP, Token, tokenize


@dataclass(frozen=True)
class ImportFacts:
    """What a file declares itself to be and what it imports."""

    module: Optional[str]
    package: str
    imports: tuple = ()

    def to_json(self) -> dict:
        return {"module": self.module, "package": self.package, "imports": list(self.imports)}

    @classmethod
    def from_json(cls, d: dict) -> "ImportFacts":
        return cls(d.get("module"), d.get("package", ""), tuple(d.get("imports", ())))


def _require_coupling(profile: Profile) -> None:
    if not profile.import_analysis:
        raise ProfileLacksCoupling(f"profile {profile.name!r} has no import analysis")


def _dotted(tokens: list[Token], i: int) -> tuple[str, int]:
    parts = []
    while i < len(tokens):
        tok = tokens[i]
        if tok.kind in (IDENT, KEYWORD) or (tok.kind == OP and tok.text in (".", "*")):
            parts.append(tok.text)
            i += 1
        else:
            break
    return "".join(parts), i


def import_facts(path: str, tokens: list[Token], profile: Profile) -> ImportFacts:
    _require_coupling(profile)
    package = ""
    imports = []
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if tok.kind == KEYWORD and tok.text == "package":
            package, i = _dotted(tokens, i + 1)
            continue
        if tok.kind == KEYWORD and tok.text == "import":
            j = i + 1
            if j < len(tokens) and tokens[j].text == "static":
                j += 1
            name, i = _dotted(tokens, j)
            if name:
                imports.append(name)
            continue
        if tok.kind == OP and tok.text == "{":
            # imports and package declarations precede the first type body
            break
        i += 1
    stem = posixpath.splitext(posixpath.basename(path))[0]
    module = f"{package}.{stem}" if package else stem
    return ImportFacts(module=module, package=package, imports=tuple(sorted(set(imports))))


def extract_imports(path: str, text: str, profile: str) -> ImportFacts:
    prof = get_profile(profile)
    _require_coupling(prof)
    return import_facts(path, tokenize(text, prof), prof)


def coupling_from_facts(facts: Mapping[str, ImportFacts]) -> dict[str, tuple[int, int]]:
    """(Ca, Ce) per path over the import graph restricted to the given files."""
    by_module: dict[str, list[str]] = {}
    by_package: dict[str, list[str]] = {}
    for path in sorted(facts):
        f = facts[path]
        if f.module:
            by_module.setdefault(f.module, []).append(path)
        by_package.setdefault(f.package, []).append(path)

    targets: dict[str, set[str]] = {}
    for path in sorted(facts):
        deps: set[str] = set()
        for name in facts[path].imports:
            if name.endswith(".*"):
                deps.update(by_package.get(name[:-2], ()))
                deps.update(_resolve(name[:-2], by_module))
            else:
                deps.update(_resolve(name, by_module))
        deps.discard(path)
        targets[path] = deps

    fan_in = {path: 0 for path in facts}
    for path, deps in targets.items():
        for dep in deps:
            fan_in[dep] += 1
    return {path: (fan_in[path], len(targets[path])) for path in sorted(facts)}


def _resolve(name: str, by_module: dict[str, list[str]]) -> list[str]:
    # static and nested-type imports name a member; walk up to the owning file
    while name:
        if name in by_module:
            return by_module[name]
        if "." not in name:
            break
        name = name.rsplit(".", 1)[0]
    return []


def analyze_coupling(files: Mapping[str, str], profile: str) -> dict[str, tuple[int, int]]:
    """Map each path to (Ca, Ce) counting only imports that resolve inside ``files``."""
    prof = get_profile(profile)
    _require_coupling(prof)
    facts = {path: import_facts(path, tokenize(text, prof), prof) for path, text in files.items()}
    return coupling_from_facts(facts)
