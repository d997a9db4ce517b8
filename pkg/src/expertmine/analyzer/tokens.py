"""Lexer for brace-block (C-family) source text.

Comments are dropped. String, character and template literals become single
tokens, preprocessor directives become ``directive`` tokens, and every token
remembers the lines it spans so that SLOC can be counted from the stream.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import ParseFailure
from .profiles import Profile

IDENT = "ident"
KEYWORD = "keyword"
NUMBER = "number"
STRING = "string"
REGEX = "regex"
OP = "op"
DIRECTIVE = "directive"

# Longest first so that the alternation is greedy.
_OPERATORS = sorted(
    """>>>= <<= >>= >>> === !== **= ... &&= ||= ??= -> => :: ++ -- && || ?? ?.
    == != <= >= += -= *= /= %= &= |= ^= << >> ** + - * / % = < > ! ~ & | ^ ? : ; ,
    . ( ) { } [ ] @ #""".split(),
    key=len,
    reverse=True,
)
_OP_RE = re.compile("|".join(re.escape(op) for op in _OPERATORS))
_IDENT_RE = re.compile(r"[^\W\d][\w$]*|\$[\w$]*")
_NUMBER_RE = re.compile(
    r"(?:0[xX][0-9a-fA-F_]+|0[bB][01_]+|(?:\d[\d_]*(?:\.[\d_]*)?|\.\d[\d_]*)(?:[eE][+-]?\d+)?)[a-zA-Z]*"
)
_WS_RE = re.compile(r"[ \t\f\v\r]+")

_CLOSERS = {")": "(", "]": "[", "}": "{"}
# After these tokens a ``/`` starts a regex literal rather than a division.
_REGEX_PRECEDING_KEYWORDS = {"return", "typeof", "case", "do", "else", "in", "new", "delete", "throw", "yield"}


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    end_line: int


def tokenize(text: str, profile: Profile) -> list[Token]:
    keywords = profile.keywords
    tokens: list[Token] = []
    pos = 0
    line = 1
    size = len(text)
    at_line_start = True
    depth: list[str] = []

    def fail(msg: str) -> ParseFailure:
        return ParseFailure(f"line {line}: {msg}")

    while pos < size:
        ch = text[pos]
        if ch == "\n":
            line += 1
            pos += 1
            at_line_start = True
            continue
        m = _WS_RE.match(text, pos)
        if m:
            pos = m.end()
            continue

        start_line = line
        if text.startswith("//", pos):
            end = text.find("\n", pos)
            pos = size if end < 0 else end
            continue
        if text.startswith("/*", pos):
            end = text.find("*/", pos + 2)
            if end < 0:
                raise fail("unterminated block comment")
            line += text.count("\n", pos, end)
            pos = end + 2
            continue

        if ch == "#" and at_line_start and (profile.preprocessor or (pos == 0 and text.startswith("#!"))):
            end, body = _scan_directive(text, pos)
            line += text.count("\n", pos, end)
            tokens.append(Token(DIRECTIVE, body, start_line, line))
            pos = end
            if profile.preprocessor:
                name, arg = _directive_parts(body)
                # only the first live branch of a conditional is lexed
                if name in ("else", "elif"):
                    pos, skipped = _skip_group(text, pos, stop_at_else=False)
                    line += skipped
                elif name == "if" and arg == "0":
                    pos, skipped = _skip_group(text, pos, stop_at_else=True)
                    line += skipped
            continue
        at_line_start = False

        if profile.text_blocks and text.startswith('"""', pos):
            end = text.find('"""', pos + 3)
            while end >= 0 and _escaped(text, end):
                end = text.find('"""', end + 1)
            if end < 0:
                raise fail("unterminated text block")
            line += text.count("\n", pos, end)
            tokens.append(Token(STRING, text[pos:end + 3], start_line, line))
            pos = end + 3
            continue
        if ch in "\"'" or (ch == "`" and profile.template_strings):
            end = _scan_string(text, pos, ch)
            if end < 0:
                raise fail(f"unterminated string literal starting with {ch}")
            line += text.count("\n", pos, end)
            tokens.append(Token(STRING, text[pos:end], start_line, line))
            pos = end
            continue

        if ch == "/" and profile.regex_literals and _regex_allowed(tokens):
            end = _scan_regex(text, pos)
            if end > 0:
                tokens.append(Token(REGEX, text[pos:end], start_line, line))
                pos = end
                continue

        m = _NUMBER_RE.match(text, pos)
        if m and (ch.isdigit() or (ch == "." and pos + 1 < size and text[pos + 1].isdigit())):
            tokens.append(Token(NUMBER, m.group(), start_line, line))
            pos = m.end()
            continue
        m = _IDENT_RE.match(text, pos)
        if m:
            word = m.group()
            tokens.append(Token(KEYWORD if word in keywords else IDENT, word, start_line, line))
            pos = m.end()
            continue
        m = _OP_RE.match(text, pos)
        if m:
            op = m.group()
            if op == "?." and pos + 2 < size and text[pos + 2].isdigit():
                op = "?"
            if op in "([{":
                depth.append(op)
            elif op in _CLOSERS:
                if not depth or depth[-1] != _CLOSERS[op]:
                    raise fail(f"unbalanced {op!r}")
                depth.pop()
            tokens.append(Token(OP, op, start_line, line))
            pos += len(op)
            continue
        raise fail(f"unexpected character {ch!r}")

    if depth:
        raise ParseFailure(f"unclosed {depth[-1]!r} at end of input")
    return tokens


_DIRECTIVE_RE = re.compile(r"#\s*(\w*)\s*(.*)", re.S)


def _directive_parts(body: str) -> tuple[str, str]:
    m = _DIRECTIVE_RE.match(body)
    return (m.group(1), m.group(2).strip()) if m else ("", "")


def _scan_directive(text: str, pos: int) -> tuple[int, str]:
    """End of the directive starting at ``pos`` (its terminating newline) and its text sans comments."""
    size = len(text)
    parts = []
    i = seg = pos
    while i < size:
        c = text[i]
        if c == "\n":
            if text[i - 1] == "\\":
                i += 1
                continue
            break
        if text.startswith("/*", i):
            parts.append(text[seg:i])
            end = text.find("*/", i + 2)
            i = seg = size if end < 0 else end + 2
            continue
        if text.startswith("//", i):
            parts.append(text[seg:i])
            end = text.find("\n", i)
            i = seg = size if end < 0 else end
            break
        if c in "\"'":
            end = _scan_string(text, i, c)
            i = end if end > 0 else i + 1
            continue
        i += 1
    parts.append(text[seg:i])
    return i, " ".join("".join(parts).replace("\\\n", " ").split())


def _skip_group(text: str, pos: int, stop_at_else: bool) -> tuple[int, int]:
    """Skip an inactive conditional group; returns (position, newlines skipped).

    Stops at the ``#endif`` closing the group, or with ``stop_at_else`` at an
    ``#else``/``#elif`` of the same nesting level, leaving ``pos`` at the end
    of that directive line.
    """
    nest = 0
    i = pos
    size = len(text)
    at_start = False
    while i < size:
        c = text[i]
        if c == "\n":
            at_start = True
            i += 1
            continue
        if c in " \t\r\f\v":
            i += 1
            continue
        if text.startswith("/*", i):
            end = text.find("*/", i + 2)
            i = size if end < 0 else end + 2
            continue
        if text.startswith("//", i):
            end = text.find("\n", i)
            i = size if end < 0 else end
            continue
        if c == "#" and at_start:
            end, body = _scan_directive(text, i)
            name, _ = _directive_parts(body)
            if name in ("if", "ifdef", "ifndef"):
                nest += 1
            elif name == "endif":
                if nest == 0:
                    return end, text.count("\n", pos, end)
                nest -= 1
            elif name in ("else", "elif") and nest == 0 and stop_at_else:
                return end, text.count("\n", pos, end)
            i = end
            at_start = False
            continue
        at_start = False
        i += 1
    return size, text.count("\n", pos, size)


def _escaped(text: str, idx: int) -> bool:
    count = 0
    idx -= 1
    while idx >= 0 and text[idx] == "\\":
        count += 1
        idx -= 1
    return count % 2 == 1


def _scan_string(text: str, pos: int, quote: str) -> int:
    """Return the index after the closing quote, or -1 if unterminated."""
    i = pos + 1
    size = len(text)
    while i < size:
        c = text[i]
        if c == "\\":
            i += 2
            continue
        if c == quote:
            return i + 1
        if c == "\n" and quote != "`":
            return -1
        i += 1
    return -1


def _regex_allowed(tokens: list[Token]) -> bool:
    if not tokens:
        return True
    prev = tokens[-1]
    if prev.kind == OP:
        return prev.text not in (")", "]", "}", "++", "--")
    if prev.kind == KEYWORD:
        return prev.text in _REGEX_PRECEDING_KEYWORDS
    return False


def _scan_regex(text: str, pos: int) -> int:
    i = pos + 1
    size = len(text)
    in_class = False
    while i < size:
        c = text[i]
        if c == "\n":
            return -1
        if c == "\\":
            i += 2
            continue
        if c == "[":
            in_class = True
        elif c == "]":
            in_class = False
        elif c == "/" and not in_class:
            i += 1
            while i < size and (text[i].isalpha()):
                i += 1
            return i
        i += 1
    return -1


def source_lines(tokens: list[Token]) -> int:
    """Number of distinct lines carrying at least one token (SLOC)."""
    lines: set[int] = set()
    for tok in tokens:
        lines.update(range(tok.line, tok.end_line + 1))
    return len(lines)
