"""Per-file raw metrics: cyclomatic complexity, Halstead volume/difficulty, SLOC."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from typing import Optional

from ..errors import ParseFailure
from .profiles import (
    DECISION_KEYWORDS,
    DECISION_OPERATORS,
    LITERAL_KEYWORDS,
    OPERATOR_KEYWORDS,
    Profile,
    get_profile,
)
from .tokens import DIRECTIVE, IDENT, KEYWORD, OP, Token, source_lines, tokenize

MAX_FILE_BYTES = 1024 * 1024

METRIC_IDS = ("cc", "hv", "hd", "Ca", "Ce", "sloc")

_FUNCTION_QUALIFIERS = {"const", "override", "noexcept", "final", "mutable"}
_PAIR_OPENERS = {"(": "()", "[": "[]", "{": "{}"}


@dataclass(frozen=True)
class MetricVector:
    """Raw metric values of one file at one revision; absent metrics are None."""

    cc: Optional[float] = None
    hv: Optional[float] = None
    hd: Optional[float] = None
    Ca: Optional[float] = None
    Ce: Optional[float] = None
    sloc: Optional[float] = None

    def to_json(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self) if getattr(self, f.name) is not None}

    @classmethod
    def from_json(cls, d: dict) -> "MetricVector":
        return cls(**{k: d[k] for k in METRIC_IDS if d.get(k) is not None})

    def present(self) -> dict:
        return self.to_json()

    def merged(self, other: "MetricVector") -> "MetricVector":
        """Values of ``other`` win where present."""
        values = self.to_json()
        values.update(other.to_json())
        return MetricVector(**values)


@dataclass(frozen=True)
class HalsteadCounts:
    eta1: int
    N1: int
    eta2: int
    N2: int

    @property
    def vocabulary(self) -> int:
        return self.eta1 + self.eta2

    @property
    def length(self) -> int:
        return self.N1 + self.N2

    @property
    def volume(self) -> float:
        eta = self.vocabulary
        if eta == 0:
            return 0.0
        return self.length * math.log2(eta)

    @property
    def difficulty(self) -> float:
        if self.eta2 == 0:
            return 0.0
        return (self.eta1 / 2) * (self.N2 / self.eta2)


@dataclass
class FunctionSpan:
    name: str
    line: int
    body_open: int
    body_close: int
    decision_points: int = 0

    @property
    def cc(self) -> int:
        return self.decision_points + 1


@dataclass
class SourceAnalysis:
    tokens: list
    functions: list = field(default_factory=list)
    halstead: Optional[HalsteadCounts] = None
    sloc: int = 0

    @property
    def cc(self) -> int:
        return max((f.cc for f in self.functions), default=0)

    def vector(self) -> MetricVector:
        h = self.halstead
        return MetricVector(cc=self.cc, hv=h.volume, hd=h.difficulty, sloc=self.sloc)


def bracket_pairs(tokens: list[Token]) -> dict[int, int]:
    """Map every bracket token index to the index of its partner."""
    pairs: dict[int, int] = {}
    stack: list[int] = []
    for i, tok in enumerate(tokens):
        if tok.kind != OP:
            continue
        if tok.text in "([{":
            stack.append(i)
        elif tok.text in ")]}":
            j = stack.pop()
            pairs[i] = j
            pairs[j] = i
    return pairs


def _function_name(tokens: list[Token], pairs: dict[int, int], brace: int) -> Optional[str]:
    """Name of the function whose body opens at ``brace``, or None if it is not a body."""
    j = brace - 1
    if j < 0:
        return None
    prev = tokens[j]
    if prev.kind == OP and prev.text in ("=>", "->"):
        return "<lambda>"
    while j >= 0 and tokens[j].text in _FUNCTION_QUALIFIERS and tokens[j].kind != OP:
        j -= 1
    k = j
    while k >= 0 and (tokens[k].kind == IDENT or (tokens[k].kind == OP and tokens[k].text in ".,")):
        k -= 1
    if k >= 0 and k < j and tokens[k].kind == KEYWORD and tokens[k].text == "throws":
        j = k - 1
    if j < 0 or tokens[j].kind != OP or tokens[j].text != ")":
        return None
    head_idx = pairs[j] - 1
    if head_idx < 0:
        return None
    head = tokens[head_idx]
    if head.kind == KEYWORD and head.text == "function":
        return "<anonymous>"
    if head.kind != IDENT:
        return None
    before = tokens[head_idx - 1] if head_idx > 0 else None
    if before is not None and before.kind == KEYWORD and before.text == "new":
        return None
    return head.text


def is_ternary(tokens: list[Token], i: int) -> bool:
    """Whether the ``?`` at ``i`` is a conditional operator (not a generic wildcard)."""
    nxt = tokens[i + 1] if i + 1 < len(tokens) else None
    prv = tokens[i - 1] if i > 0 else None
    if nxt is None:
        return False
    if nxt.kind == OP and nxt.text in (">", ",", ")", ">>", ">>>"):
        return False
    if nxt.kind == KEYWORD and nxt.text in ("extends", "super"):
        return False
    if prv is not None and prv.kind == OP and prv.text in ("<", ","):
        return False
    return True


def is_decision(tokens: list[Token], i: int) -> bool:
    tok = tokens[i]
    if tok.kind == KEYWORD:
        return tok.text in DECISION_KEYWORDS
    if tok.kind == OP:
        if tok.text in DECISION_OPERATORS:
            return True
        return tok.text == "?" and is_ternary(tokens, i)
    return False


def find_functions(tokens: list[Token], pairs: Optional[dict[int, int]] = None) -> list[FunctionSpan]:
    """Locate function bodies and count the decision points that belong to each.

    A decision point belongs to the innermost enclosing function body; decisions
    outside any function body are not attributed.
    """
    if pairs is None:
        pairs = bracket_pairs(tokens)
    functions: list[FunctionSpan] = []
    stack: list[Optional[FunctionSpan]] = []
    for i, tok in enumerate(tokens):
        if tok.kind == OP and tok.text == "{":
            name = _function_name(tokens, pairs, i)
            if name is None:
                stack.append(None)
            else:
                fn = FunctionSpan(name, tok.line, i, pairs[i])
                functions.append(fn)
                stack.append(fn)
            continue
        if tok.kind == OP and tok.text == "}":
            stack.pop()
            continue
        if is_decision(tokens, i):
            for frame in reversed(stack):
                if frame is not None:
                    frame.decision_points += 1
                    break
    return functions


def halstead_counts(tokens: list[Token]) -> HalsteadCounts:
    """Operator/operand tallies.

    Operators: computation and control keywords, punctuation, and call sites
    (``name(`` counts as the single operator ``name()`` and absorbs its
    parentheses). Bracket pairs count once, at the opening bracket.
    Operands: identifiers, literals, and literal-like keywords.
    """
    operators: dict[str, int] = {}
    operands: dict[str, int] = {}
    absorbed = set()
    n = len(tokens)
    for i, tok in enumerate(tokens):
        kind, text = tok.kind, tok.text
        if kind == DIRECTIVE or i in absorbed:
            continue
        if kind == OP:
            if text in ")]}":
                continue
            key = _PAIR_OPENERS.get(text, text)
            operators[key] = operators.get(key, 0) + 1
        elif kind == KEYWORD:
            if text in OPERATOR_KEYWORDS:
                operators[text] = operators.get(text, 0) + 1
            elif text in LITERAL_KEYWORDS:
                operands[text] = operands.get(text, 0) + 1
        elif kind == IDENT and i + 1 < n and tokens[i + 1].kind == OP and tokens[i + 1].text == "(":
            key = text + "()"
            operators[key] = operators.get(key, 0) + 1
            absorbed.add(i + 1)
        else:
            operands[text] = operands.get(text, 0) + 1
    return HalsteadCounts(
        eta1=len(operators), N1=sum(operators.values()),
        eta2=len(operands), N2=sum(operands.values()),
    )


def analyze_tokens(text: str, profile: Profile) -> SourceAnalysis:
    if len(text.encode("utf-8", "surrogatepass")) > MAX_FILE_BYTES:
        raise ParseFailure("file exceeds 1 MiB")
    tokens = tokenize(text, profile)
    pairs = bracket_pairs(tokens)
    return SourceAnalysis(
        tokens=tokens,
        functions=find_functions(tokens, pairs),
        halstead=halstead_counts(tokens),
        sloc=source_lines(tokens),
    )


def analyze_source(text: str, profile: str = "c-family") -> MetricVector:
    """Raw metrics of one source file; coupling fields are left absent.

    The file's ``cc`` is the maximum over its functions (0 with no functions).
    Raises ParseFailure for malformed or oversized input.
    """
    return analyze_tokens(text, get_profile(profile)).vector()


def analyze_functions(text: str, profile: str = "c-family") -> list[FunctionSpan]:
    return analyze_tokens(text, get_profile(profile)).functions
