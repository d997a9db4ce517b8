"""Explicit control-flow graphs for function bodies.

The builder covers structured brace-block code: blocks, if/else, while,
do-while, for and for-each, switch with fall-through or arrow cases,
try/catch/finally, return/throw, break/continue and labels. Short-circuit
operators in branch conditions become chains of condition nodes; other
decisions inside expressions become two-way diamonds. Returns and throws
edge into a single virtual exit node, so every function has ``p == 1``.

Only nodes reachable from the entry are counted.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Optional

from .metrics import FunctionSpan, bracket_pairs, is_decision
from .tokens import KEYWORD, OP, IDENT, Token

OPAQUE = "opaque"

_STATEMENT_END_AFTER_OPAQUE = {"{", "}"}


@dataclass(frozen=True)
class ControlFlowSummary:
    e: int
    n: int
    p: int
    decision_points: int

    @property
    def cyclomatic(self) -> int:
        return self.e - self.n + 2 * self.p


@dataclass
class _Loop:
    brk: int
    cont: Optional[int]


class _Builder:
    def __init__(self, tokens: list[Token]) -> None:
        self.toks = tokens
        self.pairs = bracket_pairs(tokens)
        self.decision = [is_decision(tokens, i) for i in range(len(tokens))]
        self.count = 0
        self.edges: list[tuple[int, int]] = []
        self.loops: list[_Loop] = []
        self.i = 0
        self.entry = self.node()
        self.exit = self.node()

    def node(self) -> int:
        self.count += 1
        return self.count - 1

    def edge(self, a: Optional[int], b: int) -> None:
        if a is not None:
            self.edges.append((a, b))

    def at(self, kind: str, text: str) -> bool:
        if self.i >= len(self.toks):
            return False
        tok = self.toks[self.i]
        return tok.kind == kind and tok.text == text

    def paren(self) -> range:
        """Consume a parenthesised group and return the index range inside it."""
        if not self.at(OP, "("):
            return range(self.i, self.i)
        close = self.pairs[self.i]
        inner = range(self.i + 1, close)
        self.i = close + 1
        return inner

    def expr(self, idx: range | list, pred: Optional[int]) -> int:
        cur = self.node()
        self.edge(pred, cur)
        for k in idx:
            if self.decision[k]:
                d, j = self.node(), self.node()
                self.edge(cur, d)
                self.edge(d, j)
                self.edge(d, j)
                cur = j
        return cur

    def cond(self, idx: range | list, pred: Optional[int], on_true: int, on_false: int) -> int:
        head = self.node()
        self.edge(pred, head)
        chain = []
        cur = head
        for k in idx:
            tok = self.toks[k]
            if tok.kind == OP and tok.text in ("&&", "||"):
                chain.append(tok.text)
            elif self.decision[k]:
                d, j = self.node(), self.node()
                self.edge(cur, d)
                self.edge(d, j)
                self.edge(d, j)
                cur = j
        atom = self.node()
        self.edge(cur, atom)
        for op in chain:
            nxt = self.node()
            self.edge(atom, nxt)
            self.edge(atom, on_true if op == "||" else on_false)
            atom = nxt
        self.edge(atom, on_true)
        self.edge(atom, on_false)
        return head

    def skip_to_semicolon(self) -> range:
        start = self.i
        while self.i < len(self.toks):
            tok = self.toks[self.i]
            if tok.kind == OP and tok.text == ";":
                self.i += 1
                return range(start, self.i - 1)
            if tok.kind == OP and tok.text == "}":
                return range(start, self.i)
            if tok.kind == OP and tok.text in "([{":
                self.i = self.pairs[self.i] + 1
                continue
            self.i += 1
        return range(start, self.i)

    def expression_statement(self, pred: int) -> int:
        start = self.i
        toks = self.toks
        while self.i < len(toks):
            tok = toks[self.i]
            if tok.kind == OP and tok.text == ";":
                end = self.i
                self.i += 1
                return self.expr(range(start, end), pred)
            if tok.kind == OP and tok.text == "}":
                break
            if tok.kind == OP and tok.text in "([{":
                self.i = self.pairs[self.i] + 1
                continue
            self.i += 1
            if tok.kind == OPAQUE and self.i < len(toks):
                nxt = toks[self.i]
                if nxt.kind != OP or nxt.text in _STATEMENT_END_AFTER_OPAQUE:
                    break
        return self.expr(range(start, self.i), pred)

    def block_until(self, pred: int, stop) -> int:
        cur = pred
        while self.i < len(self.toks) and not stop(self.toks[self.i]):
            before = self.i
            cur = self.stmt(cur)
            if self.i == before:
                self.i += 1
        return cur

    def stmt(self, pred: int) -> int:
        tok = self.toks[self.i]
        if tok.kind == OP:
            if tok.text == "{":
                close = self.pairs[self.i]
                self.i += 1
                out = self.block_until(pred, lambda t: t is self.toks[close])
                self.i = close + 1
                return out
            if tok.text == ";":
                self.i += 1
                return pred
        if tok.kind == IDENT and self.i + 1 < len(self.toks):
            nxt = self.toks[self.i + 1]
            if nxt.kind == OP and nxt.text == ":":
                self.i += 2
                return self.stmt(pred)
        if tok.kind == KEYWORD:
            handler = getattr(self, "_kw_" + tok.text, None)
            if handler is not None:
                self.i += 1
                return handler(pred)
        return self.expression_statement(pred)

    def _kw_if(self, pred: int) -> int:
        on_true, on_false = self.node(), self.node()
        self.cond(self.paren(), pred, on_true, on_false)
        then_out = self.stmt(on_true)
        else_out = on_false
        if self.at(KEYWORD, "else"):
            self.i += 1
            else_out = self.stmt(on_false)
        join = self.node()
        self.edge(then_out, join)
        self.edge(else_out, join)
        return join

    def _kw_while(self, pred: int) -> int:
        body, done = self.node(), self.node()
        head = self.cond(self.paren(), pred, body, done)
        self.loops.append(_Loop(done, head))
        out = self.stmt(body)
        self.loops.pop()
        self.edge(out, head)
        return done

    def _kw_do(self, pred: int) -> int:
        body, again, done = self.node(), self.node(), self.node()
        self.edge(pred, body)
        self.loops.append(_Loop(done, again))
        out = self.stmt(body)
        self.loops.pop()
        self.edge(out, again)
        if self.at(KEYWORD, "while"):
            self.i += 1
            self.cond(self.paren(), again, body, done)
        if self.at(OP, ";"):
            self.i += 1
        return done

    def _kw_for(self, pred: int) -> int:
        header = list(self.paren())
        parts: list[list[int]] = [[]]
        skip_until = -1
        for k in header:
            if k <= skip_until:
                parts[-1].append(k)
                continue
            tok = self.toks[k]
            if tok.kind == OP and tok.text in "([{":
                skip_until = self.pairs[k]
            if tok.kind == OP and tok.text == ";" and k > skip_until:
                parts.append([])
            else:
                parts[-1].append(k)
        body, done = self.node(), self.node()
        if len(parts) == 3:
            init = self.expr(parts[0], pred)
            update = self.node()
            head = self.cond(parts[1], init, body, done)
            self.loops.append(_Loop(done, update))
            out = self.stmt(body)
            self.loops.pop()
            self.edge(out, update)
            self.edge(self.expr(parts[2], update), head)
            return done
        source = self.expr(header, pred)
        head = self.node()
        self.edge(source, head)
        self.edge(head, body)
        self.edge(head, done)
        self.loops.append(_Loop(done, head))
        out = self.stmt(body)
        self.loops.pop()
        self.edge(out, head)
        return done

    def _kw_switch(self, pred: int) -> int:
        selector = self.expr(self.paren(), pred)
        done = self.node()
        if not self.at(OP, "{"):
            self.edge(selector, done)
            return done
        close = self.pairs[self.i]
        self.i += 1
        outer_cont = self.loops[-1].cont if self.loops else None
        self.loops.append(_Loop(done, outer_cont))
        case_targets: list[int] = []
        default_target: Optional[int] = None
        prev_out: Optional[int] = None

        def is_label(t: Token) -> bool:
            return t.kind == KEYWORD and t.text in ("case", "default")

        while self.i < close:
            if not is_label(self.toks[self.i]):
                self.stmt(self.node())
                continue
            group = self.node()
            self.edge(prev_out, group)
            arrow = False
            while self.i < close and is_label(self.toks[self.i]):
                if self.toks[self.i].text == "case":
                    case_targets.append(group)
                else:
                    default_target = group
                self.i += 1
                while self.i < close:
                    t = self.toks[self.i]
                    if t.kind == OP and t.text in (":", "->"):
                        arrow = t.text == "->"
                        self.i += 1
                        break
                    if t.kind == OP and t.text in "([{":
                        self.i = self.pairs[self.i] + 1
                    else:
                        self.i += 1
                if arrow:
                    break
            if arrow:
                self.edge(self.stmt(group), done)
                prev_out = None
            else:
                prev_out = self.block_until(group, lambda t: t is self.toks[close] or is_label(t))
        self.edge(prev_out, done)
        self.i = close + 1
        self.loops.pop()

        test = selector
        for target in case_targets:
            t = self.node()
            self.edge(test, t)
            self.edge(t, target)
            test = t
        self.edge(test, default_target if default_target is not None else done)
        return done

    def _kw_try(self, pred: int) -> int:
        start = self.expr(self.paren(), pred) if self.at(OP, "(") else pred
        dispatch = self.node()
        self.edge(start, dispatch)
        body, join = self.node(), self.node()
        self.edge(self.stmt(body), join)
        handlers = []
        while self.at(KEYWORD, "catch"):
            self.i += 1
            self.paren()
            handler = self.node()
            self.edge(self.stmt(handler), join)
            handlers.append(handler)
        test = dispatch
        for handler in handlers:
            t = self.node()
            self.edge(test, t)
            self.edge(t, handler)
            test = t
        self.edge(test, body)
        if self.at(KEYWORD, "finally"):
            self.i += 1
            fin = self.node()
            self.edge(join, fin)
            return self.stmt(fin)
        return join

    def _kw_return(self, pred: int) -> int:
        self.edge(self.expr(self.skip_to_semicolon(), pred), self.exit)
        return self.node()

    _kw_throw = _kw_return

    def _kw_break(self, pred: int) -> int:
        self.skip_to_semicolon()
        if self.loops:
            self.edge(pred, self.loops[-1].brk)
        return self.node()

    def _kw_continue(self, pred: int) -> int:
        self.skip_to_semicolon()
        target = next((lp.cont for lp in reversed(self.loops) if lp.cont is not None), None)
        if target is not None:
            self.edge(pred, target)
        return self.node()

    def _kw_synchronized(self, pred: int) -> int:
        return self.stmt(self.expr(self.paren(), pred))

    def build(self) -> tuple[int, int]:
        out = self.block_until(self.entry, lambda t: False)
        self.edge(out, self.exit)
        succ: dict[int, list[int]] = {}
        for a, b in self.edges:
            succ.setdefault(a, []).append(b)
        seen = {self.entry}
        queue = deque([self.entry])
        while queue:
            for b in succ.get(queue.popleft(), ()):
                if b not in seen:
                    seen.add(b)
                    queue.append(b)
        edges = sum(1 for a, _ in self.edges if a in seen)
        return edges, len(seen)


def function_body(tokens: list[Token], fn: FunctionSpan, functions: list[FunctionSpan]) -> list[Token]:
    """Tokens of ``fn``'s body with nested function bodies collapsed to one opaque token."""
    body: list[Token] = []
    i = fn.body_open + 1
    nested = {f.body_open: f.body_close for f in functions if fn.body_open < f.body_open < fn.body_close}
    while i < fn.body_close:
        if i in nested:
            tok = tokens[i]
            body.append(Token(OPAQUE, "{...}", tok.line, tokens[nested[i]].end_line))
            i = nested[i] + 1
            continue
        body.append(tokens[i])
        i += 1
    return body


def control_flow_summary(tokens: list[Token], fn: FunctionSpan, functions: list[FunctionSpan]) -> ControlFlowSummary:
    builder = _Builder(function_body(tokens, fn, functions))
    e, n = builder.build()
    return ControlFlowSummary(e=e, n=n, p=1, decision_points=fn.decision_points)
