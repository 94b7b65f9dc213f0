"""Concrete syntax for processes and term files.

Grammar (loosest to tightest): probabilistic choice `P (+p) Q`, sum `+`,
parallel `|`, then the unary layer (prefixes `a(x).`, `a!b.`, `w1.`, `tau.`,
guards `[x=y]` / `[x!=y]`, restriction `new x.`), then `0` and parentheses.
`+` and `|` associate to the left, `(+p)` to the right.

Probabilistic choice is only admitted at the top level, under a prefix, or
inside parentheses occurring at those positions; elsewhere it is a sort
error.  Success names are those declared (file header `success w1 w2` or an
explicit set) plus the identifiers matching w, w0, w1, ...; they may appear
only as prefixes `w.P`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from .terms import (
    InputPrefix,
    NIL_PROC,
    Match,
    Mismatch,
    Name,
    NIL,
    Nil,
    OutputPrefix,
    Par,
    PChoice,
    ProcTerm,
    Restrict,
    StateProc,
    StateTerm,
    Sum,
    barendregt,
    fn_proc,
    success_prefix,
    tau_prefix,
)

_SUCCESS_CONVENTION = re.compile(r"w\d*\Z")

_TOKEN_RE = re.compile(
    r"""
    (?P<WS>[ \t]+)
  | (?P<NAME>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<INT>\d+)
  | (?P<DEFINE>:=)
  | (?P<NE>!=)
  | (?P<SYM>[()\[\].!=+|/,])
    """,
    re.VERBOSE,
)

_KEYWORDS = {"new", "tau", "success"}


class ParseError(ValueError):
    def __init__(self, msg: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {msg}")
        self.line = line
        self.col = col


class SortError(ParseError):
    pass


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str, line0: int = 1) -> list[Token]:
    out: list[Token] = []
    for lineno, line in enumerate(text.split("\n"), start=line0):
        line = line.split("#", 1)[0]
        pos = 0
        while pos < len(line):
            m = _TOKEN_RE.match(line, pos)
            if not m:
                raise ParseError(f"unexpected character {line[pos]!r}", lineno, pos + 1)
            kind = m.lastgroup
            if kind != "WS":
                text_ = m.group()
                if kind == "SYM" or kind == "NE" or kind == "DEFINE":
                    kind = text_
                out.append(Token(kind, text_, lineno, m.start() + 1))
            pos = m.end()
    out.append(Token("EOF", "", line0 + text.count("\n"), len(text.split("\n")[-1]) + 1))
    return out


class _Parser:
    def __init__(self, tokens: list[Token], successes: set[str]):
        self.toks = tokens
        self.i = 0
        self.successes = successes

    def peek(self, off: int = 0) -> Token:
        return self.toks[min(self.i + off, len(self.toks) - 1)]

    def next(self) -> Token:
        t = self.toks[self.i]
        if t.kind != "EOF":
            self.i += 1
        return t

    def expect(self, kind: str) -> Token:
        t = self.peek()
        if t.kind != kind:
            raise ParseError(f"expected {kind!r}, found {t.text or 'end of input'!r}", t.line, t.col)
        return self.next()

    def err(self, msg: str) -> ParseError:
        t = self.peek()
        return ParseError(msg, t.line, t.col)

    def is_success(self, ident: str) -> bool:
        return ident in self.successes or bool(_SUCCESS_CONVENTION.match(ident))

    def mk_name(self, tok: Token) -> Name:
        if tok.text in _KEYWORDS:
            raise ParseError(f"{tok.text!r} is a keyword", tok.line, tok.col)
        return Name(tok.text, success=self.is_success(tok.text))

    def channel_name(self, tok: Token) -> Name:
        n = self.mk_name(tok)
        if n.success:
            raise ParseError(f"success name {n} used where a channel is required", tok.line, tok.col)
        return n

    def rational(self) -> Fraction:
        num = self.expect("INT")
        if self.peek().kind == "/":
            self.next()
            den = self.expect("INT")
            try:
                return Fraction(int(num.text), int(den.text))
            except ZeroDivisionError:
                raise ParseError("zero denominator", den.line, den.col) from None
        return Fraction(int(num.text))

    # Every level parses process terms; probabilistic choice is demoted to
    # a sort error only where it lands in a state position (operand of +,
    # |, a guard, or a restriction).
    def parse_proc(self) -> ProcTerm:
        left = self.parse_sum()
        if self.peek().kind == "(" and self.peek(1).kind == "+":
            tok = self.next()
            self.next()
            p = self.rational()
            self.expect(")")
            if not 0 < p <= 1:
                raise ParseError(f"probability {p} outside (0,1]", tok.line, tok.col)
            right = self.parse_proc()
            return PChoice(p, left, right)
        return left

    def parse_sum(self) -> ProcTerm:
        first = self.parse_par()
        if self.peek().kind != "+":
            return first
        tok = self.peek()
        acc = _demote(first, tok.line, tok.col)
        while self.peek().kind == "+":
            tok = self.next()
            acc = Sum(acc, _demote(self.parse_par(), tok.line, tok.col))
        return StateProc(acc)

    def parse_par(self) -> ProcTerm:
        first = self.parse_unary()
        if self.peek().kind != "|":
            return first
        tok = self.peek()
        acc = _demote(first, tok.line, tok.col)
        while self.peek().kind == "|":
            tok = self.next()
            acc = Par(acc, _demote(self.parse_unary(), tok.line, tok.col))
        return StateProc(acc)

    def parse_unary(self) -> ProcTerm:
        t = self.peek()
        if t.kind == "[":
            self.next()
            x = self.channel_name(self.expect("NAME"))
            op = self.next()
            if op.kind not in ("=", "!="):
                raise ParseError("expected '=' or '!=' in guard", op.line, op.col)
            y = self.channel_name(self.expect("NAME"))
            self.expect("]")
            body = _demote(self.parse_unary(), t.line, t.col)
            return StateProc(Match(x, y, body) if op.kind == "=" else Mismatch(x, y, body))
        if t.kind == "NAME" and t.text == "new":
            self.next()
            x = self.channel_name(self.expect("NAME"))
            self.expect(".")
            return StateProc(Restrict(x, _demote(self.parse_unary(), t.line, t.col)))
        if t.kind == "NAME" and t.text == "tau":
            self.next()
            self.expect(".")
            # expanded after the full parse, once all names are known
            return StateProc(_TauStub(self.parse_unary()))
        if t.kind == "NAME":
            name_tok = self.next()
            n = self.mk_name(name_tok)
            nxt = self.peek()
            if n.success:
                if nxt.kind != ".":
                    raise ParseError(
                        f"success name {n} must form a prefix {n}.P", name_tok.line, name_tok.col
                    )
                self.next()
                return StateProc(success_prefix(n, self.parse_unary()))
            if nxt.kind == "(":
                self.next()
                x = self.channel_name(self.expect("NAME"))
                self.expect(")")
                self.expect(".")
                return StateProc(InputPrefix(n, x, self.parse_unary()))
            if nxt.kind == "!":
                self.next()
                o = self.mk_name(self.expect("NAME"))
                if o.success:
                    raise ParseError(f"success name {o} cannot be an output object", nxt.line, nxt.col)
                self.expect(".")
                return StateProc(OutputPrefix(n, o, self.parse_unary()))
            raise ParseError(
                f"name {n} must start a prefix: {n}(x).P or {n}!y.P", name_tok.line, name_tok.col
            )
        if t.kind == "INT" and t.text == "0":
            self.next()
            return NIL_PROC
        if t.kind == "(":
            self.next()
            inner = self.parse_proc()
            self.expect(")")
            return inner
        raise self.err(f"unexpected {t.text or 'end of input'!r}")


@dataclass(frozen=True)
class _TauStub:
    """Placeholder for `tau.P` until the whole term's names are known."""

    body: ProcTerm


def _demote(p: ProcTerm, line: int, col: int) -> StateTerm:
    if isinstance(p, PChoice):
        raise SortError("probabilistic choice in a state position (allowed only under a prefix)", line, col)
    return p.state


def _expand_tau_state(s, avoid: set[Name]):
    if isinstance(s, _TauStub):
        return tau_prefix(_expand_tau_proc(s.body, avoid), avoid)
    match s:
        case Nil():
            return s
        case InputPrefix(subject=a, binder=x, body=b):
            return InputPrefix(a, x, _expand_tau_proc(b, avoid))
        case OutputPrefix(subject=a, obj=o, body=b):
            return OutputPrefix(a, o, _expand_tau_proc(b, avoid))
        case Match(left=x, right=y, body=b):
            return Match(x, y, _expand_tau_state(b, avoid))
        case Mismatch(left=x, right=y, body=b):
            return Mismatch(x, y, _expand_tau_state(b, avoid))
        case Sum(left=l, right=r):
            return Sum(_expand_tau_state(l, avoid), _expand_tau_state(r, avoid))
        case Par(left=l, right=r):
            return Par(_expand_tau_state(l, avoid), _expand_tau_state(r, avoid))
        case Restrict(binder=x, body=b):
            return Restrict(x, _expand_tau_state(b, avoid))
    raise TypeError(s)


def _expand_tau_proc(p: ProcTerm, avoid: set[Name]) -> ProcTerm:
    match p:
        case StateProc(state=s):
            return StateProc(_expand_tau_state(s, avoid))
        case PChoice(prob=q, left=l, right=r):
            return PChoice(q, _expand_tau_proc(l, avoid), _expand_tau_proc(r, avoid))
    raise TypeError(p)


def parse(text: str, successes: Iterable[str] = (), line0: int = 1) -> ProcTerm:
    """Parse a process term; the result satisfies the Barendregt convention."""
    tokens = _tokenize(text, line0)
    all_names = {Name(t.text) for t in tokens if t.kind == "NAME" and t.text not in _KEYWORDS}
    parser = _Parser(tokens, set(successes))
    raw = parser.parse_proc()
    tok = parser.peek()
    if tok.kind != "EOF":
        raise ParseError(f"trailing input {tok.text!r}", tok.line, tok.col)
    expanded = _expand_tau_proc(raw, all_names)
    return barendregt(expanded)


def parse_file(text: str) -> tuple[dict[str, ProcTerm], set[str]]:
    """Parse a term file: `success w1 w2` headers and `name := term` lines."""
    successes: set[str] = set()
    raw_defs: list[tuple[str, str, int]] = []
    for lineno, line in enumerate(text.split("\n"), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if stripped.startswith("success"):
            for w in stripped[len("success"):].split():
                if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_']*", w):
                    raise ParseError(f"bad success name {w!r}", lineno, 1)
                successes.add(w)
            continue
        if ":=" not in stripped:
            raise ParseError("expected `name := term`", lineno, 1)
        lhs, rhs = stripped.split(":=", 1)
        lhs = lhs.strip()
        if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_']*", lhs):
            raise ParseError(f"bad definition name {lhs!r}", lineno, 1)
        raw_defs.append((lhs, rhs, lineno))
    defs: dict[str, ProcTerm] = {}
    for lhs, rhs, lineno in raw_defs:
        if lhs in defs:
            raise ParseError(f"duplicate definition {lhs!r}", lineno, 1)
        defs[lhs] = parse(rhs, successes, line0=lineno)
    return defs, successes


def parse_state(text: str, successes: Iterable[str] = ()) -> StateTerm:
    p = parse(text, successes)
    if isinstance(p, PChoice):
        raise SortError("expected a state term, found probabilistic choice", 1, 1)
    return p.state
