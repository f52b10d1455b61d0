"""Concrete text syntax for protocols.

Grammar (``.`` is right associative, ``//`` starts a line comment)::

    S   ::= end | IDENT | rec IDENT . S | PFX . S | OP { LABEL : S (, LABEL : S)* }
    PFX ::= !IDENT | ?IDENT | IDENT | assert(IDENT) | require(IDENT) | consume(IDENT)
    OP  ::= + | sel | bra          (also accepted: ⊕ for sel, & for bra)

A bare identifier followed by ``.`` is a neutral action (CCS style names);
a bare identifier anywhere else is a recursion variable.

Files hold one or more ``protocol NAME = S`` blocks.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

from protoweave.protocol import (
    ASSERTION_KINDS,
    Action,
    Choice,
    ChoiceOp,
    End,
    Polarity,
    Prefix,
    Protocol,
    Rec,
    ValidationError,
    Var,
    _Assertion,
    rename_apart,
    validate,
)

FILE_SUFFIX = ".proto-ic"

KEYWORDS = {"end", "rec", "assert", "require", "consume", "sel", "bra", "protocol"}
_OPS = {"+": ChoiceOp.PLAIN, "sel": ChoiceOp.SELECT, "⊕": ChoiceOp.SELECT,
        "bra": ChoiceOp.OFFER, "&": ChoiceOp.OFFER}

_TOKEN_RE = re.compile(
    r"""(?P<ws>[ \t\r\n]+)
      |(?P<comment>//[^\n]*)
      |(?P<ident>[A-Za-z_][A-Za-z0-9_]*)
      |(?P<punct>[!?.{}:,()+=&⊕])
    """,
    re.VERBOSE,
)


class ParseError(Exception):
    def __init__(self, message, line=0, col=0, origin=None):
        self.message = message
        self.line = line
        self.col = col
        self.origin = origin
        where = f"{origin}:" if origin else ""
        super().__init__(f"{where}{line}:{col}: {message}")


@dataclass(frozen=True)
class SourceText:
    text: str
    origin: Optional[str] = None


@dataclass(frozen=True)
class Token:
    kind: str  # "ident", "punct" or "eof"
    value: str
    line: int
    col: int


def tokenize(text: str, origin=None) -> list[Token]:
    toks = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1, origin)
        kind = m.lastgroup
        if kind in ("ident", "punct"):
            toks.append(Token(kind, m.group(), line, pos - line_start + 1))
        chunk = m.group()
        nl = chunk.count("\n")
        if nl:
            line += nl
            line_start = pos + chunk.rfind("\n") + 1
        pos = m.end()
    toks.append(Token("eof", "", line, pos - line_start + 1))
    return toks


class _Parser:
    def __init__(self, text, origin=None):
        self.origin = origin
        self.toks = tokenize(text, origin)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k=1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def error(self, msg, tok=None):
        tok = tok or self.tok
        return ParseError(msg, tok.line, tok.col, self.origin)

    def advance(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def expect(self, value) -> Token:
        if self.tok.value != value or self.tok.kind == "eof":
            found = self.tok.value or "end of input"
            raise self.error(f"expected {value!r}, found {found!r}")
        return self.advance()

    def ident(self, what="identifier") -> str:
        if self.tok.kind != "ident":
            found = self.tok.value or "end of input"
            raise self.error(f"expected {what}, found {found!r}")
        return self.advance().value

    def protocol(self) -> Protocol:
        t = self.tok
        if t.kind == "punct" and t.value in "!?":
            self.advance()
            pol = Polarity.SEND if t.value == "!" else Polarity.RECEIVE
            payload = self.ident("message name")
            self.expect(".")
            return Prefix(Action(pol, payload), self.protocol())
        if t.kind == "punct" and t.value in _OPS:
            return self.choice(_OPS[self.advance().value])
        if t.kind != "ident":
            found = t.value or "end of input"
            raise self.error(f"expected a protocol, found {found!r}")
        word = t.value
        if word == "end":
            self.advance()
            return End()
        if word == "rec":
            self.advance()
            var = self.ident("recursion variable")
            self.expect(".")
            return Rec(var, self.protocol())
        if word in ASSERTION_KINDS and self.peek().value == "(":
            self.advance()
            self.expect("(")
            name = self.ident("assertion name")
            self.expect(")")
            self.expect(".")
            return ASSERTION_KINDS[word](name, self.protocol())
        if word in _OPS and self.peek().value == "{":
            self.advance()
            return self.choice(_OPS[word])
        if word in KEYWORDS:
            raise self.error(f"unexpected keyword {word!r}")
        self.advance()
        if self.tok.value == ".":
            self.advance()
            return Prefix(Action(Polarity.NEUTRAL, word), self.protocol())
        return Var(word)

    def choice(self, op) -> Protocol:
        self.expect("{")
        branches = []
        while True:
            label = self.ident("branch label")
            self.expect(":")
            branches.append((label, self.protocol()))
            if self.tok.value == ",":
                self.advance()
                continue
            self.expect("}")
            return Choice(op, tuple(branches))


def _finish(s: Protocol, origin=None, line=0) -> Protocol:
    s = rename_apart(s)
    violations = validate(s)
    if violations:
        raise ValidationError(violations)
    return s


def parse(src, origin=None) -> Protocol:
    """Parse one protocol term; returns a validated, binder-fresh protocol."""
    if isinstance(src, SourceText):
        src, origin = src.text, src.origin
    p = _Parser(src, origin)
    s = p.protocol()
    if p.tok.kind != "eof":
        raise p.error(f"unexpected {p.tok.value!r} after protocol")
    return _finish(s, origin)


def parse_file_text(text: str, origin=None) -> dict[str, Protocol]:
    """Parse ``protocol NAME = S`` blocks, keeping file order."""
    p = _Parser(text, origin)
    out: dict[str, Protocol] = {}
    while p.tok.kind != "eof":
        if p.tok.value != "protocol":
            raise p.error(f"expected 'protocol', found {p.tok.value!r}")
        p.advance()
        name_tok = p.tok
        name = p.ident("protocol name")
        if name in out:
            raise p.error(f"duplicate protocol name {name!r}", name_tok)
        p.expect("=")
        body = p.protocol()
        try:
            out[name] = _finish(body, origin)
        except ValidationError as e:
            raise ParseError(f"protocol {name}: {e}", name_tok.line, name_tok.col, origin) from e
    return out


def load_file(path) -> dict[str, Protocol]:
    with open(path, encoding="utf-8") as fh:
        return parse_file_text(fh.read(), str(path))


# -- printing ----------------------------------------------------------------

_OP_WORD = {ChoiceOp.PLAIN: "+", ChoiceOp.SELECT: "sel", ChoiceOp.OFFER: "bra"}


def print_protocol(s: Protocol) -> str:
    parts = []

    def go(t):
        # iterative along the continuation spine, recursive into branches
        while True:
            if isinstance(t, End):
                parts.append("end")
                return
            if isinstance(t, Var):
                parts.append(t.name)
                return
            if isinstance(t, Rec):
                parts.append(f"rec {t.var}.")
                t = t.body
            elif isinstance(t, Prefix):
                parts.append(f"{t.action}.")
                t = t.cont
            elif isinstance(t, _Assertion):
                parts.append(f"{t.keyword}({t.name}).")
                t = t.cont
            elif isinstance(t, Choice):
                parts.append(_OP_WORD[t.op] + "{")
                for k, (label, c) in enumerate(t.branches):
                    if k:
                        parts.append(", ")
                    parts.append(f"{label}: ")
                    go(c)
                parts.append("}")
                return
            else:
                raise TypeError(f"not a protocol: {t!r}")

    go(s)
    return "".join(parts)


def print_file(protocols) -> str:
    """Render ``(name, protocol)`` pairs (or a dict) as a protocol file."""
    items = protocols.items() if isinstance(protocols, dict) else protocols
    return "".join(f"protocol {name} = {print_protocol(s)}\n" for name, s in items)
