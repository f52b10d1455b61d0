"""Abstract syntax of asserted protocols and their structural operations.

Protocols are immutable trees.  Equality is structural, except that the
branches of a choice are compared as a set (their stored order only matters
for printing).  Hashes are cached, so protocols are cheap to use as dict keys
in the LTS explorer and the composition memo table.
"""

from __future__ import annotations

import enum
import itertools
import re
from dataclasses import dataclass
from typing import Iterator, Optional

IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


class ProtocolError(Exception):
    """Base class for errors raised on malformed protocols."""


class CaptureError(ProtocolError):
    pass


class NotARecursion(ProtocolError):
    pass


class UndualizableError(ProtocolError):
    pass


class ValidationError(ProtocolError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


class Polarity(enum.Enum):
    SEND = "!"
    RECEIVE = "?"
    NEUTRAL = ""


class ChoiceOp(enum.Enum):
    PLAIN = "+"
    SELECT = "sel"
    OFFER = "bra"

    @property
    def symbol(self) -> str:
        return {"+": "+", "sel": "⊕", "bra": "&"}[self.value]


@dataclass(frozen=True)
class Action:
    polarity: Polarity
    payload: str

    def __post_init__(self):
        if not IDENT_RE.match(self.payload):
            raise ProtocolError(f"bad action payload {self.payload!r}")

    def __str__(self):
        return self.polarity.value + self.payload

    @classmethod
    def send(cls, payload):
        return cls(Polarity.SEND, payload)

    @classmethod
    def receive(cls, payload):
        return cls(Polarity.RECEIVE, payload)

    @classmethod
    def neutral(cls, payload):
        return cls(Polarity.NEUTRAL, payload)


class Protocol:
    """Common base of the protocol node classes."""

    __slots__ = ()

    def _key(self) -> tuple:
        raise NotImplementedError

    def __hash__(self):
        try:
            return self.__dict__["_hash"]
        except KeyError:
            h = hash((type(self).__name__,) + self._key())
            object.__setattr__(self, "_hash", h)
            return h

    def __eq__(self, other):
        if self is other:
            return True
        if type(self) is not type(other) or hash(self) != hash(other):
            return False
        return self._key() == other._key()

    def __ne__(self, other):
        return not self == other

    def __str__(self):
        from protoweave.syntax import print_protocol

        return print_protocol(self)

    def children(self) -> tuple[Protocol, ...]:
        return ()


@dataclass(frozen=True, eq=False, repr=False)
class End(Protocol):
    def _key(self):
        return ()

    def __repr__(self):
        return "End()"


@dataclass(frozen=True, eq=False)
class Var(Protocol):
    name: str

    def _key(self):
        return (self.name,)


@dataclass(frozen=True, eq=False)
class Rec(Protocol):
    var: str
    body: Protocol

    def _key(self):
        return (self.var, self.body)

    def children(self):
        return (self.body,)


@dataclass(frozen=True, eq=False)
class Prefix(Protocol):
    action: Action
    cont: Protocol

    def _key(self):
        return (self.action, self.cont)

    def children(self):
        return (self.cont,)


@dataclass(frozen=True, eq=False)
class Choice(Protocol):
    op: ChoiceOp
    branches: tuple[tuple[str, Protocol], ...]

    def __post_init__(self):
        object.__setattr__(self, "branches", tuple((l, s) for l, s in self.branches))

    def _key(self):
        return (self.op, frozenset(self.branches))

    def children(self):
        return tuple(s for _, s in self.branches)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(l for l, _ in self.branches)

    def branch(self, label: str) -> Protocol:
        for l, s in self.branches:
            if l == label:
                return s
        raise KeyError(label)


class _Assertion(Protocol):
    """Shared shape of assert/require/consume: a name and a continuation."""

    keyword = ""

    def _key(self):
        return (self.name, self.cont)

    def children(self):
        return (self.cont,)


@dataclass(frozen=True, eq=False)
class Assert(_Assertion):
    name: str
    cont: Protocol
    keyword = "assert"


@dataclass(frozen=True, eq=False)
class Require(_Assertion):
    name: str
    cont: Protocol
    keyword = "require"


@dataclass(frozen=True, eq=False)
class Consume(_Assertion):
    name: str
    cont: Protocol
    keyword = "consume"


ASSERTION_KINDS = {"assert": Assert, "require": Require, "consume": Consume}

END = End()


def rebuild(s: Protocol, children) -> Protocol:
    """Return a copy of `s` with its direct children replaced (same arity)."""
    children = tuple(children)
    if isinstance(s, Rec):
        return Rec(s.var, children[0])
    if isinstance(s, Prefix):
        return Prefix(s.action, children[0])
    if isinstance(s, Choice):
        return Choice(s.op, tuple((l, c) for (l, _), c in zip(s.branches, children)))
    if isinstance(s, _Assertion):
        return type(s)(s.name, children[0])
    return s


def subterms(s: Protocol) -> Iterator[Protocol]:
    """Preorder walk; choice branches in stored order."""
    stack = [s]
    while stack:
        t = stack.pop()
        yield t
        stack.extend(reversed(t.children()))


def size(s: Protocol) -> int:
    return sum(1 for _ in subterms(s))


def strip_assertions(s: Protocol) -> tuple[list[_Assertion], Protocol]:
    """Split a leading assert/require/consume chain off `s`."""
    chain = []
    while isinstance(s, _Assertion):
        chain.append(s)
        s = s.cont
    return chain, s


def with_chain(chain, s: Protocol) -> Protocol:
    for a in reversed(chain):
        s = type(a)(a.name, s)
    return s


def has_assertions(s: Protocol) -> bool:
    return any(isinstance(t, _Assertion) for t in subterms(s))


def assertion_names(s: Protocol) -> frozenset[str]:
    return frozenset(t.name for t in subterms(s) if isinstance(t, _Assertion))


# -- variables ---------------------------------------------------------------

def free_vars(s: Protocol) -> frozenset[str]:
    if isinstance(s, Var):
        return frozenset((s.name,))
    if isinstance(s, Rec):
        return free_vars(s.body) - {s.var}
    out = frozenset()
    for c in s.children():
        out |= free_vars(c)
    return out


def bound_vars(s: Protocol) -> list[str]:
    """Binder names in preorder, with repetitions."""
    return [t.var for t in subterms(s) if isinstance(t, Rec)]


def is_closed(s: Protocol) -> bool:
    return not free_vars(s)


def substitute(s: Protocol, var: str, r: Protocol) -> Protocol:
    """Capture-avoiding ``s[r/var]``.

    Raises CaptureError when a binder of `s` that scopes over a free
    occurrence of `var` would capture a free variable of `r`.
    """
    fv_r = free_vars(r)

    def go(t):
        if isinstance(t, Var):
            return r if t.name == var else t
        if isinstance(t, End):
            return t
        if isinstance(t, Rec):
            if t.var == var:
                return t
            if t.var in fv_r and var in free_vars(t.body):
                raise CaptureError(f"substituting for {var} would capture {t.var}")
        return rebuild(t, (go(c) for c in t.children()))

    return go(s)


def unfold(s: Protocol) -> Protocol:
    if not isinstance(s, Rec):
        raise NotARecursion(f"cannot unfold {s}")
    return substitute(s.body, s.var, s)


def top(s: Protocol) -> Optional[str]:
    return s.var if isinstance(s, Rec) else None


def fresh_name(base: str, taken) -> str:
    if base not in taken:
        return base
    stem = base.rstrip("0123456789") or base
    for i in itertools.count(1):
        cand = f"{stem}{i}"
        if cand not in taken:
            return cand
    raise AssertionError("unreachable")


def rename_apart(s: Protocol, avoid=frozenset()) -> Protocol:
    """Rename binders so they are pairwise distinct and avoid `avoid` and fv(s).

    The first binder named ``t`` keeps its name when possible, so hand
    written protocols stay readable.
    """
    taken = set(avoid) | set(free_vars(s))

    def go(t, env):
        if isinstance(t, Var):
            return Var(env.get(t.name, t.name))
        if isinstance(t, Rec):
            new = fresh_name(t.var, taken)
            taken.add(new)
            return Rec(new, go(t.body, {**env, t.var: new}))
        return rebuild(t, (go(c, env) for c in t.children()))

    return go(s, {})


def _canonical_order(s: Choice):
    return sorted(s.branches, key=lambda b: b[0])


def alpha_canonicalize(s: Protocol) -> Protocol:
    """Rename bound variables to r0, r1, ... in depth-first preorder.

    Branches are visited in label order, so the numbering does not depend on
    the (insignificant) stored branch order.  Names free in `s` are skipped.
    """
    free = free_vars(s)
    numbering: dict[int, str] = {}
    counter = itertools.count()

    def assign(t):
        if isinstance(t, Rec):
            while True:
                name = f"r{next(counter)}"
                if name not in free:
                    break
            numbering[id(t)] = name
        kids = [c for _, c in _canonical_order(t)] if isinstance(t, Choice) else t.children()
        for c in kids:
            assign(c)

    assign(s)

    def go(t, env):
        if isinstance(t, Var):
            return Var(env.get(t.name, t.name))
        if isinstance(t, Rec):
            new = numbering[id(t)]
            return Rec(new, go(t.body, {**env, t.var: new}))
        return rebuild(t, (go(c, env) for c in t.children()))

    return go(s, {})


def alpha_eq(a: Protocol, b: Protocol) -> bool:
    return alpha_canonicalize(a) == alpha_canonicalize(b)


_DUAL_POLARITY = {Polarity.SEND: Polarity.RECEIVE, Polarity.RECEIVE: Polarity.SEND}
_DUAL_OP = {ChoiceOp.SELECT: ChoiceOp.OFFER, ChoiceOp.OFFER: ChoiceOp.SELECT}


def dual(s: Protocol) -> Protocol:
    """Swap sends with receives and selections with offers."""
    if isinstance(s, Prefix):
        if s.action.polarity not in _DUAL_POLARITY:
            raise UndualizableError(f"neutral action {s.action} has no dual")
        act = Action(_DUAL_POLARITY[s.action.polarity], s.action.payload)
        return Prefix(act, dual(s.cont))
    if isinstance(s, Choice):
        if s.op not in _DUAL_OP:
            raise UndualizableError("plain choice has no dual")
        return Choice(_DUAL_OP[s.op], tuple((l, dual(c)) for l, c in s.branches))
    return rebuild(s, (dual(c) for c in s.children()))


# -- validation --------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    kind: str
    message: str
    path: tuple[str, ...] = ()

    def __str__(self):
        where = "/".join(self.path) or "<root>"
        return f"{self.kind} at {where}: {self.message}"


def _step_name(t: Protocol) -> str:
    if isinstance(t, Rec):
        return f"rec {t.var}"
    if isinstance(t, Prefix):
        return str(t.action)
    if isinstance(t, _Assertion):
        return f"{t.keyword}({t.name})"
    return type(t).__name__.lower()


def validate(s: Protocol) -> list[Violation]:
    """Collect every syntactic violation of `s`; an empty list means valid."""
    out: list[Violation] = []
    seen_binders: set[str] = set()
    free = free_vars(s)

    def go(t, path, unguarded: frozenset, bound: frozenset):
        # `unguarded` holds binders with no action/branch between them and t
        if isinstance(t, Var):
            if t.name in unguarded:
                out.append(Violation("unguarded", f"variable {t.name} is not guarded", path))
            return
        if isinstance(t, End):
            return
        if isinstance(t, Prefix):
            if not IDENT_RE.match(t.action.payload):
                out.append(Violation("identifier", f"bad payload {t.action.payload!r}", path))
            go(t.cont, path + (_step_name(t),), frozenset(), bound)
            return
        if isinstance(t, Choice):
            if not t.branches:
                out.append(Violation("empty-choice", "choice without branches", path))
            labels = [l for l, _ in t.branches]
            for l in sorted({l for l in labels if labels.count(l) > 1}):
                out.append(Violation("duplicate-label", f"label {l} repeated", path))
            for l, c in t.branches:
                go(c, path + (l,), frozenset(), bound)
            return
        if isinstance(t, _Assertion):
            go(t.cont, path + (_step_name(t),), unguarded, bound)
            return
        if isinstance(t, Rec):
            here = path + (_step_name(t),)
            if t.var in seen_binders or t.var in free:
                out.append(Violation("duplicate-binder", f"binder {t.var} is not unique", here))
            seen_binders.add(t.var)
            if t.var not in free_vars(t.body):
                out.append(Violation("vacuous-rec", f"{t.var} does not occur in its body", here))
            _, head = strip_assertions(t.body)
            if isinstance(head, Rec):
                out.append(Violation("nested-rec", f"recursion {head.var} directly inside {t.var}", here))
            go(t.body, here, unguarded | {t.var}, bound | {t.var})
            return
        raise TypeError(f"not a protocol: {t!r}")

    go(s, (), frozenset(), frozenset())
    return out


def check_valid(s: Protocol) -> Protocol:
    violations = validate(s)
    if violations:
        raise ValidationError(violations)
    return s
