"""Well-assertedness: the judgement A {S} A'.

The rules are syntax directed, so the checker is a single bottom-up pass.
Recursion gets a loop-invariant treatment: the body of ``rec t.S`` is
re-checked from the intersection of the entry environment with every
environment that reaches a call of ``t``, until that intersection is stable.
A loop body therefore has to be safe in every iteration, not only the first
one.  See the decisions ledger for why the plain "post includes pre" side
condition was not used.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Optional

from protoweave.protocol import (
    Assert,
    Choice,
    Consume,
    End,
    Prefix,
    Protocol,
    Rec,
    Require,
    Var,
)

Env = frozenset


def env(names: Iterable[str] = ()) -> frozenset:
    return frozenset(names)


def format_env(a) -> str:
    return "{" + ", ".join(sorted(a)) + "}"


@dataclass(frozen=True)
class WaResult:
    """Outcome of a well-assertedness check.

    On success `post` holds the post environment.  On failure `rule` names
    the rule that could not be applied, `name` the missing atom (if any) and
    `path` the route from the root to the failing subterm.
    """

    ok: bool
    post: Optional[frozenset] = None
    rule: Optional[str] = None
    name: Optional[str] = None
    path: tuple = ()
    env: Optional[frozenset] = None

    def __bool__(self):
        return self.ok

    def describe(self) -> str:
        if self.ok:
            return f"ok post={format_env(self.post)}"
        where = "/".join(self.path) or "<root>"
        missing = f" missing {self.name}" if self.name else ""
        return f"[{self.rule}] at {where}:{missing} (env {format_env(self.env or ())})"


class _Failure(Exception):
    def __init__(self, rule, name, path, env):
        self.rule, self.name, self.path, self.env = rule, name, path, env


def _meet(a: dict, b: dict) -> dict:
    out = dict(a)
    for k, v in b.items():
        out[k] = out[k] & v if k in out else v
    return out


@lru_cache(maxsize=1 << 16)
def _check(a: frozenset, s: Protocol):
    """Return (post, calls) or raise _Failure.

    `calls` maps each free variable of `s` to the intersection of the
    environments reaching its occurrences.  Paths in failures are relative.
    """
    if isinstance(s, End):
        return a, {}
    if isinstance(s, Var):
        return a, {s.name: a}
    if isinstance(s, Prefix):
        return _sub(a, s.cont, str(s.action))
    if isinstance(s, Assert):
        return _sub(a | {s.name}, s.cont, f"assert({s.name})")
    if isinstance(s, Require):
        if s.name not in a:
            raise _Failure("require", s.name, (), a)
        return _sub(a, s.cont, f"require({s.name})")
    if isinstance(s, Consume):
        if s.name not in a:
            raise _Failure("consume", s.name, (), a)
        return _sub(a - {s.name}, s.cont, f"consume({s.name})")
    if isinstance(s, Choice):
        post = None
        calls: dict = {}
        for label, c in s.branches:
            p, cs = _sub(a, c, label)
            post = p if post is None else post & p
            calls = _meet(calls, cs)
        return post, calls
    if isinstance(s, Rec):
        step = f"rec {s.var}"
        inv = a
        post, calls = _sub(a, s.body, step)
        while True:
            nxt = inv & calls.get(s.var, inv)
            if nxt == inv:
                break
            inv = nxt
            try:
                post, calls = _check(inv, s.body)
            except _Failure as f:
                # safe on the first pass, unsafe once the loop comes around
                raise _Failure("rec", f.name, (step,) + f.path, f.env) from None
        calls = {k: v for k, v in calls.items() if k != s.var}
        return post, calls
    raise TypeError(f"not a protocol: {s!r}")


def _sub(a, s, step):
    try:
        return _check(a, s)
    except _Failure as f:
        raise _Failure(f.rule, f.name, (step,) + f.path, f.env) from None


def well_asserted(a, s: Protocol) -> WaResult:
    """Decide A {S} A' and return the post environment A' when it exists."""
    a = frozenset(a)
    try:
        post, _ = _check(a, s)
    except _Failure as f:
        return WaResult(False, rule=f.rule, name=f.name, path=f.path, env=f.env)
    return WaResult(True, post=post)


def very_well_asserted(s: Protocol) -> bool:
    return well_asserted(frozenset(), s).ok
