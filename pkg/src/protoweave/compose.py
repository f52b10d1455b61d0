"""Interleaving composition: all S with  T_L; T_R; A |- S1 o S2 |> S.

The commutativity rule is not run as a search step.  Instead every rule that
inspects the head of the left operand also runs mirrored on the right
operand (with the recursion environments swapped), which derives the same
set without the swap-swap loop.  Sub-searches are memoised on the full
judgement, which also settles the negative premises of weak and correlating
branching: a premise "S_i o S does not compose" is just an empty memo entry.
"""

from __future__ import annotations

import enum
import itertools
import sys
from dataclasses import dataclass, field
from typing import Optional

from protoweave.assertions import very_well_asserted, well_asserted
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
    alpha_canonicalize,
    bound_vars,
    free_vars,
    rename_apart,
    substitute,
    validate,
)
from protoweave.syntax import print_protocol

DEFAULT_BUDGET = 1_000_000


class Mode(enum.Enum):
    STRONG = "strong"
    WEAK = "weak"
    CORR = "corr"
    ALL = "all"

    @classmethod
    def parse(cls, text):
        if isinstance(text, Mode):
            return text
        aliases = {"correlating": "corr", "s": "strong", "w": "weak", "c": "corr", "wc": "all"}
        return cls(aliases.get(text, text))

    @property
    def weak(self):
        return self in (Mode.WEAK, Mode.ALL)

    @property
    def correlating(self):
        return self in (Mode.CORR, Mode.ALL)


class ComposeError(Exception):
    pass


class InvalidInput(ComposeError):
    pass


class SearchBudgetExceeded(ComposeError):
    def __init__(self, budget, frontier):
        self.budget = budget
        self.frontier = frontier
        super().__init__(f"search budget of {budget} judgements exceeded at {frontier}")


class InvariantViolation(ComposeError):
    pass


# A recursion environment is a tuple of (variable, used) pairs.
RecEnv = tuple


def _mark_used(t: RecEnv, k: int) -> RecEnv:
    var, _ = t[k]
    return t[:k] + ((var, True),) + t[k + 1:]


def _is_used(t: RecEnv, var: str) -> bool:
    return any(v == var and u for v, u in t)


class _Search:
    def __init__(self, mode: Mode, budget: int):
        self.mode = mode
        self.budget = budget
        self.memo: dict = {}
        self.visited = 0

    def results(self, tl, tr, a, s1, s2) -> frozenset:
        key = (tl, tr, a, s1, s2)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        self.visited += 1
        if self.visited > self.budget:
            raise SearchBudgetExceeded(self.budget, f"{print_protocol(s1)} o {print_protocol(s2)}")
        out = self.left(tl, tr, a, s1, s2) | self.left(tr, tl, a, s2, s1)
        self.memo[key] = out
        self.memo[(tr, tl, a, s2, s1)] = out
        return out

    def left(self, tl, tr, a, s1, s2) -> frozenset:
        """Rules that consume the head of s1 (s2 is the other operand)."""
        if isinstance(s1, Prefix):
            return frozenset(Prefix(s1.action, r) for r in self.results(tl, tr, a, s1.cont, s2))
        if isinstance(s1, Require):
            if s1.name not in a:
                return frozenset()
            return frozenset(Require(s1.name, r) for r in self.results(tl, tr, a, s1.cont, s2))
        if isinstance(s1, Consume):
            if s1.name not in a:
                return frozenset()
            sub = self.results(tl, tr, a - {s1.name}, s1.cont, s2)
            return frozenset(Consume(s1.name, r) for r in sub)
        if isinstance(s1, Assert):
            sub = self.results(tl, tr, a | {s1.name}, s1.cont, s2)
            return frozenset(Assert(s1.name, r) for r in sub)
        if isinstance(s1, Choice):
            return self.branching(tl, tr, a, s1, s2)
        if isinstance(s1, Rec):
            return self.recursion(tl, tr, a, s1, s2)
        if isinstance(s1, Var):
            # [call]
            if s2 == s1 and (_is_used(tl, s1.name) or _is_used(tr, s1.name)):
                return frozenset((s1,))
            return frozenset()
        if isinstance(s1, End):
            return frozenset((s1,)) if isinstance(s2, End) else frozenset()
        raise TypeError(f"not a protocol: {s1!r}")

    def branching(self, tl, tr, a, s1: Choice, s2) -> frozenset:
        out = set()
        subs = [self.results(tl, tr, a, c, s2) for _, c in s1.branches]
        labels = s1.labels
        if all(subs):
            # [bra]
            for combo in itertools.product(*(sorted(x, key=print_protocol) for x in subs)):
                out.add(Choice(s1.op, tuple(zip(labels, combo))))
        elif self.mode.weak and any(subs):
            # [wbra]: failing branches pass through if they are well-asserted
            passing = [not x for x in subs]
            if all(well_asserted(a, c).ok for (_, c), p in zip(s1.branches, passing) if p):
                slots = [
                    sorted(x, key=print_protocol) if x else [c]
                    for x, (_, c) in zip(subs, s1.branches)
                ]
                for combo in itertools.product(*slots):
                    out.add(Choice(s1.op, tuple(zip(labels, combo))))
        if self.mode.correlating and isinstance(s2, Choice):
            out |= self.correlate(tl, tr, a, s1, s2)
        return frozenset(out)

    def correlate(self, tl, tr, a, s1: Choice, s2: Choice) -> set:
        # [cbra]
        table = []
        covered = set()
        for _, c in s1.branches:
            row = []
            for j, (_, d) in enumerate(s2.branches):
                sub = self.results(tl, tr, a, c, d)
                if sub:
                    row.append((j, sorted(sub, key=print_protocol)))
                    covered.add(j)
            if not row:
                return set()
            table.append(row)
        if len(covered) != len(s2.branches):
            return set()
        out = set()
        inner_options = []
        for row in table:
            opts = []
            for combo in itertools.product(*(subs for _, subs in row)):
                inner = tuple((s2.branches[j][0], r) for (j, _), r in zip(row, combo))
                opts.append(Choice(s2.op, inner))
            inner_options.append(opts)
        for combo in itertools.product(*inner_options):
            out.add(Choice(s1.op, tuple(zip(s1.labels, combo))))
        return out

    def recursion(self, tl, tr, a, s1: Rec, s2) -> frozenset:
        out = set()
        if isinstance(s2, Rec):
            # [rec1]
            for r in self.results(tl + ((s1.var, False),), tr, a, s1.body, s2):
                cand = Rec(s1.var, r)
                if well_asserted(a, cand).ok:
                    out.add(cand)
        # [rec2]: t must be unused and followed only by unused variables
        for k in range(len(tr) - 1, -1, -1):
            if tr[k][1]:
                break
            body = substitute(s1.body, s1.var, Var(tr[k][0]))
            out |= self.results(tl, _mark_used(tr, k), a, body, s2)
        if isinstance(s2, End):
            # [rec3]
            if not free_vars(s1) and well_asserted(a, s1).ok:
                out.add(s1)
        return frozenset(out)


@dataclass
class CompositionResult:
    mode: Mode
    results: list  # one representative per alpha class, canonical print order
    raw: list  # every structurally distinct result
    raw_count: int = 0
    canonical_count: int = 0
    visited: int = 0
    canonical: list = field(default_factory=list)

    def __len__(self):
        return self.canonical_count

    def __iter__(self):
        return iter(self.results)

    def canonical_set(self) -> frozenset:
        return frozenset(self.canonical)

    def summary(self) -> str:
        return f"mode={self.mode.value} raw={self.raw_count} canonical={self.canonical_count}"


def _prepare(s1, s2):
    for side, s in (("left", s1), ("right", s2)):
        problems = validate(s)
        if problems:
            raise InvalidInput(f"{side} operand is invalid: {problems[0]}")
        if free_vars(s):
            raise InvalidInput(f"{side} operand is open: free {sorted(free_vars(s))}")
    s2 = rename_apart(s2, avoid=set(bound_vars(s1)))
    return s1, s2


def compose(s1: Protocol, s2: Protocol, a=frozenset(), mode="strong",
            budget: int = DEFAULT_BUDGET) -> CompositionResult:
    """Every interleaving composition of s1 and s2 from environment `a`."""
    mode = Mode.parse(mode)
    a = frozenset(a)
    s1, s2 = _prepare(s1, s2)
    search = _Search(mode, budget)
    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, 20_000))
    try:
        found = search.results((), (), a, s1, s2)
    finally:
        sys.setrecursionlimit(limit)
    # [bra] can copy one recursion into several branches; keep binders unique
    raw = sorted({rename_apart(s) for s in found}, key=print_protocol)
    if not a:
        for s in raw:
            if not very_well_asserted(s):
                raise InvariantViolation(f"result is not very-well-asserted: {print_protocol(s)}")
    classes: dict = {}
    for s in raw:
        key = alpha_canonicalize(s)
        best = classes.get(key)
        if best is None or len(print_protocol(s)) < len(print_protocol(best)):
            classes[key] = s
    keys = sorted(classes, key=print_protocol)
    return CompositionResult(
        mode=mode,
        results=[classes[k] for k in keys],
        raw=raw,
        raw_count=len(raw),
        canonical_count=len(keys),
        visited=search.visited,
        canonical=keys,
    )


def compose_all_modes(s1, s2, a=frozenset(), budget=DEFAULT_BUDGET) -> dict:
    return {m: compose(s1, s2, a, m, budget) for m in Mode}
