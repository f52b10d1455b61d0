"""Labelled transition system for protocols and two-protocol ensembles."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional, Union

from protoweave.assertions import format_env
from protoweave.protocol import (
    Action,
    Assert,
    Choice,
    ChoiceOp,
    Consume,
    End,
    Prefix,
    Protocol,
    Rec,
    Require,
    substitute,
)

DEFAULT_CAP = 10_000


@dataclass(frozen=True)
class Label:
    """Transition label: an action, a branch choice or an assertion event.

    kind is one of "act", "choose", "assert", "require", "consume".
    """

    kind: str
    name: str
    action: Optional[Action] = None
    op: Optional[ChoiceOp] = None

    def __str__(self):
        if self.kind == "act":
            return str(self.action)
        if self.kind == "choose":
            return self.op.symbol + self.name
        return f"{self.kind}({self.name})"

    @classmethod
    def act(cls, action: Action):
        return cls("act", str(action), action=action)

    @classmethod
    def choose(cls, op: ChoiceOp, label: str):
        return cls("choose", label, op=op)

    @classmethod
    def asserted(cls, n):
        return cls("assert", n)

    @classmethod
    def required(cls, n):
        return cls("require", n)

    @classmethod
    def consumed(cls, n):
        return cls("consume", n)


@dataclass(frozen=True)
class Config:
    env: frozenset
    proto: Protocol

    def __str__(self):
        return f"{format_env(self.env)} ⊢ {self.proto}"


@dataclass(frozen=True)
class EnsembleConfig:
    env: frozenset
    left: Protocol
    right: Optional[Protocol] = None

    def __str__(self):
        body = str(self.left) if self.right is None else f"{self.left} ∥ {self.right}"
        return f"{format_env(self.env)} ⊢ {body}"


@lru_cache(maxsize=1 << 16)
def _succ(a: frozenset, s: Protocol) -> tuple:
    if isinstance(s, Prefix):
        return ((Label.act(s.action), a, s.cont),)
    if isinstance(s, Choice):
        return tuple((Label.choose(s.op, l), a, c) for l, c in s.branches)
    if isinstance(s, Assert):
        return ((Label.asserted(s.name), a | {s.name}, s.cont),)
    if isinstance(s, Require):
        return ((Label.required(s.name), a, s.cont),) if s.name in a else ()
    if isinstance(s, Consume):
        return ((Label.consumed(s.name), a - {s.name}, s.cont),) if s.name in a else ()
    if isinstance(s, Rec):
        return tuple((l, a2, substitute(s2, s.var, s)) for l, a2, s2 in _succ(a, s.body))
    return ()  # end, or a free variable


def step(c: Config) -> frozenset:
    """All (label, successor) pairs of a single-protocol configuration."""
    return frozenset((l, Config(a, s)) for l, a, s in _succ(frozenset(c.env), c.proto))


def ensemble_step(c: EnsembleConfig) -> frozenset:
    a = frozenset(c.env)
    if c.right is None:
        return frozenset((l, EnsembleConfig(a2, s)) for l, a2, s in _succ(a, c.left))
    out = {(l, EnsembleConfig(a2, s, c.right)) for l, a2, s in _succ(a, c.left)}
    out |= {(l, EnsembleConfig(a2, c.left, s)) for l, a2, s in _succ(a, c.right)}
    return frozenset(out)


def successors(c) -> frozenset:
    if isinstance(c, EnsembleConfig):
        return ensemble_step(c)
    return step(c)


def is_stuck(c: Config) -> bool:
    return not isinstance(c.proto, End) and not step(c)


@dataclass
class LtsGraph:
    nodes: list
    edges: list  # (src index, Label, dst index)
    initial: int = 0
    truncated: bool = False
    index: dict = field(default_factory=dict, repr=False)

    @property
    def complete(self):
        return not self.truncated

    def out_edges(self, i):
        return [(l, d) for s, l, d in self.edges if s == i]

    def trace_lines(self) -> list[str]:
        """One line per edge: ``nI -> nJ : label ⊢ env ⊢ protocol``."""
        return [f"n{s} -> n{d} : {l} ⊢ {self.nodes[d]}" for s, l, d in self.edges]


def explore(c, cap: int = DEFAULT_CAP, succ: Callable = None) -> LtsGraph:
    """Breadth-first exploration keyed on structural identity.

    Stops adding nodes once `cap` distinct nodes are known and flags the
    graph as truncated.
    """
    succ = succ or successors
    nodes = [c]
    index = {c: 0}
    edges = []
    truncated = False
    queue = deque([0])
    while queue:
        i = queue.popleft()
        for l, d in sorted(succ(nodes[i]), key=lambda e: (str(e[0]), str(e[1]))):
            j = index.get(d)
            if j is None:
                if len(nodes) >= cap:
                    truncated = True
                    continue
                j = index[d] = len(nodes)
                nodes.append(d)
                queue.append(j)
            edges.append((i, l, j))
    return LtsGraph(nodes, edges, 0, truncated, index)


@dataclass(frozen=True)
class ProgressReport:
    holds: Optional[bool]  # None when exploration hit the cap first
    witness: tuple = ()  # labels leading to a stuck configuration
    stuck: Optional[Config] = None
    explored: int = 0

    def __bool__(self):
        return self.holds is True


def has_progress(s: Protocol, cap: int = DEFAULT_CAP, env=frozenset()) -> ProgressReport:
    """Check that no configuration reachable from (env, s) is stuck.

    The protocol-level notion starts from the empty environment; `env` is a
    tooling extension.
    """
    start = Config(frozenset(env), s)
    parent = {start: None}
    queue = deque([start])
    truncated = False
    while queue:
        c = queue.popleft()
        succ = step(c)
        if not succ and not isinstance(c.proto, End):
            path = []
            cur = c
            while parent[cur] is not None:
                prev, l = parent[cur]
                path.append(l)
                cur = prev
            return ProgressReport(False, tuple(reversed(path)), c, len(parent))
        for l, d in sorted(succ, key=lambda e: (str(e[0]), str(e[1]))):
            if d not in parent:
                if len(parent) >= cap:
                    truncated = True
                    continue
                parent[d] = (c, l)
                queue.append(d)
    return ProgressReport(None if truncated else True, (), None, len(parent))
