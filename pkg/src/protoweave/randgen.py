"""Seeded random protocol generator (bounded depth, small alphabets)."""

from __future__ import annotations

import random
from dataclasses import dataclass

from protoweave.protocol import (
    Action,
    Assert,
    Choice,
    ChoiceOp,
    Consume,
    End,
    Polarity,
    Prefix,
    Protocol,
    Rec,
    Require,
    Var,
    free_vars,
)


@dataclass
class GenConfig:
    depth: int = 4
    names: tuple = ("a", "b", "c")
    payloads: tuple = ("p", "q", "r")
    labels: tuple = ("l1", "l2", "l3")
    max_branches: int = 2
    allow_rec: bool = True
    allow_assertions: bool = True


class ProtocolGenerator:
    def __init__(self, seed=0, config: GenConfig | None = None):
        self.rng = random.Random(seed)
        self.cfg = config or GenConfig()
        self._fresh = 0

    def _var(self):
        self._fresh += 1
        return f"x{self._fresh}"

    def protocol(self, depth=None) -> Protocol:
        self._fresh = 0
        return self._gen(self.cfg.depth if depth is None else depth, (), False, False)

    def _gen(self, depth, scope, guarded, under_rec) -> Protocol:
        rng, cfg = self.rng, self.cfg
        kinds = ["end"]
        if scope and guarded:
            kinds += ["var", "var"]
        if depth > 0:
            kinds += ["act", "act", "choice"]
            if cfg.allow_assertions:
                kinds += ["assertion", "assertion"]
            if cfg.allow_rec and not under_rec:
                kinds.append("rec")
        kind = rng.choice(kinds)
        if kind == "end":
            return End()
        if kind == "var":
            return Var(rng.choice(scope))
        if kind == "act":
            pol = rng.choice([Polarity.SEND, Polarity.RECEIVE])
            act = Action(pol, rng.choice(cfg.payloads))
            return Prefix(act, self._gen(depth - 1, scope, True, False))
        if kind == "choice":
            n = rng.randint(1, cfg.max_branches)
            labels = rng.sample(cfg.labels, n)
            op = rng.choice(list(ChoiceOp))
            return Choice(op, tuple((l, self._gen(depth - 1, scope, True, False)) for l in labels))
        if kind == "assertion":
            ctor = rng.choice([Assert, Require, Consume])
            return ctor(rng.choice(cfg.names), self._gen(depth - 1, scope, guarded, under_rec))
        var = self._var()
        body = self._gen(depth - 1, scope + (var,), False, True)
        return Rec(var, body) if var in free_vars(body) else body


def composable_pairs(count=50, seed=0, depth=3, mode="all", max_tries=20_000):
    """Pairs of closed protocols with at least one composition in `mode`."""
    from protoweave.compose import compose

    gen = ProtocolGenerator(seed, GenConfig(depth=depth))
    out = []
    seen = set()
    for _ in range(max_tries):
        s1, s2 = gen.protocol(), gen.protocol()
        if (s1, s2) in seen:
            continue
        seen.add((s1, s2))
        if compose(s1, s2, frozenset(), mode).canonical_count:
            out.append((s1, s2))
            if len(out) == count:
                break
    return out
