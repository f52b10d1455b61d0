"""Executable correctness checks: simulation, fairness and strong fairness.

Fairness is coinductive.  Both fairness checks compute a greatest fixpoint
over "obligation tuples" (A, S, S0, S1): the composition state with its
environment plus the residual of each component.  A tuple is discovered by
breadth-first search from the root; tuples deeper than `depth` levels are
assumed fair, in which case the report says so through `complete=False`.

Reading used for a component obligation: component i owes label l from
state S_i only when the other component, run alone from A, can reach an
environment in which S_i performs l.  Without that restriction a receive
guarded by an assertion the partner never grants would be an obligation
no composition can meet.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Optional

from protoweave.semantics import DEFAULT_CAP, Config, EnsembleConfig, Label, _succ, explore
from protoweave.protocol import Protocol

DEFAULT_DEPTH = 8
MAX_TRACE = 64


class Inconclusive(Exception):
    pass


# -- simulation --------------------------------------------------------------

@dataclass
class SimulationWitness:
    verdict: bool
    relation: frozenset = frozenset()
    path: tuple = ()  # labels matched by both sides before the failure
    blocked: Optional[Label] = None
    lhs_state: object = None
    rhs_state: object = None

    def __bool__(self):
        return self.verdict

    def describe(self):
        if self.verdict:
            return f"holds ({len(self.relation)} pairs)"
        path = " ".join(str(l) for l in self.path)
        return f"fails after [{path}] blocked {self.blocked}"


def simulates(lhs, rhs, cap: int = DEFAULT_CAP) -> SimulationWitness:
    """Is `lhs` simulated by `rhs`?  Either side may be a Config or an EnsembleConfig."""
    g1 = explore(lhs, cap)
    g2 = explore(rhs, cap)
    if g1.truncated or g2.truncated:
        raise Inconclusive(f"state space exceeds cap {cap}")
    succ1 = [dict() for _ in g1.nodes]
    for s, l, d in g1.edges:
        succ1[s].setdefault(l, []).append(d)
    succ2 = [dict() for _ in g2.nodes]
    for s, l, d in g2.edges:
        succ2[s].setdefault(l, []).append(d)

    # candidate pairs: reachable by moving both sides on equal labels
    root = (0, 0)
    pairs = {root}
    queue = deque([root])
    while queue:
        p, q = queue.popleft()
        for l, ds in succ1[p].items():
            for d in ds:
                for e in succ2[q].get(l, ()):
                    if (d, e) not in pairs:
                        pairs.add((d, e))
                        queue.append((d, e))

    alive = set(pairs)
    removed_at: dict = {}
    reason: dict = {}
    rnd = 0
    while True:
        rnd += 1
        doomed = []
        for p, q in alive:
            for l, ds in succ1[p].items():
                bad = next((d for d in ds
                            if not any((d, e) in alive for e in succ2[q].get(l, ()))), None)
                if bad is not None:
                    doomed.append(((p, q), l, bad))
                    break
        if not doomed:
            break
        for pq, l, d in doomed:
            alive.discard(pq)
            removed_at[pq] = rnd
            reason[pq] = (l, d)

    if root in alive:
        rel = frozenset((g1.nodes[p], g2.nodes[q]) for p, q in alive)
        return SimulationWitness(True, relation=rel)

    # walk the deletion order back to a label the right side cannot match
    path = []
    p, q = root
    while True:
        l, d = reason[(p, q)]
        options = [e for e in succ2[q].get(l, ()) if (d, e) in removed_at]
        if not options:
            return SimulationWitness(False, path=tuple(path), blocked=l,
                                     lhs_state=g1.nodes[p], rhs_state=g2.nodes[q])
        path.append(l)
        q = min(options, key=lambda e: removed_at[(d, e)])
        p = d


def behaviour_preserved(s: Protocol, s1: Protocol, s2: Protocol, a=frozenset(), cap=DEFAULT_CAP):
    a = frozenset(a)
    return simulates(Config(a, s), EnsembleConfig(a, s1, s2), cap)


# -- fairness ----------------------------------------------------------------

@dataclass(frozen=True)
class FairnessWitness:
    component: int
    label: Label
    trace: tuple  # the partner trace r for strong fairness, () otherwise
    state: tuple  # (env, composition, component 0, component 1)

    def describe(self):
        env, s, c0, c1 = self.state
        tr = " ".join(str(l) for l in self.trace)
        return f"component={self.component} blocked={self.label} trace=[{tr}] at {s}"


@dataclass
class FairnessReport:
    holds: bool
    depth: int
    complete: bool
    witness: Optional[FairnessWitness] = None
    tuples: int = 0
    strong: bool = False

    def __bool__(self):
        return self.holds

    @property
    def verdict(self) -> str:
        if not self.holds:
            return "fails"
        return "holds" if self.complete else f"holds-to-depth({self.depth})"


def _moves(a, s):
    return _succ(frozenset(a), s)


def _component_envs(a, s, cap):
    """Environments reachable by running a component alone from a."""
    g = explore(Config(frozenset(a), s), cap)
    return {c.env for c in g.nodes}


class _FairnessChecker:
    def __init__(self, strong, depth, cap, max_tuples):
        self.strong = strong
        self.depth = depth
        self.cap = cap
        self.max_tuples = max_tuples
        self._env_cache = {}

    def partner_envs(self, a, s):
        key = (a, s)
        if key not in self._env_cache:
            self._env_cache[key] = _component_envs(a, s, self.cap)
        return self._env_cache[key]

    def obligations(self, tup):
        a, s, comps = tup[0], tup[1], tup[2:]
        out = []
        for i in (0, 1):
            other = comps[1 - i]
            seen = set()
            for b in (a,) + tuple(sorted(self.partner_envs(a, other), key=sorted)):
                for l, _, si2 in _moves(b, comps[i]):
                    if (l, si2) not in seen:
                        seen.add((l, si2))
                        out.append((i, l, si2))
        return out

    def candidates_at(self, node, i, l, si2):
        """Composition moves on l from a product node, as successor tuples."""
        comp_states, other = node
        out = []
        for ca, cs in comp_states:
            for l2, a2, s2 in _moves(ca, cs):
                if l2 == l:
                    comps = [None, None]
                    comps[i] = si2
                    comps[1 - i] = other[1]
                    out.append((a2, s2, comps[0], comps[1]))
        return out

    # product walk: composition state set driven by the partner's trace
    def product_children(self, node):
        comp_states, (oa, os_) = node
        kids = []
        for l, oa2, os2 in _moves(oa, os_):
            nxt = frozenset((a2, s2) for ca, cs in comp_states
                            for l2, a2, s2 in _moves(ca, cs) if l2 == l)
            kids.append((l, (nxt, (oa2, os2))))
        return kids

    def product_reach(self, start):
        seen = {start}
        queue = deque([start])
        order = []
        while queue and len(seen) <= self.cap:
            n = queue.popleft()
            order.append(n)
            for _, k in self.product_children(n):
                if k[0] and k not in seen:
                    seen.add(k)
                    queue.append(k)
        return order

    def clause(self, tup, ob):
        """Structure describing how obligation `ob` of `tup` can be met."""
        a, s = tup[0], tup[1]
        i, l, si2 = ob
        other = tup[2 + (1 - i)]
        start = (frozenset({(a, s)}), (a, other))
        if not self.strong:
            cands = []
            for n in self.product_reach(start):
                cands.extend(self.candidates_at(n, i, l, si2))
            return ("any", cands)
        return ("strong", start, i, l, si2)

    def eval_strong(self, start, i, l, si2, truth):
        """Return None if every partner trace is served, else a failing trace."""
        good_cache = {}

        def good(n):
            if n not in good_cache:
                good_cache[n] = any(truth(c) for c in self.candidates_at(n, i, l, si2))
            return good_cache[n]

        reach_cache = {}

        def ext_good(n):
            # some continuation of the partner, followed by the composition, is good
            if n not in reach_cache:
                reach_cache[n] = any(good(m) for m in self.product_reach(n))
            return reach_cache[n]

        limit = min(self.depth, MAX_TRACE)
        shortest: dict = {}
        stack = [(start, ())]
        while stack:
            n, tr = stack.pop()
            if good(n):
                continue
            if shortest.get(n, limit + 1) <= len(tr):
                continue
            shortest[n] = len(tr)
            comp_states, (oa, os_) = n
            if not comp_states or not ext_good(n):
                return tr
            if len(tr) < limit:
                for lab, k in self.product_children(n):
                    stack.append((k, tr + (lab,)))
        return None

    def run(self, root):
        level = {root: 0}
        order = [root]
        clauses = {}
        complete = True
        k = 0
        while k < len(order):
            tup = order[k]
            k += 1
            obs = self.obligations(tup)
            if level[tup] >= self.depth:
                if obs:
                    complete = False
                clauses[tup] = None  # assumed fair
                continue
            cl = [(ob, self.clause(tup, ob)) for ob in obs]
            clauses[tup] = cl
            for ob, c in cl:
                nxt = c[1] if c[0] == "any" else self.strong_candidates(c)
                for t2 in nxt:
                    if t2 not in level:
                        if len(order) >= self.max_tuples:
                            complete = False
                            continue
                        level[t2] = level[tup] + 1
                        order.append(t2)

        truth = {t: True for t in order}

        def lookup(t):
            return truth.get(t, True)

        # the failure recorded when the root is first falsified is the most
        # direct one: later failures may only echo it through loops
        first_failure = None
        changed = True
        while changed:
            changed = False
            for t in order:
                if truth[t] and clauses[t] is not None:
                    bad = self.failing(clauses[t], lookup)
                    if bad:
                        truth[t] = False
                        changed = True
                        if t == root:
                            first_failure = bad
        witness = None
        if not truth[root]:
            ob, tr = first_failure
            witness = FairnessWitness(ob[0], ob[1], tr, root)
        return truth[root], complete, witness, len(order)

    def strong_candidates(self, c):
        _, start, i, l, si2 = c
        out = []
        for n in self.product_reach(start):
            out.extend(self.candidates_at(n, i, l, si2))
        return out

    def failing(self, cl, truth):
        for ob, c in cl:
            if c[0] == "any":
                if not any(truth(t) for t in c[1]):
                    return ob, ()
            else:
                tr = self.eval_strong(c[1], c[2], c[3], c[4], truth)
                if tr is not None:
                    return ob, tr
        return None


def _check(strong, s, s0, s1, a, depth, cap, max_tuples):
    a = frozenset(a)
    chk = _FairnessChecker(strong, depth, cap, max_tuples)
    holds, complete, witness, n = chk.run((a, s, s0, s1))
    return FairnessReport(holds, depth, complete, witness, n, strong)


def check_fair(s, s0, s1, a=frozenset(), depth: int = DEFAULT_DEPTH,
               cap: int = DEFAULT_CAP, max_tuples: int = 20_000) -> FairnessReport:
    """Is `s` a fair composition of s0 and s1 from environment a?"""
    return _check(False, s, s0, s1, a, depth, cap, max_tuples)


def check_strong_fair(s, s0, s1, a=frozenset(), depth: int = DEFAULT_DEPTH,
                      cap: int = DEFAULT_CAP, max_tuples: int = 20_000) -> FairnessReport:
    """Strong fairness: every partner trace up to `depth` labels must be served."""
    return _check(True, s, s0, s1, a, depth, cap, max_tuples)
