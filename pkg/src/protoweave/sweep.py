"""Run the correctness checks over every composition of a set of pairs."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

from protoweave.compose import Mode, compose
from protoweave.corpus import CORPUS_PAIRS, load_corpus
from protoweave.protocol import validate
from protoweave.randgen import composable_pairs
from protoweave.semantics import has_progress
from protoweave.syntax import print_protocol
from protoweave.verify import DEFAULT_DEPTH, behaviour_preserved, check_fair, check_strong_fair


@dataclass
class ResultRecord:
    pair: str
    result: object
    modes: tuple  # the modes whose result set contains this result
    valid: bool
    simulation: bool
    progress: bool
    fair: bool
    strong_fair: bool | None  # None unless the result is a strong composition

    @property
    def origin(self) -> str:
        """Least permissive mode that produces the result."""
        if "strong" in self.modes:
            return "strong"
        if "weak" in self.modes and "corr" in self.modes:
            return "weak+corr"
        if "weak" in self.modes:
            return "weak"
        if "corr" in self.modes:
            return "corr"
        return "all"

    def line(self):
        flags = " ".join(
            f"{k}={'-' if v is None else ('ok' if v else 'FAIL')}"
            for k, v in (("sim", self.simulation), ("prog", self.progress),
                         ("fair", self.fair), ("sfair", self.strong_fair))
        )
        return f"{self.pair} [{self.origin}] {flags} {print_protocol(self.result)}"


def corpus_pairs():
    c = load_corpus()
    return [(f"{l}|{r}", c[l], c[r]) for l, r, _ in CORPUS_PAIRS]


def random_pairs(count=50, seed=7, depth=3):
    return [(f"gen{k}", s1, s2) for k, (s1, s2) in enumerate(composable_pairs(count, seed, depth))]


def sweep(pairs, a=frozenset(), depth=DEFAULT_DEPTH) -> list[ResultRecord]:
    out = []
    for name, s1, s2 in pairs:
        comps = {m.value: compose(s1, s2, a, m) for m in Mode}
        sets = {m: c.canonical_set() for m, c in comps.items()}
        by_key = {}
        for c in comps.values():
            for k, s in zip(c.canonical, c.results):
                by_key.setdefault(k, s)
        for key, s in sorted(by_key.items(), key=lambda kv: print_protocol(kv[0])):
            modes = tuple(m for m in ("strong", "weak", "corr", "all") if key in sets[m])
            strong = "strong" in modes
            out.append(ResultRecord(
                pair=name,
                result=s,
                modes=modes,
                valid=not validate(s),
                simulation=behaviour_preserved(s, s1, s2, a).verdict,
                progress=bool(has_progress(s, env=a)),
                fair=check_fair(s, s1, s2, a, depth=depth).holds,
                strong_fair=check_strong_fair(s, s1, s2, a, depth=depth).holds if strong else None,
            ))
    return out


def tally(records) -> Counter:
    c = Counter()
    for r in records:
        c["results"] += 1
        for prop in ("valid", "simulation", "progress", "fair"):
            if not getattr(r, prop):
                c[f"{prop}-fail[{r.origin}]"] += 1
        if r.strong_fair is False:
            c["strong_fair-fail"] += 1
    return c
