"""Check simulation, progress and fairness on every composition result.

Covers the bundled pairs plus a batch of generated composable pairs and
prints one line per result that breaks a property, then a tally.
"""

import argparse

from protoweave.sweep import corpus_pairs, random_pairs, sweep, tally
from protoweave.verify import DEFAULT_DEPTH


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--random", type=int, default=50, help="number of generated pairs")
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--gen-depth", type=int, default=3)
    ap.add_argument("--depth", type=int, default=DEFAULT_DEPTH, help="fairness exploration depth")
    ap.add_argument("--all", action="store_true", help="print every result, not only failures")
    args = ap.parse_args()
    pairs = corpus_pairs() + random_pairs(args.random, args.seed, args.gen_depth)
    recs = sweep(pairs, depth=args.depth)
    for r in recs:
        bad = not (r.valid and r.simulation and r.progress and r.fair) or r.strong_fair is False
        if args.all or bad:
            print(r.line())
    print()
    for k, v in sorted(tally(recs).items()):
        print(f"{k:28} {v}")


if __name__ == "__main__":
    main()
