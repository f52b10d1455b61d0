"""Print canonical composition counts per mode for the bundled pairs."""

import argparse
import time

from protoweave.compose import Mode, compose
from protoweave.corpus import CORPUS_PAIRS, load_corpus


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--raw", action="store_true", help="also show raw (pre-canonical) counts")
    args = ap.parse_args()
    c = load_corpus()
    modes = [m.value for m in Mode]
    print(f"{'pair':34}" + "".join(f"{m:>8}" for m in modes) + "   time   pinned")
    for left, right, pinned in CORPUS_PAIRS:
        t = time.perf_counter()
        res = [compose(c[left], c[right], mode=m) for m in modes]
        dt = time.perf_counter() - t
        cells = [f"{r.canonical_count}/{r.raw_count}" if args.raw else str(r.canonical_count) for r in res]
        got = tuple(r.canonical_count for r in res)
        mark = "ok" if got == tuple(pinned) else f"MISMATCH {pinned}"
        print(f"{left + ' o ' + right:34}" + "".join(f"{x:>8}" for x in cells) + f" {dt:6.2f}s  {mark}")


if __name__ == "__main__":
    main()
