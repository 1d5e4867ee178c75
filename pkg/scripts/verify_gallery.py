"""Run the full identity catalog over every bundled gallery file and print a status grid."""

import argparse
import time
from collections import Counter

from harmricci.harness import gallery_files, load, verify
from harmricci.solitons import EngineConfig


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--order", type=int, default=4)
    ap.add_argument("--probes", type=int, default=None)
    args = ap.parse_args()

    config = EngineConfig(order=args.order)
    totals = Counter()
    for path in gallery_files():
        man = load(str(path)) if args.probes is None else load(str(path), probe_count=args.probes)
        start = time.perf_counter()
        rep = verify(man, config=config)
        counts = Counter(c.status for c in rep.checks.values())
        totals.update(counts)
        worst = max((c.max_residual for c in rep.checks.values() if c.status == "PASS"), default=0.0)
        print(f"{man.name:<16} {time.perf_counter() - start:6.2f} s  "
              f"pass {counts['PASS']:>3}  n/a {counts['N/A']:>3}  fail {counts['FAIL']:>2}  "
              f"error {counts['ERROR']:>2}  worst passing residual {worst:.1e}")
        for cid, c in rep.checks.items():
            if c.status in ("FAIL", "ERROR"):
                print(f"    {cid}: {c.status} {c.reason or ''}")
    print("total", dict(sorted(totals.items())))


if __name__ == "__main__":
    main()
