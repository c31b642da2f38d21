#!/usr/bin/env python3
"""Walk the bundled fixture files through every CLI surface.

Prints the same text a user would see at the terminal, section by
section, and exits nonzero if any invocation misbehaves.  Handy as a
smoke test after editing the engine or the fixtures.
"""

import argparse
import sys
from pathlib import Path

from catbound.cli import main as cli

REPO = Path(__file__).resolve().parents[1]


def section(title):
    print()
    print(f"== {title} " + "=" * max(0, 60 - len(title)))


def run(tag, argv, expect=0):
    print(f"$ catbound {' '.join(argv)}")
    code = cli(list(argv))
    ok = code == expect
    print(f"  -> exit {code}" + ("" if ok else f"  (expected {expect})"))
    print()
    return ok


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--fixtures", type=Path,
                    default=REPO / "tests" / "fixtures")
    args = ap.parse_args()

    ex = str(args.fixtures / "examples.catb")
    sq = str(args.fixtures / "square_coxeter.catb")
    bad = str(args.fixtures / "z4_polygon.catb")
    dmax = str(args.fixtures / "double_max.catb")
    dsum = str(args.fixtures / "double_sum.catb")
    br = str(args.fixtures / "branched_five.catb")

    all_ok = True

    section("validation")
    for f in (ex, sq, bad, dmax, dsum, br):
        all_ok &= run("validate", ["validate", f])

    section("category bounds")
    all_ok &= run("bound", ["bound", "--target", "ZZ", "--family", "Tr", ex])
    all_ok &= run("bound", ["bound", "--target", "Am46", "--family", "Fin", ex])
    all_ok &= run("bound", ["bound", "--target", "FC", "--family", "Am", ex])
    all_ok &= run("bound", ["bound", "--target", "FC", "--invariant", "gd", ex])

    section("topological complexity")
    all_ok &= run("tc", ["tc", "--target", "ZZ", ex])

    section("developments")
    all_ok &= run("develop", ["develop", "--target", "Am46",
                              "--radius", "3", ex])
    all_ok &= run("develop", ["develop", "--target", "SQ",
                              "--radius", "1", sq])

    section("link condition")
    all_ok &= run("curvature", ["check-curvature", "--target", "SQ", sq])
    all_ok &= run("curvature", ["check-curvature", "--target", "BAD", bad])

    section("certificates")
    all_ok &= run("certify", ["certify", "--target", "DblMax", dmax])
    all_ok &= run("certify", ["certify", "--target", "DblSum", dsum])
    all_ok &= run("certify", ["certify", "--target", "BrFive", br])

    if not all_ok:
        print("some invocations failed", file=sys.stderr)
        return 1
    print("all fixture invocations behaved")
    return 0


if __name__ == "__main__":
    sys.exit(main())
