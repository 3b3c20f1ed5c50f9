#!/usr/bin/env python3
"""Emit guessing-probability bound curves (tight vs prior) for several
outcome counts; one CSV per d under results/."""

import pathlib
import sys

from monogamy_lab.quantum import guessing_curve_csv

OUT = pathlib.Path(__file__).resolve().parent.parent / "results"


def main() -> int:
    ds = [int(v) for v in sys.argv[1:]] or [2, 3, 4, 8]
    OUT.mkdir(exist_ok=True)
    for d in ds:
        path = OUT / f"guessing_bounds_d{d}.csv"
        path.write_text(guessing_curve_csv(d))
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
