#!/usr/bin/env python3
"""Reproduce the reference experiment end to end: sweep the unit-distance
power over the (T1 ratio, Tmin ratio) grid, export the optimal force and
trajectory, and run the validation suites.

Outputs land in out/reference/{optimize,simulate,validate}.
"""

import sys
from pathlib import Path

from wormgait.cli import main

CONFIG = str(Path(__file__).resolve().parent.parent / "configs" / "reference.json")


def run() -> int:
    base = ["--config", CONFIG]
    rc = main(["optimize", *base, "--output-dir", "out/reference/optimize"])
    if rc != 0:
        return rc
    rc = main(["simulate", *base, "--output-dir", "out/reference/simulate"])
    if rc != 0:
        return rc
    return main(["validate", *base, "--output-dir", "out/reference/validate"])


if __name__ == "__main__":
    sys.exit(run())
