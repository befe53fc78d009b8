#!/usr/bin/env python3
"""Simulate the constant-force closed orbit (the qualitative phase-plane
demo): a constant magnitude F = 5 with f_bw = 2, f_fw = 1 closes in
(d, v, u) when the period, T1 and the initial (u1, v1) are taken from the
constant-gait construction.  Writes out/orbit/{trajectory.csv,summary.json}.
"""

import sys
from pathlib import Path

from wormgait.cli import main

CONFIG = str(Path(__file__).resolve().parent.parent / "configs" / "orbit.json")

if __name__ == "__main__":
    sys.exit(main(["simulate", "--config", CONFIG]))
