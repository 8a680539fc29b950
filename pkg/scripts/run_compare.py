#!/usr/bin/env python3
"""Adaptive vs uniform twin runs on the wave-tracking scenario:
parity of errors, NDoF trace, and the post-wave linear-element state."""
import sys

from monodg.cli import main

if __name__ == "__main__":
    sys.exit(main(["compare", "--scenario", "test1b_desk",
                   "--out", "out/compare"] + sys.argv[1:]))
