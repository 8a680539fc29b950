#!/usr/bin/env python3
"""Uniform-degree convergence table on the traveling-wave benchmark
(manufactured forcing), mirroring the error/rate study."""
import sys

from monodg.cli import main

if __name__ == "__main__":
    sys.exit(main(["convergence", "--out", "out/convergence"] + sys.argv[1:]))
