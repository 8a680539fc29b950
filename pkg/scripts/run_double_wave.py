#!/usr/bin/env python3
"""Homogeneous and heterogeneous double-wave scenarios; emits the NDoF
and degree-count series plus snapshots."""
import sys

from monodg.runner import run_simulation
from monodg.scenarios import instantiate


def main(workdir="."):
    for name in ("test2a_desk", "test2b_desk"):
        cfg = instantiate(name, workdir)
        cfg.snapshot_every = 100
        summary = run_simulation(cfg)
        print(f"{name}: {summary}")
    return 0


if __name__ == "__main__":
    sys.exit(main(*sys.argv[1:]))
