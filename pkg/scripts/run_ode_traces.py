#!/usr/bin/env python3
"""Point-model traces with and without the gated stimulus (CSV t,v),
reporting spike times."""
import sys

from monodg.cli import main

if __name__ == "__main__":
    code = main(["ode", "--amplitude", "0", "--t-end", "100",
                 "--out", "out/ode_free.csv"])
    code |= main(["ode", "--amplitude", "9", "--t-end", "30",
                  "--out", "out/ode_forced.csv"])
    sys.exit(code)
