#!/usr/bin/env python3
"""Three adaptive runs differing only in the marking indicator (full,
jump-only, residual-only), compared against the uniform twin."""
import sys

from monodg.scenarios import instantiate
from monodg.studies import indicator_comparison


def main(workdir="."):
    cfg = instantiate("test1c_desk", workdir)
    res = indicator_comparison(cfg)
    full = res.errors["full"]
    print(f"thresholds: {res.thresholds}")
    for marking in ("full", "jump", "residual"):
        err = res.errors[marking]
        print(f"{marking:9s}: L2 vs uniform {err:.4e} "
              f"({err / full:.2f}x full), final NDoF {res.ndof_final[marking]}, "
              f"degree counts {res.degree_counts[marking].tolist()}")
    return 0


if __name__ == "__main__":
    sys.exit(main(*sys.argv[1:]))
