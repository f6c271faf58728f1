"""Regenerate tests/fixtures/pam_gaps.json, the archived MI-gap curves on PAM channels.

    python scripts/make_pam_gaps.py [--out tests/fixtures/pam_gaps.json]

Channels: equally spaced levels 2i - q - 1, sigma = 1, N = 128 outputs,
q in {2, 4, 8}; M = 2..20. KL-means uses 100 restarts of 100 iterations.
"""
import argparse
import json
import platform
from pathlib import Path

import numpy as np

from dmcquant.channel import PamSpec, discretize_pam
from dmcquant.cli import compare_gaps

QS = (2, 4, 8)
N = 128
MS = tuple(range(2, 21))
ALGS = ("dp", "gc", "klmeans")
RESTARTS = ITERS = 100
SEED = 0


def pam_gap_table(q: int) -> list[dict]:
    ch = discretize_pam(PamSpec.standard(q, 1.0, N))
    return compare_gaps(ch, MS, ALGS, 1.0, SEED, RESTARTS, ITERS)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "tests/fixtures/pam_gaps.json"))
    args = ap.parse_args()
    doc = {
        "n": N, "sigma": 1.0, "M": list(MS), "algs": list(ALGS), "restarts": RESTARTS, "iters": ITERS,
        "seed": SEED, "numpy": np.__version__, "python": platform.python_version(),
        "gaps_bits": {str(q): pam_gap_table(q) for q in QS},
    }
    Path(args.out).write_text(json.dumps(doc, indent=1) + "\n")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
