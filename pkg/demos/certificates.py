"""Randomized certificate sweeps, including the failing SPD openness bound.

    python3 demos/certificates.py [n]
"""

import sys

import numpy as np

from minsurf import posdef, sweeps


def main(n=200):
    for name in list(sweeps.SWEEPS) + list(sweeps.EXTRA_SWEEPS):
        r = sweeps.run_sweep(name, n, 1)
        print(f"{name:28s} {r.violations:4d}/{r.applicable} violations, worst actual/bound {r.worst_ratio:.3f}")
    # the smallest counterexample to the stated SPD bound
    c = posdef.certify_spd_perturbation(np.eye(2), np.eye(2), -0.1 * np.eye(2), "corrected")
    print(f"b = g = I, x = -0.1 I: d_P = {c.actual:.4f}, stated bound 0.1414, corrected {c.bound:.4f}")


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 200)
