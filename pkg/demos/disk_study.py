"""Flat-disk refinement study.

Minimizes area over the unit circle on the hexagon mesh for levels 0-4 and
prints areas against pi, the consistency diagnostics and the distance
between successive minimizer sets.

    python3 demos/disk_study.py [output_dir]
"""

import sys
import time

import numpy as np

from minsurf import study


def main(out=None):
    cfg = study.StudyConfig(levels=4, outputs=out)
    t0 = time.perf_counter()
    rep = study.run_converge_study(cfg)
    print(f"study finished in {time.perf_counter() - t0:.1f} s")
    print(f"{'level':>5} {'simplices':>9} {'area':>10} {'|A - pi|':>10} {'delta':>10} {'rho':>10} {'H(prev)':>9}")
    for r in rep.levels:
        delta = r.errors.delta_total if r.errors else np.nan
        rho = r.errors.rho if r.errors else np.nan
        print(f"{r.level:5d} {r.mesh.ns:9d} {r.area:10.6f} {abs(r.area - np.pi):10.3e} "
              f"{delta:10.3e} {rho:10.3e} {r.hausdorff_prev:9.5f}")
    err = np.abs(rep.areas - np.pi)
    print("area error ratios:", np.round(err[1:] / err[:-1], 3))
    if out:
        print(f"meshes and summary.csv written to {out}")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else None)
