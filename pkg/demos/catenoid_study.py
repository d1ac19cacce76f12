"""Catenoid between two coaxial circles.

Circles of radius cosh(0.5) at heights -0.5 and 0.5 bound a stable
catenoid of area 2 pi (0.5 + sinh 0.5 cosh 0.5). The cylinder mesh is
refined three times.

    python3 demos/catenoid_study.py
"""

import time

import numpy as np

from minsurf import study


def main():
    cfg = study.StudyConfig(domain="cylinder", curve={"kind": "catenoid", "half_height": "0.5"},
                            mesh={"n_around": "6", "n_along": "1"}, levels=3)
    ref = 2 * np.pi * (0.5 + np.sinh(0.5) * np.cosh(0.5))
    t0 = time.perf_counter()
    rep = study.run_converge_study(cfg, write=False)
    print(f"study finished in {time.perf_counter() - t0:.1f} s, reference area {ref:.6f}")
    for r in rep.levels:
        print(f"level {r.level}: {r.mesh.ns:4d} simplices, area {r.area:.6f} "
              f"({(r.area - ref) / ref:+.3%}), residual {r.residual:.1e}")


if __name__ == "__main__":
    main()
