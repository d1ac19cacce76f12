"""Set limits on a finite metric space.

A sequence alternates between a shrinking cluster around point 0 and a
distant point; its inner limit keeps only what every tail contains, its
outer limit everything visited infinitely often. Thickening every set by
a vanishing radius leaves both limits unchanged.
"""

import numpy as np

from minsurf import varan


def main():
    pts = np.array([[0.0, 0.0], [0.3, 0.0], [0.0, 0.3], [2.0, 0.0]])
    space = varan.FiniteMetricSet.from_points(pts)
    sets = []
    for n in range(20):
        s = {0} if n >= 10 else {0, 1, 2}
        if n % 2:
            s = s | {3}
        sets.append(s)
    radii = 0.9 * space.separation() * 2.0 ** -np.arange(len(sets))
    res = varan.finite_limits(space, sets, radii)
    print("inner limit:", sorted(res.li))
    print("outer limit:", sorted(res.ls))
    print("eps grid:", [f"{e:g}" for e in res.eps_grid])
    print("Hausdorff distance of the last two sets:",
          varan.hausdorff_distance(space, sets[-2], sets[-1]))

    # fibre-wise minimum along a non-injective map
    values = [("a", 1.0), ("b", 0.4), ("c", 2.0), ("d", 0.45)]
    fibers = {"a": "X", "b": "Y", "c": "X", "d": "Z"}
    print("argmin^0.1 of the pushforward:", sorted(varan.pushforward_argmin(values, fibers, 0.1)))


if __name__ == "__main__":
    main()
