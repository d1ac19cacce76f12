"""Independent brute-force oracles shared by the test modules."""

import itertools

import numpy as np
import scipy.linalg


def logm_oracle(b, c):
    """``|log(L^-T c L^-1)|_F`` via scipy's general matrix logarithm."""
    lo = scipy.linalg.cholesky(b, lower=False)
    li = np.linalg.inv(lo)
    w = li.T @ c @ li
    lw, _ = scipy.linalg.logm(w, disp=False)
    return np.linalg.norm(np.real(lw), "fro")


def brute_limits(dist, sets, eps_grid, tail_start):
    """Inner and outer limits by literal quantifier enumeration."""
    n = dist.shape[0]
    N = len(sets)

    def near(x, k, eps):
        return any(dist[x, y] < eps for y in sets[k])

    li, ls = set(), set()
    for x in range(n):
        if all(any(all(near(x, k, e) for k in range(m, N)) for m in range(tail_start + 1))
               for e in eps_grid):
            li.add(x)
        if all(all(any(near(x, k, e) for k in range(m, N)) for m in range(min(tail_start + 1, N)))
               for e in eps_grid):
            ls.add(x)
    return li, ls


def brute_pushforward_argmin(values, fibers, rho):
    classes = {}
    for y, v in values:
        classes.setdefault(fibers[y], []).append(v)
    push = {c: min(vs) for c, vs in classes.items()}
    best = min(push.values())
    return {c for c, v in push.items() if v <= best + rho}


def brute_hausdorff(dist, a, b):
    one = max(min(dist[x, y] for y in b) for x in a)
    two = max(min(dist[x, y] for x in a) for y in b)
    return max(one, two)


def random_finite_instance(rng, max_points=20, max_sets=40):
    """Random finite metric space (points in the plane) and a random set sequence."""
    n = int(rng.integers(2, max_points + 1))
    pts = rng.uniform(0, 1, (n, 2))
    dist = np.linalg.norm(pts[:, None] - pts[None], axis=2)
    N = int(rng.integers(4, max_sets + 1))
    core = set(rng.choice(n, int(rng.integers(1, n + 1)), replace=False).tolist())
    sets = []
    for _ in range(N):
        # a random recurring core plus random noise points
        s = {x for x in core if rng.random() < 0.7}
        s |= set(rng.choice(n, int(rng.integers(0, 3)), replace=True).tolist())
        sets.append(s or {int(rng.integers(n))})
    return dist, sets


def all_subsets(n):
    for r in range(1, n + 1):
        yield from itertools.combinations(range(n), r)
