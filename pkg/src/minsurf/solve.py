"""Area minimization over pinned-boundary PL immersions.

Two descent directions share one safeguarded Armijo line search:

* ``gradient-descent``: the negative area gradient.
* ``h1-iteration``: the gradient preconditioned by the cotangent stiffness
  matrix of the current surface with boundary rows eliminated. Because the
  area gradient equals that matrix applied to the positions, a unit step
  moves every interior vertex to the discrete harmonic map of the current
  surface metric. The system is solved by Jacobi-preconditioned conjugate
  gradients.

The line search rejects steps that increase the area beyond the Armijo
condition and steps that push any simplex below the quality floor, so every
accepted iterate stays uniformly nondegenerate.
"""

from __future__ import annotations

import csv
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.spatial import cKDTree

from . import functional as fn
from . import immersion as imm
from .errors import DomainError
from .mesh import Triangulation, edge_matrices, quality_arrays

METHODS = ("gradient-descent", "h1-iteration")
DEDUP_RTOL = 1e-6
JITTER = 0.1


@dataclass(frozen=True)
class SolverConfig:
    """Solver settings.

    ``grad_tol`` is relative to the boundary bounding-box diagonal.
    """

    method: str = "h1-iteration"
    grad_tol: float = 1e-8
    max_iters: int = 100_000
    quality_floor: float = 1e-6
    armijo_c: float = 1e-4
    multistart_count: int = 8
    seed: int = 0
    cg_rtol: float = 1e-10
    trace_path: str | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise DomainError(f"unknown method {self.method!r}; choose from {METHODS}")
        if not (self.grad_tol > 0 and self.quality_floor > 0 and 0 < self.armijo_c < 1):
            raise DomainError("tolerances must be positive")
        if self.multistart_count < 1 or self.max_iters < 0:
            raise DomainError("multistart_count must be >= 1")


@dataclass(frozen=True)
class MinimizeResult:
    immersion: imm.DiscreteImmersion
    value: float
    grad_norm: float
    iterations: int
    converged: bool
    stagnated: bool = False
    trace: list = field(default_factory=list, repr=False)


def min_quality(mesh: Triangulation, positions) -> float:
    """Smallest ``sigma_min / sigma_max`` over the embedded simplices."""
    _, _, smin, smax = quality_arrays(edge_matrices(positions, mesh.simplices))
    return float(np.min(smin / smax))


def boundary_bbox_diagonal(mesh: Triangulation, positions) -> float:
    b = np.asarray(positions)[mesh.boundary_vertices]
    return float(np.linalg.norm(b.max(0) - b.min(0)))


def cotangent_stiffness(mesh: Triangulation, positions) -> sp.csr_matrix:
    """Stiffness matrix of the PL Dirichlet energy on the embedded surface."""
    if mesh.k != 2:
        raise DomainError("cotangent weights need k = 2")
    x = np.asarray(positions, float)
    s = mesh.simplices
    rows, cols, vals = [], [], []
    for i in range(3):
        a, b, c = s[:, i], s[:, (i + 1) % 3], s[:, (i + 2) % 3]
        u, v = x[b] - x[a], x[c] - x[a]
        cr = np.linalg.norm(np.cross(u, v) if x.shape[1] == 3 else
                            (u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0])[:, None], axis=1)
        cot = np.einsum("ij,ij->i", u, v) / cr
        w = 0.5 * cot  # weight of the edge (b, c) opposite to a
        rows += [b, c, b, c]
        cols += [c, b, b, c]
        vals += [-w, -w, w, w]
    n = mesh.nv
    return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                         shape=(n, n))


def uniform_laplacian(mesh: Triangulation) -> sp.csr_matrix:
    e = mesh.edges
    n = mesh.nv
    a = sp.csr_matrix((np.ones(2 * len(e)), (np.r_[e[:, 0], e[:, 1]], np.r_[e[:, 1], e[:, 0]])),
                      shape=(n, n))
    return sp.diags(np.asarray(a.sum(axis=1)).ravel()) - a


def _jacobi_cg(a: sp.csr_matrix, b: np.ndarray, rtol: float) -> np.ndarray:
    d = a.diagonal()
    if np.any(d <= 0):
        raise DomainError("stiffness matrix has a nonpositive diagonal")
    m = sp.diags(1.0 / d)
    out = np.empty_like(b)
    for j in range(b.shape[1]):
        sol, info = spla.cg(a, b[:, j], rtol=rtol, atol=0.0, M=m, maxiter=10 * a.shape[0])
        if info != 0:
            raise DomainError(f"conjugate gradients did not converge (info={info})")
        out[:, j] = sol
    return out


def harmonic_positions(mesh: Triangulation, boundary_positions, m: int) -> np.ndarray:
    """Interior positions from the uniform graph Laplacian with pinned boundary."""
    lap = uniform_laplacian(mesh).tocsr()
    iv, bv = mesh.interior_vertices, mesh.boundary_vertices
    x = np.zeros((mesh.nv, m))
    x[bv] = boundary_positions
    if iv.size:
        rhs = -lap[iv][:, bv] @ x[bv]
        x[iv] = spla.spsolve(lap[iv][:, iv].tocsc(), rhs).reshape(iv.size, m)
    return x


def _direction(method, mesh, x, grad_full, cg_rtol):
    iv = mesh.interior_vertices
    if method == "gradient-descent":
        return -grad_full[iv]
    k = cotangent_stiffness(mesh, x)[iv][:, iv]
    return -_jacobi_cg(k.tocsr(), grad_full[iv], cg_rtol)


def minimize(init: imm.DiscreteImmersion, cfg: SolverConfig = SolverConfig()) -> MinimizeResult:
    """Safeguarded descent on the discrete area with the boundary pinned."""
    mesh = init.mesh
    x = np.array(init.positions, float)
    if not np.all(init.general_position_mask()):
        raise DomainError("initial configuration is not immersed")
    iv = mesh.interior_vertices
    tol = cfg.grad_tol * max(boundary_bbox_diagonal(mesh, x), 1e-300)
    floor = cfg.quality_floor
    value = fn.area_of(mesh, x)
    grad = fn.volume_gradient_full(mesh, x)
    gnorm = float(np.max(np.abs(grad[iv]))) if iv.size else 0.0
    q = min_quality(mesh, x)
    trace = [(0, value, gnorm, q, 0.0)]
    step = 1.0
    it = 0
    stagnated = False
    while gnorm > tol and it < cfg.max_iters:
        d = _direction(cfg.method, mesh, x, grad, cfg.cg_rtol)
        slope = float(np.sum(grad[iv] * d))
        if slope >= 0:  # preconditioner lost definiteness; fall back
            d = -grad[iv]
            slope = float(np.sum(grad[iv] * d))
        alpha = min(1.0, 2 * step) if cfg.method == "h1-iteration" else 2 * step
        accepted = False
        while alpha > 1e-16:
            xn = x.copy()
            xn[iv] += alpha * d
            qn = min_quality(mesh, xn)
            if qn >= floor:
                vn = fn.area_of(mesh, xn)
                if vn <= value + cfg.armijo_c * alpha * slope:
                    accepted = True
                    break
            alpha *= 0.5
        if not accepted:
            stagnated = True
            break
        it += 1
        if vn > value:  # float round-off; keep the sequence monotone
            stagnated = True
            break
        x, value, step, q = xn, vn, alpha, qn
        grad = fn.volume_gradient_full(mesh, x)
        gnorm = float(np.max(np.abs(grad[iv])))
        trace.append((it, value, gnorm, q, alpha))
    if cfg.trace_path:
        write_trace(cfg.trace_path, trace)
    out = init.with_positions(x)
    return MinimizeResult(out, value, gnorm, it, gnorm <= tol, stagnated, trace)


def write_trace(path, trace) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("# minsurf trace v1\n")
        w = csv.writer(fh)
        w.writerow(["iter", "value", "grad_norm", "min_quality", "step_length"])
        for row in trace:
            w.writerow([row[0]] + [repr(float(v)) for v in row[1:]])


def minimality_residual(f: imm.DiscreteImmersion) -> float:
    """Max over interior vertices of ``|grad A| / (one-ring area / 3)``."""
    mesh = f.mesh
    iv = mesh.interior_vertices
    if iv.size == 0:
        return 0.0
    grad = fn.volume_gradient_full(mesh, f.positions)
    vols = fn.simplex_volumes(edge_matrices(f.positions, mesh.simplices))
    ring = np.bincount(mesh.simplices.ravel(), weights=np.repeat(vols, mesh.k + 1),
                       minlength=mesh.nv)
    return float(np.max(np.linalg.norm(grad[iv], axis=1) / (ring[iv] / (mesh.k + 1))))


# ----------------------------------------------------------------------
# minimizer sets


@dataclass(frozen=True)
class MinimizerEntry:
    immersion: imm.DiscreteImmersion
    value: float
    grad_norm: float
    converged: bool
    start: str


@dataclass(frozen=True)
class MinimizerSet:
    """A finite set of approximate minimizers sorted by value."""

    entries: tuple
    diagnostics: tuple = ()

    @property
    def delta(self) -> float:
        vals = [e.value for e in self.entries if e.converged]
        return float(max(vals) - min(vals)) if vals else np.inf

    @property
    def best(self) -> MinimizerEntry:
        return self.entries[0]

    def __len__(self):
        return len(self.entries)


def point_triangle_distance(p, a, b, c) -> np.ndarray:
    """Euclidean distance from points ``p`` to triangles ``(a, b, c)``, all (n, m)."""
    e1, e2, d = b - a, c - a, p - a
    g11 = np.einsum("ij,ij->i", e1, e1)
    g12 = np.einsum("ij,ij->i", e1, e2)
    g22 = np.einsum("ij,ij->i", e2, e2)
    r1 = np.einsum("ij,ij->i", d, e1)
    r2 = np.einsum("ij,ij->i", d, e2)
    det = g11 * g22 - g12 * g12
    s = (g22 * r1 - g12 * r2) / det
    t = (g11 * r2 - g12 * r1) / det
    inside = (s >= 0) & (t >= 0) & (s + t <= 1)
    foot = a + s[:, None] * e1 + t[:, None] * e2
    best = np.where(inside, np.linalg.norm(p - foot, axis=1), np.inf)

    def seg(u, v):
        w = v - u
        lam = np.clip(np.einsum("ij,ij->i", p - u, w) / np.einsum("ij,ij->i", w, w), 0, 1)
        return np.linalg.norm(p - u - lam[:, None] * w, axis=1)

    return np.minimum(best, np.minimum(seg(a, b), np.minimum(seg(b, c), seg(c, a))))


def _one_sided_image_distance(f: imm.DiscreteImmersion, h: imm.DiscreteImmersion, near: int) -> float:
    tri = h.positions[h.mesh.simplices]
    tree = cKDTree(tri.mean(axis=1))
    _, cand = tree.query(f.positions, k=min(near, h.mesh.ns))
    cand = np.atleast_2d(cand.T).T
    p = np.repeat(f.positions, cand.shape[1], axis=0)
    t = tri[cand.ravel()]
    d = point_triangle_distance(p, t[:, 0], t[:, 1], t[:, 2]).reshape(cand.shape)
    return float(np.max(np.min(d, axis=1)))


def image_distance(f: imm.DiscreteImmersion, h: imm.DiscreteImmersion, near: int = 16) -> float:
    """Upper estimate of the Hausdorff distance between vertex sets and the opposite surface.

    Only the ``near`` triangles with closest centroids are examined per
    vertex, so the value can only overestimate the true distance.
    """
    return max(_one_sided_image_distance(f, h, near), _one_sided_image_distance(h, f, near))


def same_minimizer(e: MinimizerEntry, k: MinimizerEntry, diag: float) -> bool:
    """Same parameterized configuration, or equal area and coinciding image."""
    tol = DEDUP_RTOL * diag
    if imm.dist_imm(e.immersion, k.immersion, boundary=False).total < tol:
        return True
    if abs(e.value - k.value) > DEDUP_RTOL * max(abs(k.value), 1.0):
        return False
    return image_distance(e.immersion, k.immersion) < tol


def initializations(mesh: Triangulation, curve, count: int, seed: int, previous=None):
    """Seeded starting configurations.

    Order: prolongation of ``previous`` (positions on this mesh), harmonic
    interior, cone toward the boundary centroid, then random jitters of
    these by 10% of the boundary bounding box.
    """
    bpos = curve.pin(mesh)
    harm = harmonic_positions(mesh, bpos, curve.dim)
    centroid = bpos.mean(axis=0)
    cone = harm.copy()
    iv = mesh.interior_vertices
    cone[iv] = centroid + 0.5 * (harm[iv] - centroid)
    base = []
    if previous is not None:
        prev = np.array(previous, float)
        # new boundary vertices sit on chords; move them onto the curve
        prev[mesh.boundary_vertices] = bpos
        base.append(("prolonged", prev))
    base += [("harmonic", harm), ("cone", cone)]
    out = base[:count]
    rng = np.random.default_rng(seed)
    diag = float(np.linalg.norm(bpos.max(0) - bpos.min(0)))
    j = 0
    while len(out) < count:
        name, x = base[j % len(base)]
        y = x.copy()
        y[iv] += JITTER * diag * rng.standard_normal((iv.size, curve.dim))
        out.append((f"jitter-{name}-{j}", y))
        j += 1
    return out


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("MINSURF_THREADS", "1")))
    except ValueError:
        return 1


def multistart_minimize(mesh: Triangulation, curve, cfg: SolverConfig = SolverConfig(),
                        previous=None) -> MinimizerSet:
    """Run :func:`minimize` from several starts and deduplicate the results."""
    starts = initializations(mesh, curve, cfg.multistart_count, cfg.seed, previous)
    single = replace(cfg, trace_path=None)

    def run(item):
        name, x = item
        try:
            f = imm.DiscreteImmersion(mesh, x, curve)
        except DomainError as exc:
            return name, None, f"{name}: invalid start ({exc})"
        try:
            res = minimize(f, single)
        except DomainError as exc:
            return name, None, f"{name}: {exc}"
        return name, res, ""

    workers = min(_threads(), len(starts))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(run, starts))
    else:
        results = [run(s) for s in starts]
    diags = tuple(d for _, _, d in results if d)
    found = [MinimizerEntry(r.immersion, r.value, r.grad_norm, r.converged, n)
             for n, r, _ in results if r is not None]
    bp = curve.pin(mesh)
    diag = float(np.linalg.norm(bp.max(0) - bp.min(0))) if bp.size else 1.0
    # start order decides which representative of a duplicate survives
    kept: list[MinimizerEntry] = []
    for e in found:
        if not any(same_minimizer(e, k, diag) for k in kept):
            kept.append(e)
    kept.sort(key=lambda e: e.value)
    return MinimizerSet(tuple(kept), diags)
