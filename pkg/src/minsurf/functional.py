"""Area functionals: discrete, smooth by quadrature, and their continuity.

The discrete functional sums the k-dimensional Hausdorff measure of every
embedded simplex, ``sqrt(det(E^T E)) / k!``. Its gradient follows from
``d sqrt(det G) = sqrt(det G) tr(G^{-1} dG) / 2`` with ``G = E^T E``, giving
``dV/dE = V E G^{-1}`` per simplex.

A :class:`SampledImmersion` is anything that can be evaluated (position and
parameter Jacobian) at barycentric points of mesh simplices. That covers
closed-form charts, PL interpolants, and reconstructions with a boundary
correction, all of which are smooth on each simplex but not across them.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial
from typing import Callable

import numpy as np

from . import immersion as imm
from .errors import DomainError, checked
from .mesh import Triangulation, edge_matrices, param_point, simplex_volumes

# ----------------------------------------------------------------------
# discrete functional


def area_of(mesh: Triangulation, positions) -> float:
    e = edge_matrices(np.asarray(positions, float), mesh.simplices)
    return float(np.sum(simplex_volumes(e)))


def discrete_volume(f: imm.DiscreteImmersion) -> float:
    """Sum of embedded simplex measures."""
    return area_of(f.mesh, f.positions)


def volume_gradient_full(mesh: Triangulation, positions) -> np.ndarray:
    """Gradient of :func:`area_of` with respect to every vertex, shape (nv, m)."""
    x = np.asarray(positions, float)
    e = edge_matrices(x, mesh.simplices)  # (ns, m, k)
    k = e.shape[2]
    g = np.swapaxes(e, 1, 2) @ e
    det = np.linalg.det(g)
    if np.any(det <= 0):
        bad = int(np.flatnonzero(det <= 0)[0])
        raise DomainError(f"gradient undefined: simplex {bad} is degenerate")
    vol = np.sqrt(det) / factorial(k)
    de = vol[:, None, None] * np.swapaxes(np.linalg.solve(g, np.swapaxes(e, 1, 2)), 1, 2)
    per_vertex = np.concatenate([-de.sum(axis=2, keepdims=True), de], axis=2)  # (ns, m, k+1)
    out = np.zeros_like(x)
    idx = mesh.simplices.ravel()
    contrib = np.swapaxes(per_vertex, 1, 2).reshape(-1, x.shape[1])
    for j in range(x.shape[1]):
        out[:, j] = np.bincount(idx, weights=contrib[:, j], minlength=mesh.nv)
    return out


def discrete_volume_gradient(f: imm.DiscreteImmersion) -> np.ndarray:
    """Gradient with respect to the interior vertices, shape (n_interior, m)."""
    return volume_gradient_full(f.mesh, f.positions)[f.mesh.interior_vertices]


def finite_difference_gradient(mesh: Triangulation, positions, step: float) -> np.ndarray:
    """Central differences of :func:`area_of` for every interior coordinate."""
    x = np.array(positions, float)
    out = np.zeros((mesh.interior_vertices.size, x.shape[1]))
    for a, v in enumerate(mesh.interior_vertices):
        for j in range(x.shape[1]):
            old = x[v, j]
            x[v, j] = old + step
            fp = area_of(mesh, x)
            x[v, j] = old - step
            fm = area_of(mesh, x)
            x[v, j] = old
            out[a, j] = (fp - fm) / (2 * step)
    return out


# ----------------------------------------------------------------------
# quadrature on the reference triangle (weights sum to 1)


def _sym_rule(groups):
    pts, wts = [], []
    for w, orbit in groups:
        for b in orbit:
            pts.append(b)
            wts.append(w)
    return np.array(pts, float), np.array(wts, float)


def _orbit3(a):
    b = 1 - 2 * a
    return [(a, a, b), (a, b, a), (b, a, a)]


_C = (1 / 3, 1 / 3, 1 / 3)
TRIANGLE_RULES = {
    1: _sym_rule([(1.0, [_C])]),
    2: _sym_rule([(1 / 3, _orbit3(1 / 6))]),
    4: _sym_rule([
        (0.223381589678011, _orbit3(0.445948490915965)),
        (0.109951743655322, _orbit3(0.091576213509771)),
    ]),
    5: _sym_rule([
        (0.225, [_C]),
        (0.132394152788506, _orbit3(0.470142064105115)),
        (0.125939180544827, _orbit3(0.101286507323456)),
    ]),
}


def quadrature_rule(k: int, degree: int):
    """Barycentric points and weights (summing to 1) of a symmetric rule."""
    if k == 2:
        for d in sorted(TRIANGLE_RULES):
            if d >= degree:
                return TRIANGLE_RULES[d]
        raise DomainError(f"no triangle rule of degree {degree}")
    if k == 1:
        x, w = np.polynomial.legendre.leggauss(max(1, (degree + 2) // 2))
        s = 0.5 * (x + 1)
        return np.stack([1 - s, s], 1), 0.5 * w
    raise DomainError(f"no quadrature for k = {k}")


# ----------------------------------------------------------------------
# sampled immersions

Evaluator = Callable[[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]


@dataclass(frozen=True, eq=False)
class SampledImmersion:
    """A map evaluable at barycentric points of the mesh simplices.

    Parameters
    ----------
    mesh : Triangulation
    evaluator : callable
        ``evaluator(simplex_ids (n,), bary (n, k+1)) -> (points (n, m),
        jacobians (n, m, k))`` with the Jacobian taken with respect to the
        parameter coordinates.
    degree : int
        Quadrature degree used for the smooth functional.
    name : str
    """

    mesh: Triangulation
    evaluator: Evaluator
    degree: int = 4
    name: str = "sampled"

    def evaluate(self, simplex_ids, bary):
        ids = np.atleast_1d(np.asarray(simplex_ids, dtype=np.int64))
        bary = np.atleast_2d(np.asarray(bary, float))
        ids, bary = np.broadcast_arrays(ids[:, None], bary)
        return self.evaluator(ids[:, 0], bary)

    def at_vertices(self) -> np.ndarray:
        """Value at every vertex (from one incident simplex)."""
        mesh = self.mesh
        sid = np.empty(mesh.nv, dtype=np.int64)
        corner = np.empty(mesh.nv, dtype=np.int64)
        flat = mesh.simplices.ravel()
        sid[flat[::-1]] = (np.arange(flat.size) // (mesh.k + 1))[::-1]
        corner[flat[::-1]] = (np.arange(flat.size) % (mesh.k + 1))[::-1]
        bary = np.eye(mesh.k + 1)[corner]
        return self.evaluate(sid, bary)[0]

    def on_mesh(self, mesh: Triangulation) -> SampledImmersion:
        """The same map evaluated through a refinement of its mesh."""
        if mesh is self.mesh:
            return self
        return SampledImmersion(mesh, _refined_evaluator(self, mesh), self.degree, self.name)


def _ancestor_simplex(fine: Triangulation, coarse: Triangulation):
    """For each fine simplex: containing coarse simplex and affine bary map."""
    # locate by centroid: walk the chain, mapping simplices to parents
    chain = []
    for m in fine.ancestors():
        if m is coarse:
            break
        chain.append(m)
    else:
        raise DomainError("mesh is not a refinement of the sampled mesh")
    # 4:1 subdivision orders children as 4 blocks of the parent list
    sid = np.arange(fine.ns)
    for m in chain:
        sid = sid % m.parent.ns
    return sid


def _refined_evaluator(f: SampledImmersion, fine: Triangulation) -> Evaluator:
    coarse = f.mesh
    parent = _ancestor_simplex(fine, coarse)
    # barycentric coordinates of fine vertices w.r.t. their coarse simplex
    pc = coarse.points[coarse.simplices[parent]]  # (nsf, k+1, d)
    pf = fine.points[fine.simplices]               # (nsf, k+1, d)
    a = np.concatenate([np.swapaxes(pc, 1, 2), np.ones((fine.ns, 1, coarse.k + 1))], axis=1)
    rhs = np.concatenate([np.swapaxes(pf, 1, 2), np.ones((fine.ns, 1, fine.k + 1))], axis=1)
    # columns: coarse barycentrics of each fine corner
    corner_bary = np.linalg.solve(a, rhs)  # (nsf, k+1 coarse, k+1 fine)

    def ev(ids, bary):
        cb = np.einsum("nij,nj->ni", corner_bary[ids], bary)
        cb = np.clip(cb, 0.0, None)
        cb /= cb.sum(axis=1, keepdims=True)
        return f.evaluator(parent[ids], cb)

    return ev


def pl_evaluator(mesh: Triangulation, positions) -> Evaluator:
    pos = np.asarray(positions, float)
    d = imm.differentials_of(mesh, pos)

    def ev(ids, bary):
        pts = np.einsum("ni,nij->nj", bary, pos[mesh.simplices[ids]])
        return pts, d[ids]

    return ev


def as_sampled(f: imm.DiscreteImmersion, degree: int = 4) -> SampledImmersion:
    """The PL interpolant of a discrete immersion."""
    return SampledImmersion(f.mesh, pl_evaluator(f.mesh, f.positions), degree, "pl")


def chart_evaluator(mesh: Triangulation, chart) -> Evaluator:
    """Evaluator for ``chart(x (n,d), anchor (n,d)) -> (pos, jac)``.

    The anchor is the simplex centroid; charts that are smooth only per
    sector use it to pick the branch.
    """
    centroids = mesh.points[mesh.simplices].mean(axis=1)

    def ev(ids, bary):
        x = np.einsum("ni,nij->nj", bary, mesh.points[mesh.simplices[ids]])
        return chart(x, centroids[ids])

    return ev


def from_chart(mesh: Triangulation, chart, degree: int = 4, name: str | None = None):
    return SampledImmersion(mesh, chart_evaluator(mesh, chart), degree,
                            name or getattr(chart, "name", type(chart).__name__))


def quadrature_nodes(mesh: Triangulation, degree: int):
    """Flattened (simplex id, bary, weight * param volume) over all simplices."""
    bary, w = quadrature_rule(mesh.k, degree)
    nq = w.size
    ids = np.repeat(np.arange(mesh.ns), nq)
    b = np.tile(bary, (mesh.ns, 1))
    wt = (mesh.param_volumes[:, None] * w[None, :]).ravel()
    return ids, b, wt


def smooth_volume(f: SampledImmersion, degree: int | None = None) -> float:
    """Quadrature of ``sqrt(det(J^T J))`` over the parameter domain."""
    ids, b, wt = quadrature_nodes(f.mesh, degree or f.degree)
    _, jac = f.evaluate(ids, b)
    g = np.swapaxes(jac, 1, 2) @ jac
    det = np.linalg.det(g)
    s = np.linalg.svd(jac, compute_uv=False)
    if np.any(~(s[:, -1] > 1e-12 * s[:, 0])):
        bad = int(ids[np.flatnonzero(~(s[:, -1] > 1e-12 * s[:, 0]))[0]])
        raise DomainError(f"singular derivative at a quadrature node of simplex {bad}")
    return float(np.sum(wt * np.sqrt(det)))


def check_injective_nodes(f: SampledImmersion, degree: int | None = None) -> None:
    ids, b, _ = quadrature_nodes(f.mesh, degree or f.degree)
    _, jac = f.evaluate(ids, b)
    s = np.linalg.svd(jac, compute_uv=False)
    if np.any(~(s[:, -1] > 1e-12 * s[:, 0])):
        raise DomainError("derivative not injective at a quadrature node")


# ----------------------------------------------------------------------
# continuity of the functional


def certify_volume_modulus(f: imm.DiscreteImmersion, h: imm.DiscreteImmersion):
    """``|F(h) - F(f)| <= F(f) exp(sqrt(k) t) sqrt(k) t`` with ``t = d_Imm(f, h)``."""
    k = f.k
    t = imm.dist_imm(f, h, boundary=False).total
    ff = discrete_volume(f)
    bound = ff * np.exp(np.sqrt(k) * t) * np.sqrt(k) * t
    return checked(True, bound, abs(discrete_volume(h) - ff), "volumeislipschitz1")
