"""Simplicial parameter domains.

A :class:`Triangulation` stores the combinatorics of a simplicial
k-manifold with boundary together with flat parameter coordinates for every
vertex. Boundary vertices additionally carry the component index and the
parameter ``t`` in ``[0, 1)`` of the boundary curve they are pinned to.

The two reference constructions are

* :func:`build_disk`: the regular hexagon of circumradius 1 cut into a
  triangular lattice; ``t`` is normalized arc length along the hexagon.
* :func:`build_cylinder`: a polygonal annulus whose rings are similar
  regular polygons; ``t`` is normalized arc length along each polygon.

Both use arc length along straight polygon sides, so an edge's chord
midpoint and its parameter midpoint coincide. That makes 4:1 subdivision
exact: children are similar to parents and new boundary vertices land at
``t``-midpoints.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from math import factorial

import numpy as np

from .errors import DomainError, UnsupportedDimensionError

BARY_TOL = 1e-12
GENERAL_POSITION_RTOL = 1e-10


@dataclass(frozen=True, eq=False)
class Triangulation:
    """Combinatorics and flat parameter geometry of a simplicial manifold.

    Parameters
    ----------
    points : ndarray, shape (nv, d)
        Parameter coordinates of the vertices.
    simplices : ndarray of int, shape (ns, k + 1)
        Vertex ids per simplex.
    boundary_vertices : ndarray of int, shape (nb,)
        Ids of the boundary vertices.
    boundary_component : ndarray of int, shape (nb,)
        Boundary component of each boundary vertex.
    boundary_t : ndarray, shape (nb,)
        Curve parameter of each boundary vertex, in ``[0, 1)``.
    parent : Triangulation, optional
        The coarser mesh this one was subdivided from.
    parent_edges : ndarray of int, shape (nv - parent.nv, 2), optional
        For each vertex created by subdivision, the endpoints of the coarse
        edge it bisects. Coarse vertices keep their ids.
    """

    points: np.ndarray
    simplices: np.ndarray
    boundary_vertices: np.ndarray
    boundary_component: np.ndarray
    boundary_t: np.ndarray
    parent: Triangulation | None = field(default=None, repr=False)
    parent_edges: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        for name in ("points", "boundary_t"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        for name in ("simplices", "boundary_vertices", "boundary_component"):
            arr = np.array(getattr(self, name), dtype=np.int64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.points.ndim != 2 or self.simplices.ndim != 2:
            raise DomainError("points and simplices must be 2-d arrays")
        self.validate()

    # ------------------------------------------------------------------
    @property
    def k(self) -> int:
        return self.simplices.shape[1] - 1

    @property
    def nv(self) -> int:
        return self.points.shape[0]

    @property
    def ns(self) -> int:
        return self.simplices.shape[0]

    @cached_property
    def is_boundary(self) -> np.ndarray:
        mask = np.zeros(self.nv, dtype=bool)
        mask[self.boundary_vertices] = True
        return mask

    @cached_property
    def interior_vertices(self) -> np.ndarray:
        return np.flatnonzero(~self.is_boundary)

    @cached_property
    def n_components(self) -> int:
        return int(self.boundary_component.max()) + 1 if self.boundary_component.size else 0

    @cached_property
    def _faces(self):
        # all (k-1)-faces with multiplicity, as sorted tuples
        k = self.k
        faces = np.concatenate([np.delete(self.simplices, i, axis=1) for i in range(k + 1)])
        owner = np.tile(np.arange(self.ns), k + 1)
        key = np.sort(faces, axis=1)
        uniq, inv, counts = np.unique(key, axis=0, return_inverse=True, return_counts=True)
        return faces, owner, uniq, inv.reshape(-1), counts

    @cached_property
    def boundary_faces(self) -> np.ndarray:
        """Oriented (k-1)-faces on the boundary, shape (nbf, k)."""
        faces, _, _, inv, counts = self._faces
        once = counts[inv] == 1
        return faces[once]

    @cached_property
    def boundary_face_simplex(self) -> np.ndarray:
        """Index of the simplex owning each boundary face."""
        _, owner, _, inv, counts = self._faces
        return owner[counts[inv] == 1]

    @cached_property
    def edges(self) -> np.ndarray:
        """Unique edges as sorted vertex pairs, shape (ne, 2)."""
        k = self.k
        pairs = [self.simplices[:, [i, j]] for i in range(k + 1) for j in range(i + 1, k + 1)]
        e = np.sort(np.concatenate(pairs), axis=1)
        return np.unique(e, axis=0)

    @cached_property
    def _bindex(self) -> np.ndarray:
        idx = np.full(self.nv, -1, dtype=np.int64)
        idx[self.boundary_vertices] = np.arange(self.boundary_vertices.size)
        return idx

    def vertex_t(self, vids) -> np.ndarray:
        return self.boundary_t[self._bindex[np.asarray(vids)]]

    def vertex_component(self, vids) -> np.ndarray:
        return self.boundary_component[self._bindex[np.asarray(vids)]]

    @cached_property
    def param_edge_matrices(self) -> np.ndarray:
        """Parameter-space edge matrices ``P`` (ns, d, k), edges from vertex 0."""
        return edge_matrices(self.points, self.simplices)

    @cached_property
    def param_volumes(self) -> np.ndarray:
        return simplex_volumes(self.param_edge_matrices)

    @cached_property
    def boundary_param_lengths(self) -> np.ndarray:
        """Parameter-space measure of each boundary face (k = 2: edge lengths)."""
        return simplex_volumes(edge_matrices(self.points, self.boundary_faces))

    def max_edge_length(self) -> float:
        e = self.edges
        return float(np.max(np.linalg.norm(self.points[e[:, 1]] - self.points[e[:, 0]], axis=1)))

    # ------------------------------------------------------------------
    def validate(self) -> None:
        """Check the manifold-with-boundary invariants."""
        s = self.simplices
        if s.size and (s.min() < 0 or s.max() >= self.nv):
            raise DomainError("simplex references a missing vertex")
        srt = np.sort(s, axis=1)
        if np.any(srt[:, 1:] == srt[:, :-1]):
            raise DomainError("simplex with repeated vertex")
        _, _, _, inv, counts = self._faces
        if np.any(counts > 2):
            raise DomainError("a (k-1)-face is shared by more than two simplices")
        on_bdry = np.unique(self.boundary_faces) if self.boundary_faces.size else np.array([], int)
        if not np.array_equal(on_bdry, np.unique(self.boundary_vertices)):
            raise DomainError("boundary_vertices differ from the vertices of boundary faces")
        if self.boundary_vertices.size != np.unique(self.boundary_vertices).size:
            raise DomainError("duplicate boundary vertex")
        if not (self.boundary_component.shape == self.boundary_t.shape
                == self.boundary_vertices.shape):
            raise DomainError("boundary arrays have inconsistent lengths")
        if np.any((self.boundary_t < 0) | (self.boundary_t >= 1)):
            raise DomainError("boundary parameter outside [0, 1)")

    def simplex_of_vertex_ring(self) -> list[np.ndarray]:
        """Simplices incident to each vertex."""
        order = np.argsort(self.simplices.ravel(), kind="stable")
        vids = self.simplices.ravel()[order]
        cuts = np.searchsorted(vids, np.arange(self.nv + 1))
        owners = order // (self.k + 1)
        return [owners[cuts[i]:cuts[i + 1]] for i in range(self.nv)]

    def ancestors(self):
        m = self
        while m is not None:
            yield m
            m = m.parent


# ----------------------------------------------------------------------
# geometry kernels (general k)


def edge_matrices(positions: np.ndarray, simplices: np.ndarray) -> np.ndarray:
    """Edge matrices ``E`` of shape (ns, m, k): columns ``x_i - x_0``."""
    x = positions[simplices]  # (ns, k+1, m)
    return np.swapaxes(x[:, 1:, :] - x[:, :1, :], 1, 2)


def simplex_volumes(e: np.ndarray) -> np.ndarray:
    """``sqrt(det(E^T E)) / k!`` for a stack of edge matrices."""
    k = e.shape[-1]
    g = np.swapaxes(e, -1, -2) @ e
    return np.sqrt(np.maximum(np.linalg.det(g), 0.0)) / factorial(k)


@dataclass(frozen=True)
class SimplexQuality:
    volume: float
    aspect: float
    sigma_min: float
    sigma_max: float

    @property
    def general_position(self) -> bool:
        return bool(self.sigma_min > GENERAL_POSITION_RTOL * self.sigma_max)


def quality_arrays(e: np.ndarray):
    """Vectorized quality measures for edge matrices (ns, m, k).

    Returns ``volume, aspect, sigma_min, sigma_max`` arrays.
    """
    s = np.linalg.svd(e, compute_uv=False)
    smin, smax = s[..., -1], s[..., 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        aspect = np.where(smin > GENERAL_POSITION_RTOL * smax, smax / smin, np.inf)
    return simplex_volumes(e), aspect, smin, smax


def simplex_quality(positions) -> SimplexQuality:
    """Volume and conditioning of a single simplex.

    Parameters
    ----------
    positions : array_like, shape (k + 1, m)
    """
    x = np.asarray(positions, dtype=float)
    e = (x[1:] - x[0]).T[None]
    vol, asp, smin, smax = (float(v[0]) for v in quality_arrays(e))
    return SimplexQuality(vol, asp, smin, smax)


# ----------------------------------------------------------------------
# interpolation


def check_bary(bary) -> np.ndarray:
    bary = np.asarray(bary, dtype=float)
    if np.any(bary < -BARY_TOL) or np.any(np.abs(bary.sum(axis=-1) - 1.0) > BARY_TOL):
        raise DomainError("barycentric coordinates must be nonnegative and sum to 1")
    return bary


def interpolate(t: Triangulation, values, simplex_ids, bary) -> np.ndarray:
    """Evaluate the piecewise-affine interpolant of vertex ``values``.

    ``simplex_ids`` may be an int or array ``(n,)``; ``bary`` is ``(k+1,)``
    or ``(n, k+1)``.
    """
    values = np.asarray(values, dtype=float)
    bary = check_bary(bary)
    vv = values[t.simplices[simplex_ids]]  # (..., k+1, m)
    if values.ndim == 1:
        return np.einsum("...i,...i->...", bary, vv)
    return np.einsum("...i,...ij->...j", bary, vv)


def param_point(t: Triangulation, simplex_ids, bary) -> np.ndarray:
    return interpolate(t, t.points, simplex_ids, bary)


# ----------------------------------------------------------------------
# constructors


def _hex_boundary_t(p: np.ndarray) -> np.ndarray:
    # normalized arc length along the unit-circumradius hexagon from (1, 0)
    ang = np.mod(np.arctan2(p[:, 1], p[:, 0]), 2 * np.pi)
    side = np.minimum(np.floor(ang / (np.pi / 3) + 1e-9).astype(int), 5)
    side = np.where(ang > 2 * np.pi - 1e-9, 0, side)
    c0 = np.stack([np.cos(side * np.pi / 3), np.sin(side * np.pi / 3)], axis=1)
    frac = np.linalg.norm(p - c0, axis=1)
    return np.mod((side + frac) / 6.0, 1.0)


def hex_gauge(x: np.ndarray) -> np.ndarray:
    """Hexagonal gauge: the scale ``s`` with ``x`` on ``s * hexagon``."""
    x = np.asarray(x, dtype=float)
    ang = np.arange(6) * np.pi / 3 + np.pi / 6
    nrm = np.stack([np.cos(ang), np.sin(ang)], axis=1) / np.cos(np.pi / 6)
    return np.max(x @ nrm.T, axis=-1)


def build_disk(n_rings: int) -> Triangulation:
    """Regular hexagon of circumradius 1 cut into ``6 n^2`` equilateral triangles."""
    n = int(n_rings)
    if n < 1:
        raise DomainError("n_rings must be >= 1")
    e1 = np.array([1.0, 0.0]) / n
    e2 = np.array([0.5, np.sqrt(3) / 2]) / n
    coords = [(a, b) for b in range(-n, n + 1) for a in range(-n, n + 1)
              if max(abs(a), abs(b), abs(a + b)) <= n]
    index = {c: i for i, c in enumerate(coords)}
    pts = np.array([a * e1 + b * e2 for a, b in coords])
    tris = []
    for (a, b) in ((a, b) for b in range(-n - 1, n + 1) for a in range(-n - 1, n + 1)):
        up = [(a, b), (a + 1, b), (a, b + 1)]
        dn = [(a + 1, b), (a + 1, b + 1), (a, b + 1)]
        for tri in (up, dn):
            if all(c in index for c in tri):
                tris.append([index[c] for c in tri])
    hexd = np.array([max(abs(a), abs(b), abs(a + b)) for a, b in coords])
    bv = np.flatnonzero(hexd == n)
    t = _hex_boundary_t(pts[bv])
    order = np.argsort(t)
    bv, t = bv[order], t[order]
    return Triangulation(pts, np.array(tris), bv, np.zeros(bv.size, int), t)


def annulus_ratio(n_around: int) -> float:
    """Ring ratio making polygonal-annulus cells nearly square."""
    return 1.0 + 2.0 * np.sin(np.pi / n_around)


def build_cylinder(n_around: int, n_along: int, inner_radius: float = 1.0) -> Triangulation:
    """Polygonal annulus with ``n_along + 1`` similar rings of ``n_around`` vertices.

    Ring ``j`` is the regular polygon of circumradius ``R0 q^j``; component 0
    is the inner ring and component 1 the outer ring.
    """
    n, L = int(n_around), int(n_along)
    if n < 3 or L < 1:
        raise DomainError("need n_around >= 3 and n_along >= 1")
    q = annulus_ratio(n)
    ang = 2 * np.pi * np.arange(n) / n
    pts = np.concatenate([
        inner_radius * q**j * np.stack([np.cos(ang), np.sin(ang)], axis=1) for j in range(L + 1)
    ])

    def vid(i, j):
        return j * n + (i % n)

    tris = []
    for j in range(L):
        for i in range(n):
            a, b, c, d = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
            tris.append([a, b, c])
            tris.append([a, c, d])
    inner = np.arange(n)
    outer = L * n + np.arange(n)
    bv = np.concatenate([inner, outer])
    comp = np.repeat([0, 1], n)
    t = np.tile(np.arange(n) / n, 2)
    return Triangulation(pts, np.array(tris), bv, comp, t)


def _t_midpoint(ta: np.ndarray, tb: np.ndarray) -> np.ndarray:
    # midpoint along the shorter arc of the periodic parameter
    d = np.mod(tb - ta + 0.5, 1.0) - 0.5
    return np.mod(ta + 0.5 * d, 1.0)


def subdivide_4to1(t: Triangulation, curve=None) -> Triangulation:
    """Split every triangle into four through its edge midpoints.

    New boundary vertices take the parameter midpoint of their coarse
    boundary edge, so positioning them on the curve places them exactly on
    it. ``curve``, if given, is checked for a matching number of components.
    """
    if t.k != 2:
        raise UnsupportedDimensionError(f"4:1 subdivision needs k = 2, got k = {t.k}")
    if curve is not None and getattr(curve, "arity", t.n_components) != t.n_components:
        raise DomainError("curve arity does not match the boundary components")
    edges = t.edges
    nv = t.nv
    key = edges[:, 0] * nv + edges[:, 1]
    order = np.argsort(key)
    skey = key[order]

    def mid(a, b):
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        return nv + order[np.searchsorted(skey, lo * nv + hi)]

    s = t.simplices
    v0, v1, v2 = s[:, 0], s[:, 1], s[:, 2]
    m01, m12, m20 = mid(v0, v1), mid(v1, v2), mid(v2, v0)
    tris = np.concatenate([
        np.stack([v0, m01, m20], 1),
        np.stack([m01, v1, m12], 1),
        np.stack([m20, m12, v2], 1),
        np.stack([m01, m12, m20], 1),
    ])
    pts = np.concatenate([t.points, 0.5 * (t.points[edges[:, 0]] + t.points[edges[:, 1]])])

    bf = np.sort(t.boundary_faces, axis=1)
    new_b = mid(bf[:, 0], bf[:, 1])
    ta, tb = t.vertex_t(bf[:, 0]), t.vertex_t(bf[:, 1])
    ca, cb = t.vertex_component(bf[:, 0]), t.vertex_component(bf[:, 1])
    if np.any(ca != cb):
        raise DomainError("boundary edge joins two components")
    bv = np.concatenate([t.boundary_vertices, new_b])
    comp = np.concatenate([t.boundary_component, ca])
    bt = np.concatenate([t.boundary_t, _t_midpoint(ta, tb)])
    return Triangulation(pts, tris, bv, comp, bt, parent=t, parent_edges=edges.copy())


def refine(t: Triangulation, levels: int, curve=None) -> Triangulation:
    for _ in range(levels):
        t = subdivide_4to1(t, curve)
    return t


def prolong(values, fine: Triangulation) -> np.ndarray:
    """Values of a PL field on ``fine.parent`` transferred exactly to ``fine``."""
    if fine.parent is None:
        raise DomainError("mesh has no parent")
    v = np.asarray(values, dtype=float)
    pe = fine.parent_edges
    return np.concatenate([v, 0.5 * (v[pe[:, 0]] + v[pe[:, 1]])])


def lift(values, coarse: Triangulation, fine: Triangulation) -> np.ndarray:
    """Transfer a PL field from ``coarse`` down the refinement chain to ``fine``."""
    chain = []
    for m in fine.ancestors():
        if m is coarse:
            break
        chain.append(m)
    else:
        raise DomainError("coarse mesh is not an ancestor of fine mesh")
    v = np.asarray(values, dtype=float)
    for m in reversed(chain):
        v = prolong(v, m)
    return v


def common_refinement(a: Triangulation, b: Triangulation) -> Triangulation:
    """The finer of two meshes in one refinement chain."""
    if any(m is a for m in b.ancestors()):
        return b
    if any(m is b for m in a.ancestors()):
        return a
    raise DomainError("meshes do not share a refinement chain")
