"""Piecewise-affine immersions and the distances between them.

A :class:`DiscreteImmersion` is a vertex position field over a
:class:`~minsurf.mesh.Triangulation`. Its piecewise-affine interpolant has
a constant differential ``D = E P^{-1}`` on every simplex (``E`` the
embedded and ``P`` the parameter edge matrix), so every essential supremum
in the immersion distance is an exact maximum over simplices:

* position part: ``max |f - h|`` over vertices (an affine function's norm is
  maximal at a vertex);
* metric part: ``max d_P(D_f^T D_f, D_h^T D_h)``;
* ray part: ``max dist_ray_sup(D_f, D_h)``.

The boundary variant repeats the three terms for the restriction to the
boundary faces and adds them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import grassmann, posdef
from .errors import CertificateViolation, DomainError, checked
from .mesh import GENERAL_POSITION_RTOL, Triangulation, edge_matrices

PIN_TOL = 1e-12


def _face_frames(points: np.ndarray, faces: np.ndarray) -> np.ndarray:
    """Upper-triangular ``R`` with ``P = Q R`` for each face's parameter edges."""
    p = edge_matrices(points, faces)
    _, r = np.linalg.qr(p)
    # fix signs so the frame is orientation-free but deterministic
    sgn = np.sign(np.diagonal(r, axis1=-2, axis2=-1))
    sgn[sgn == 0] = 1.0
    return r * sgn[..., :, None]


def differentials_of(mesh: Triangulation, positions: np.ndarray) -> np.ndarray:
    """Per-simplex differentials ``D`` (ns, m, k) in parameter coordinates."""
    e = edge_matrices(positions, mesh.simplices)
    p = mesh.param_edge_matrices
    if p.shape[1] == p.shape[2]:
        # D P = E  <=>  P^T D^T = E^T
        return np.swapaxes(np.linalg.solve(np.swapaxes(p, 1, 2), np.swapaxes(e, 1, 2)), 1, 2)
    r = _face_frames(mesh.points, mesh.simplices)
    return np.swapaxes(np.linalg.solve(np.swapaxes(r, 1, 2), np.swapaxes(e, 1, 2)), 1, 2)


def boundary_differentials_of(mesh: Triangulation, positions: np.ndarray) -> np.ndarray:
    """Differentials (nbf, m, k-1) of the restriction to the boundary faces.

    Each face carries the orthonormal chart induced by the parameter metric.
    """
    faces = mesh.boundary_faces
    e = edge_matrices(positions, faces)
    r = _face_frames(mesh.points, faces)
    return np.swapaxes(np.linalg.solve(np.swapaxes(r, 1, 2), np.swapaxes(e, 1, 2)), 1, 2)


def _general_position(d: np.ndarray) -> np.ndarray:
    s = np.linalg.svd(d, compute_uv=False)
    return s[..., -1] > GENERAL_POSITION_RTOL * s[..., 0]


@dataclass(frozen=True, eq=False)
class DiscreteImmersion:
    """Vertex positions in ``R^m`` over a triangulation.

    Parameters
    ----------
    mesh : Triangulation
    positions : ndarray, shape (nv, m)
    curve : BoundaryCurve, optional
        If given, boundary vertices must lie on it to :data:`PIN_TOL`.
    check : bool
        Validate general position of every simplex and boundary face.
    """

    mesh: Triangulation
    positions: np.ndarray
    curve: object = field(default=None, repr=False)
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        pos = np.array(self.positions, dtype=float)
        if pos.ndim != 2 or pos.shape[0] != self.mesh.nv:
            raise DomainError(f"positions must have shape ({self.mesh.nv}, m), got {pos.shape}")
        if pos.shape[1] < self.mesh.k:
            raise DomainError("ambient dimension smaller than k")
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        if self.check:
            self.validate()

    @property
    def m(self) -> int:
        return self.positions.shape[1]

    @property
    def k(self) -> int:
        return self.mesh.k

    def with_positions(self, positions, check: bool = True) -> DiscreteImmersion:
        return DiscreteImmersion(self.mesh, positions, self.curve, check)

    def validate(self) -> None:
        bad = np.flatnonzero(~self.general_position_mask())
        if bad.size:
            raise DomainError(f"simplex {int(bad[0])} is degenerate "
                              f"({bad.size} degenerate simplices)")
        if self.mesh.k > 1 and self.mesh.boundary_faces.size:
            bb = np.flatnonzero(~_general_position(self.boundary_differentials))
            if bb.size:
                raise DomainError(f"boundary face {int(bb[0])} is degenerate")
        if self.curve is not None:
            err = np.abs(self.positions[self.mesh.boundary_vertices] - self.curve.pin(self.mesh))
            scale = max(1.0, float(np.max(np.abs(self.positions))))
            if err.size and np.max(err) > PIN_TOL * scale:
                raise DomainError(f"boundary vertices leave the curve by {np.max(err):.3e}")

    def general_position_mask(self) -> np.ndarray:
        return _general_position(self.differentials)

    @property
    def differentials(self) -> np.ndarray:
        d = self.__dict__.get("_d")
        if d is None:
            d = differentials_of(self.mesh, self.positions)
            self.__dict__["_d"] = d
        return d

    @property
    def boundary_differentials(self) -> np.ndarray:
        d = self.__dict__.get("_bd")
        if d is None:
            d = boundary_differentials_of(self.mesh, self.positions)
            self.__dict__["_bd"] = d
        return d

    def compose(self, perm) -> DiscreteImmersion:
        """``f o phi`` for a vertex automorphism given as a permutation array."""
        perm = np.asarray(perm)
        return DiscreteImmersion(self.mesh, self.positions[perm], None, self.check)


@dataclass(frozen=True)
class PullbackField:
    """Per-simplex Gram matrices (ns, k, k) of a metric on the domain."""

    grams: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "grams", posdef.check_spd(self.grams, "pullback"))

    @classmethod
    def identity(cls, mesh: Triangulation) -> PullbackField:
        return cls(np.broadcast_to(np.eye(mesh.k), (mesh.ns, mesh.k, mesh.k)).copy())


def pullback(f: DiscreteImmersion) -> PullbackField:
    """Per-simplex first fundamental form ``D^T D``."""
    d = f.differentials
    bad = np.flatnonzero(~_general_position(d))
    if bad.size:
        raise DomainError(f"simplex {int(bad[0])} is degenerate")
    return PullbackField(np.swapaxes(d, 1, 2) @ d)


@dataclass(frozen=True)
class ImmersionDistance:
    sup_pos: float
    sup_metric: float
    sup_ray: float
    boundary_pos: float = 0.0
    boundary_metric: float = 0.0
    boundary_ray: float = 0.0

    @property
    def total(self) -> float:
        return self.sup_pos + self.sup_metric + self.sup_ray

    @property
    def boundary_total(self) -> float:
        return self.boundary_pos + self.boundary_metric + self.boundary_ray

    @property
    def total_cross(self) -> float:
        return self.total + self.boundary_total


def _same_mesh(f: DiscreteImmersion, h: DiscreteImmersion) -> None:
    if f.mesh is h.mesh:
        return
    if not (np.array_equal(f.mesh.simplices, h.mesh.simplices)
            and np.array_equal(f.mesh.points, h.mesh.points)):
        raise DomainError("immersions live on different meshes")
    if f.m != h.m:
        raise DomainError("ambient dimensions differ")


def _parts(df, dh, pf, ph):
    pos = float(np.max(np.linalg.norm(pf - ph, axis=1))) if pf.size else 0.0
    gf = np.swapaxes(df, 1, 2) @ df
    gh = np.swapaxes(dh, 1, 2) @ dh
    same = np.all(df == dh, axis=(1, 2))
    metric = 0.0
    ray = 0.0
    if not np.all(same):
        idx = np.flatnonzero(~same)
        metric = float(np.max(posdef.dist_p(gf[idx], gh[idx])))
        ray = float(np.max(grassmann.dist_ray_sup(df[idx], dh[idx])))
    return pos, metric, ray


def dist_imm(f: DiscreteImmersion, h: DiscreteImmersion, boundary: bool = True) -> ImmersionDistance:
    """Immersion distance between two PL immersions on one mesh.

    With ``boundary`` the restriction terms are filled in as well, so
    ``total_cross`` is the strong (graph) distance.
    """
    _same_mesh(f, h)
    interior = _parts(f.differentials, h.differentials, f.positions, h.positions)
    if not boundary or f.mesh.boundary_faces.size == 0:
        return ImmersionDistance(*interior)
    bv = f.mesh.boundary_vertices
    bnd = _parts(f.boundary_differentials, h.boundary_differentials,
                 f.positions[bv], h.positions[bv])
    return ImmersionDistance(*interior, *bnd)


# ----------------------------------------------------------------------
# reparameterizations


def check_automorphism(mesh: Triangulation, perm) -> np.ndarray:
    """Validate that ``perm`` maps simplices to simplices and boundary components
    to boundary components."""
    perm = np.asarray(perm, dtype=np.int64)
    if perm.shape != (mesh.nv,) or not np.array_equal(np.sort(perm), np.arange(mesh.nv)):
        raise DomainError("correspondence is not a vertex permutation")
    a = {tuple(s) for s in np.sort(mesh.simplices, axis=1).tolist()}
    b = {tuple(s) for s in np.sort(perm[mesh.simplices], axis=1).tolist()}
    if a != b:
        raise DomainError("correspondence does not map simplices to simplices")
    bv = mesh.boundary_vertices
    if not np.all(mesh.is_boundary[perm[bv]]):
        raise DomainError("correspondence moves a boundary vertex into the interior")
    src = mesh.boundary_component
    dst = mesh.vertex_component(perm[bv])
    for c in np.unique(src):
        if np.unique(dst[src == c]).size != 1:
            raise DomainError("correspondence splits a boundary component")
    return perm


def point_symmetry(mesh: Triangulation, matrix, decimals: int = 9) -> np.ndarray:
    """Vertex permutation induced by a linear symmetry of the parameter domain."""
    q = np.asarray(matrix, float)
    img = mesh.points @ q.T
    key = {tuple(np.round(p, decimals) + 0.0): i for i, p in enumerate(mesh.points)}
    try:
        perm = np.array([key[tuple(np.round(p, decimals) + 0.0)] for p in img])
    except KeyError:
        raise DomainError("matrix is not a symmetry of the vertex set") from None
    return check_automorphism(mesh, perm)


def rotation2(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def dist_shape_upper(f: DiscreteImmersion, h: DiscreteImmersion, correspondences=()) -> float:
    """Minimum of ``dist_imm(f, h o phi).total_cross`` over the identity and the
    supplied automorphisms together with their inverses: an upper bound on the
    shape distance."""
    best = dist_imm(f, h).total_cross
    for perm in correspondences:
        perm = check_automorphism(f.mesh, perm)
        for p in (perm, np.argsort(perm)):
            best = min(best, dist_imm(f, h.compose(p)).total_cross)
    return best


# ----------------------------------------------------------------------
# a-priori sets and perturbation certificates


@dataclass(frozen=True)
class Membership:
    member: bool
    worst: float
    diagnostic: str = ""


def apriori_membership_discrete(f: DiscreteImmersion, g_ref: PullbackField, r: float) -> Membership:
    """Whether ``max_simplex d_P(g_ref, f^# g0) <= r``."""
    d = f.differentials
    ok = _general_position(d)
    if not np.all(ok):
        bad = int(np.flatnonzero(~ok)[0])
        return Membership(False, np.inf, f"simplex {bad} is degenerate")
    g = np.swapaxes(d, 1, 2) @ d
    worst = float(np.max(posdef.dist_p(g_ref.grams, g)))
    return Membership(worst <= r, worst)


def _whiten_cols(x: np.ndarray, g_ref: PullbackField) -> np.ndarray:
    # X L^{-1} with L^T L = G, i.e. X expressed on a g-orthonormal frame
    lo = np.linalg.cholesky(g_ref.grams)  # G = lo lo^T, so L = lo^T
    return np.swapaxes(np.linalg.solve(lo, np.swapaxes(x, 1, 2)), 1, 2)


def w1inf_norm(f_positions, h_positions, mesh: Triangulation, g_ref: PullbackField,
               derivative_norm: str = "fro") -> float:
    """``|f - h|_{W^{1,inf}_g}`` of the PL difference field.

    ``derivative_norm`` selects the Frobenius (``"fro"``) or operator
    (``"op"``) norm for the g-whitened differential difference.
    """
    diff = np.asarray(f_positions, float) - np.asarray(h_positions, float)
    pos = float(np.max(np.linalg.norm(diff, axis=1)))
    w = _whiten_cols(differentials_of(mesh, diff), g_ref)
    if derivative_norm == "fro":
        der = np.linalg.norm(w, axis=(1, 2))
    elif derivative_norm == "op":
        der = np.linalg.norm(w, ord=2, axis=(1, 2))
    else:
        raise ValueError(derivative_norm)
    return pos + float(np.max(der))


def certify_immersion_perturbation(f: DiscreteImmersion, h, g_ref: PullbackField | None = None):
    """Small ``W^{1,inf}_g`` perturbations stay immersions and move ``d_Imm`` boundedly.

    With ``l = max_simplex d_P(g_ref, f^# g0)`` and ``W`` the (Frobenius)
    ``W^{1,inf}_g`` distance: if ``W < exp(-3l/2) / 3`` then ``h`` is an
    immersion and ``dist_imm(f, h).total <= 18 exp(3l/2) W``.

    ``h`` may be a position array or a :class:`DiscreteImmersion`.
    """
    g_ref = PullbackField.identity(f.mesh) if g_ref is None else g_ref
    hp = h.positions if isinstance(h, DiscreteImmersion) else np.asarray(h, float)
    ell = apriori_membership_discrete(f, g_ref, np.inf).worst
    w = w1inf_norm(f.positions, hp, f.mesh, g_ref, "fro")
    applicable = w < np.exp(-1.5 * ell) / 3.0
    bound = 18.0 * np.exp(1.5 * ell) * w
    if not applicable:
        return checked(False, bound, np.nan, "W1inftyembLip")
    hi = DiscreteImmersion(f.mesh, hp, check=False)
    if not np.all(hi.general_position_mask()):
        raise CertificateViolation("W1inftyembLip: perturbed field is not an immersion")
    return checked(True, bound, dist_imm(f, hi, boundary=False).total, "W1inftyembLip")


def certify_reverse_bound(f: DiscreteImmersion, h: DiscreteImmersion,
                          g_ref: PullbackField | None = None):
    """Close immersions are close in ``W^{1,inf}_g``.

    If the metric part of ``dist_imm(f, h)`` is below 5/2 then
    ``W_op(f - h) <= exp(l) dist_imm(f, h).total`` where ``W_op`` measures the
    differential in the operator norm.
    """
    g_ref = PullbackField.identity(f.mesh) if g_ref is None else g_ref
    dist = dist_imm(f, h, boundary=False)
    applicable = dist.sup_metric < 2.5
    if not applicable:
        return checked(False, np.nan, np.nan, "LipembW1infty")
    ell = apriori_membership_discrete(f, g_ref, np.inf).worst
    # the ray part is an attained (lower) value; pad by the solver tolerance
    bound = np.exp(ell) * (dist.total + grassmann.RAY_TOL)
    actual = w1inf_norm(f.positions, h.positions, f.mesh, g_ref, "op")
    return checked(True, bound, actual, "LipembW1infty")
