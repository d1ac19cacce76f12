"""Variational-analysis diagnostics on finite data.

The discretization is a pair of maps between the smooth configuration
space and the discrete one:

* sampling ``S_T``: evaluate a map at the mesh vertices;
* reconstruction ``R_T``: PL interpolation plus a boundary correction that
  puts the boundary back on the curve.

Consistency errors compare the two functionals across these maps,
proximity errors compare the configurations themselves in the immersion
distance. The infinite classes of admissible configurations are replaced
by explicit candidate lists, so every reported error is a lower bound for
its supremum over the full class.

The second half of the module is a small engine for finite metric spaces:
thickenings, inner and outer set limits, Hausdorff distance and the
variational pushforward.
"""

from __future__ import annotations

import csv
import io
import warnings
from dataclasses import asdict, dataclass, field
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np

from . import functional as fn
from . import immersion as imm
from .errors import CertificateViolation, DomainError
from .mesh import Triangulation, common_refinement, lift, refine

ASSERT_ATOL = 1e-12
RHO_GRID = (0.0, 1e-6, 1e-4, 1e-3, 1e-2, 1e-1, 1.0, np.inf)


# ----------------------------------------------------------------------
# sampling and reconstruction


def sample_op(f: fn.SampledImmersion, curve=None) -> imm.DiscreteImmersion:
    """Restrict a sampled immersion to the mesh vertices."""
    pos = f.at_vertices()
    if curve is not None:
        err = np.max(np.abs(pos[f.mesh.boundary_vertices] - curve.pin(f.mesh)), initial=0.0)
        if err > imm.PIN_TOL * max(1.0, float(np.max(np.abs(pos)))):
            raise DomainError(f"sampled map leaves the boundary curve by {err:.3e}")
    try:
        return imm.DiscreteImmersion(f.mesh, pos, curve)
    except DomainError as exc:
        raise DomainError(f"sampling produced a degenerate configuration ({exc}); "
                          "refine the triangulation") from None


def chi(s):
    """Cut-off ``exp(s^2 / (s^2 - s))`` on ``[0, 1)``, zero beyond; with derivative."""
    s = np.asarray(s, float)
    inside = s < 1.0
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        val = np.where(inside, np.exp(np.where(inside, s / (s - 1.0), 0.0)), 0.0)
        der = np.where(inside, -val / np.where(inside, (s - 1.0) ** 2, 1.0), 0.0)
    return np.nan_to_num(val), np.nan_to_num(der)


@dataclass(frozen=True)
class _Collar:
    owner: np.ndarray      # simplex of each boundary face
    ia: np.ndarray         # local index of the face's first vertex
    ib: np.ndarray
    io: np.ndarray         # local index of the opposite vertex
    comp: np.ndarray
    ta: np.ndarray
    dt: np.ndarray         # signed parameter increment along the face
    ga: np.ndarray         # curve points at the face ends
    gb: np.ndarray
    face_of: np.ndarray    # simplex -> face index or -1


def _collar(mesh: Triangulation, curve) -> _Collar:
    if mesh.k != 2:
        raise DomainError("reconstruction implemented for k = 2")
    faces = mesh.boundary_faces
    owner = mesh.boundary_face_simplex
    face_of = np.full(mesh.ns, -1)
    if np.unique(owner).size != owner.size:
        raise DomainError("a simplex has two boundary faces; refine the mesh")
    face_of[owner] = np.arange(owner.size)
    simp = mesh.simplices[owner]
    ia = np.argmax(simp == faces[:, :1], axis=1)
    ib = np.argmax(simp == faces[:, 1:2], axis=1)
    io = 3 - ia - ib
    ta, tb = mesh.vertex_t(faces[:, 0]), mesh.vertex_t(faces[:, 1])
    comp = mesh.vertex_component(faces[:, 0])
    dt = np.mod(tb - ta + 0.5, 1.0) - 0.5
    return _Collar(owner, ia, ib, io, comp, ta, dt,
                   curve.evaluate(comp, ta), curve.evaluate(comp, tb), face_of)


def _bary_gradients(mesh: Triangulation) -> np.ndarray:
    """Gradients of the barycentric coordinates, shape (ns, k+1, d)."""
    pinv = np.linalg.inv(mesh.param_edge_matrices)  # (ns, k, d)
    return np.concatenate([-pinv.sum(axis=1, keepdims=True), pinv], axis=1)


def boundary_correction(mesh: Triangulation, curve, collar_depth: float = 1.0):
    """Evaluator of the boundary correction ``u_T`` alone.

    On a simplex owning boundary face ``(a, b)`` with opposite vertex ``o``,
    ``u_T = (gamma - gamma_T)(t_e) chi(lambda_o / collar_depth)`` where
    ``t_e = lambda_b / (lambda_a + lambda_b)`` runs along the face and
    ``gamma_T`` is the chord. ``u_T`` vanishes on every other simplex, at all
    vertices, and on all interior edges, so the correction is continuous,
    smooth on each simplex, and exact on the boundary.
    """
    if not 0 < collar_depth <= 1:
        raise DomainError("collar_depth must lie in (0, 1]")
    col = _collar(mesh, curve)
    grads = _bary_gradients(mesh)
    m = curve.dim

    def ev(ids, bary):
        n = ids.size
        u = np.zeros((n, m))
        du = np.zeros((n, m, mesh.points.shape[1]))
        fi = col.face_of[ids]
        sel = np.flatnonzero(fi >= 0)
        if sel.size == 0:
            return u, du
        j = fi[sel]
        b = bary[sel]
        la = b[np.arange(sel.size), col.ia[j]]
        lb = b[np.arange(sel.size), col.ib[j]]
        lo = b[np.arange(sel.size), col.io[j]]
        g = grads[ids[sel]]
        ga_ = g[np.arange(sel.size), col.ia[j]]
        gb_ = g[np.arange(sel.size), col.ib[j]]
        go_ = g[np.arange(sel.size), col.io[j]]
        sab = la + lb
        safe = sab > 0
        s_ = np.where(safe, sab, 1.0)
        te = np.where(safe, lb / s_, 0.0)
        dte = np.where(safe[:, None], (la[:, None] * gb_ - lb[:, None] * ga_) / (s_ * s_)[:, None], 0.0)
        tau = np.mod(col.ta[j] + te * col.dt[j], 1.0)
        gam = curve.evaluate(col.comp[j], tau)
        dgam = curve.evaluate(col.comp[j], tau, order=1)
        chord = (1 - te)[:, None] * col.ga[j] + te[:, None] * col.gb[j]
        w = gam - chord
        dw = dgam * col.dt[j][:, None] - (col.gb[j] - col.ga[j])
        c, dc = chi(lo / collar_depth)
        u[sel] = w * c[:, None]
        du[sel] = (c[:, None, None] * dw[:, :, None] * dte[:, None, :]
                   + (dc / collar_depth)[:, None, None] * w[:, :, None] * go_[:, None, :])
        return u, du

    return ev


def reconstruct_op(f: imm.DiscreteImmersion, curve, collar_depth: float = 1.0,
                   degree: int = 4, check: bool = True) -> fn.SampledImmersion:
    """PL interpolant plus the boundary correction.

    With ``check`` the Jacobian is verified injective at the quadrature
    nodes; failure reports the size of the correction against the
    perturbation threshold ``exp(-3 l / 2) / 3``.
    """
    mesh = f.mesh
    pl = fn.pl_evaluator(mesh, f.positions)
    corr = boundary_correction(mesh, curve, collar_depth)

    def ev(ids, bary):
        p, j = pl(ids, bary)
        u, du = corr(ids, bary)
        return p + u, j + du

    out = fn.SampledImmersion(mesh, ev, degree, "reconstruction")
    if check:
        try:
            fn.check_injective_nodes(out)
            _check_no_fold(mesh, pl, corr, degree)
        except DomainError:
            size = correction_size(mesh, curve, collar_depth)
            ell = imm.apriori_membership_discrete(f, imm.PullbackField.identity(mesh), np.inf).worst
            raise DomainError(
                f"boundary correction breaks the immersion: |u_T|_W1inf ~ {size:.3e} "
                f"vs threshold {np.exp(-1.5 * ell) / 3:.3e}; refine the mesh") from None
    return out


def _check_no_fold(mesh, pl, corr, degree) -> None:
    """``det(D^T (D + du)) > 0`` at every quadrature node, ``D`` the PL differential.

    This rejects folds, where the correction reverses the orientation of
    the PL simplex, which the singular-value test alone cannot see.
    """
    ids, bary, _ = fn.quadrature_nodes(mesh, degree)
    _, d = pl(ids, bary)
    _, du = corr(ids, bary)
    det = np.linalg.det(np.swapaxes(d, 1, 2) @ (d + du))
    if np.any(det <= 0):
        raise DomainError("boundary correction folds a collar simplex")


def _lattice(k: int, order: int) -> np.ndarray:
    pts = [(i, j, order - i - j) for i in range(order + 1) for j in range(order + 1 - i)]
    return np.array(pts, float) / order


def correction_size(mesh: Triangulation, curve, collar_depth: float = 1.0, order: int = 6) -> float:
    """Sampled ``sup |u_T| + sup |d u_T|`` (Frobenius) of the boundary correction."""
    ev = boundary_correction(mesh, curve, collar_depth)
    lat = _lattice(mesh.k, order)
    owners = mesh.boundary_face_simplex
    ids = np.repeat(owners, lat.shape[0])
    bary = np.tile(lat, (owners.size, 1))
    u, du = ev(ids, bary)
    return float(np.max(np.linalg.norm(u, axis=1)) + np.max(np.linalg.norm(du, axis=(1, 2))))


# ----------------------------------------------------------------------
# error reports


@dataclass
class ErrorReport:
    """Consistency and proximity errors over finite candidate lists.

    All suprema are maxima over the supplied candidates and therefore lower
    bounds for the suprema over the full admissible classes.
    """

    delta_sampling: float = 0.0
    delta_reconstruction: float = 0.0
    eps_sampling: float = np.nan
    eps_reconstruction: float = np.nan
    rho: float = np.nan
    inf_smooth: float = np.nan
    inf_discrete: float = np.nan
    n_smooth: int = 0
    n_discrete: int = 0
    failures: list = field(default_factory=list)

    @property
    def delta_total(self) -> float:
        return self.delta_sampling + self.delta_reconstruction

    @property
    def eps_total(self) -> float:
        return max(self.eps_sampling, self.eps_reconstruction)

    @property
    def inf_gap(self) -> float:
        return abs(self.inf_discrete - self.inf_smooth)

    def row(self) -> dict:
        d = asdict(self)
        d.pop("failures")
        d.update(delta_total=self.delta_total, eps_total=self.eps_total, inf_gap=self.inf_gap,
                 n_failures=len(self.failures))
        return d


def _closed_lists(smooth, discrete, curve, collar_depth, failures):
    """Candidate lists closed under the opposite operator.

    The discrete list gains ``S_T`` of every smooth candidate, then the
    smooth list gains ``R_T`` of every entry of the enlarged discrete list.
    Since ``S_T R_T`` is the identity this is a fixpoint, and on finite data
    it makes both lists valid (the infimum over each list is attained in
    it), which is what the comparison lemmas require.
    """
    discrete_all = list(discrete)
    for i, a in enumerate(smooth):
        try:
            discrete_all.append(sample_op(a, curve))
        except DomainError as exc:
            failures.append(f"smooth[{i}]: {exc}")
    smooth_all = list(smooth)
    for i, y in enumerate(discrete_all):
        try:
            smooth_all.append(reconstruct_op(y, curve, collar_depth))
        except DomainError as exc:
            failures.append(f"discrete[{i}]: {exc}")
    return smooth_all, discrete_all


def smooth_value(a: fn.SampledImmersion, quad_refine: int = 2) -> float:
    """Area of a sampled immersion by quadrature on a refined copy of its mesh."""
    mesh = refine(a.mesh, quad_refine) if quad_refine else a.mesh
    return fn.smooth_volume(a.on_mesh(mesh))


def consistency_errors(smooth_candidates: Sequence[fn.SampledImmersion],
                       discrete_candidates: Sequence[imm.DiscreteImmersion], curve,
                       collar_depth: float = 1.0, quad_refine: int = 2,
                       rho_grid: Iterable[float] = RHO_GRID) -> ErrorReport:
    """Sampling and reconstruction consistency errors with runtime checks.

    After closing the candidate lists under both operators, computes

    * ``delta_S = max_a (F_T(S_T a) - F(a))^+`` over smooth candidates,
    * ``delta_R = max_y (F(R_T y) - F_T(y))^+`` over discrete candidates,

    and asserts two consequences that must hold on valid finite data:
    ``|inf F_T - inf F| <= max(delta_S, delta_R)``, and for every ``rho`` in
    ``rho_grid`` the sampling of smooth ``rho``-minimizers are discrete
    ``(rho + delta)``-minimizers (and symmetrically for reconstruction).
    A violation raises :class:`~minsurf.errors.CertificateViolation`.
    """
    if not smooth_candidates and not discrete_candidates:
        raise DomainError("no candidates")
    failures: list[str] = []
    smooth, discrete = _closed_lists(smooth_candidates, discrete_candidates, curve,
                                     collar_depth, failures)
    # evaluate both functionals on both lists
    f_smooth = []
    s_of_smooth = []
    for i, a in enumerate(smooth):
        try:
            fa = smooth_value(a, quad_refine)
            sa = sample_op(a, curve)
        except DomainError as exc:
            failures.append(f"smooth-closed[{i}]: {exc}")
            continue
        f_smooth.append(fa)
        s_of_smooth.append(fn.discrete_volume(sa))
    f_disc = []
    r_of_disc = []
    for i, y in enumerate(discrete):
        try:
            ry = reconstruct_op(y, curve, collar_depth)
            fry = smooth_value(ry, quad_refine)
        except DomainError as exc:
            failures.append(f"discrete-closed[{i}]: {exc}")
            continue
        f_disc.append(fn.discrete_volume(y))
        r_of_disc.append(fry)
    if not f_smooth or not f_disc:
        raise DomainError("all candidates failed: " + "; ".join(failures))
    f_smooth, s_of_smooth = np.array(f_smooth), np.array(s_of_smooth)
    f_disc, r_of_disc = np.array(f_disc), np.array(r_of_disc)
    rep = ErrorReport(
        delta_sampling=float(np.max(np.maximum(s_of_smooth - f_smooth, 0.0))),
        delta_reconstruction=float(np.max(np.maximum(r_of_disc - f_disc, 0.0))),
        inf_smooth=float(np.min(f_smooth)),
        inf_discrete=float(np.min(f_disc)),
        n_smooth=len(f_smooth), n_discrete=len(f_disc), failures=failures,
    )
    check_infdist(rep)
    check_lower_level_sets(f_smooth, s_of_smooth, f_disc, r_of_disc, rep.delta_total, rho_grid)
    return rep


def _tol(*arrays) -> float:
    scale = max(float(np.max(np.abs(a))) for a in arrays)
    return ASSERT_ATOL * max(1.0, scale)


def check_infdist(rep: ErrorReport) -> None:
    tol = _tol(np.array([rep.inf_smooth, rep.inf_discrete]))
    if rep.inf_gap > max(rep.delta_sampling, rep.delta_reconstruction) + tol:
        raise CertificateViolation(
            f"infimum gap {rep.inf_gap!r} exceeds max consistency error "
            f"{max(rep.delta_sampling, rep.delta_reconstruction)!r}")


def check_lower_level_sets(f_smooth, s_of_smooth, f_disc, r_of_disc, delta, rho_grid=RHO_GRID):
    """Sampled rho-minimizers are (rho + delta)-minimizers, both directions."""
    tol = _tol(f_smooth, f_disc)
    inf_s, inf_d = np.min(f_smooth), np.min(f_disc)
    for rho in rho_grid:
        if np.isinf(rho):
            continue  # every configuration is an infinity-minimizer
        sel = f_smooth <= inf_s + rho
        if np.any(s_of_smooth[sel] > inf_d + rho + delta + tol):
            raise CertificateViolation(f"sampling of a smooth {rho}-minimizer is not a "
                                       f"discrete {rho}+delta minimizer")
        sel = f_disc <= inf_d + rho
        if np.any(r_of_disc[sel] > inf_s + rho + delta + tol):
            raise CertificateViolation(f"reconstruction of a discrete {rho}-minimizer is not a "
                                       f"smooth {rho}+delta minimizer")


def proxy_mesh(mesh: Triangulation, proxy_levels: int) -> Triangulation:
    return refine(mesh, proxy_levels)


def proximity_errors(smooth_candidates: Sequence[fn.SampledImmersion],
                     discrete_candidates: Sequence[imm.DiscreteImmersion], curve,
                     collar_depth: float = 1.0, proxy_levels: int = 1,
                     report: ErrorReport | None = None) -> ErrorReport:
    """Sampling and reconstruction proximity errors.

    A smooth configuration is represented by its PL proxy on the mesh
    refined ``proxy_levels`` times; discrete configurations are lifted to
    that mesh by exact PL prolongation. Distances are ``total_cross``.
    """
    failures = [] if report is None else report.failures
    eps_s, eps_r = 0.0, 0.0
    for i, a in enumerate(smooth_candidates):
        try:
            fine = proxy_mesh(a.mesh, proxy_levels)
            proxy = sample_op(a.on_mesh(fine), curve)
            sa = sample_op(a, curve)
            lifted = imm.DiscreteImmersion(fine, lift(sa.positions, a.mesh, fine), check=False)
            eps_s = max(eps_s, imm.dist_imm(proxy, lifted).total_cross)
        except DomainError as exc:
            failures.append(f"proximity smooth[{i}]: {exc}")
    for i, y in enumerate(discrete_candidates):
        try:
            fine = proxy_mesh(y.mesh, proxy_levels)
            ry = reconstruct_op(y, curve, collar_depth)
            proxy = sample_op(ry.on_mesh(fine), curve)
            lifted = imm.DiscreteImmersion(fine, lift(y.positions, y.mesh, fine), check=False)
            eps_r = max(eps_r, imm.dist_imm(proxy, lifted).total_cross)
        except DomainError as exc:
            failures.append(f"proximity discrete[{i}]: {exc}")
    rep = report if report is not None else ErrorReport(failures=failures)
    rep.eps_sampling, rep.eps_reconstruction = eps_s, eps_r
    return rep


def lifted_distance(f: imm.DiscreteImmersion, h: imm.DiscreteImmersion) -> float:
    """``total_cross`` after lifting both to the finer of their meshes."""
    fine = common_refinement(f.mesh, h.mesh)
    a = f if f.mesh is fine else imm.DiscreteImmersion(fine, lift(f.positions, f.mesh, fine),
                                                       check=False)
    b = h if h.mesh is fine else imm.DiscreteImmersion(fine, lift(h.positions, h.mesh, fine),
                                                       check=False)
    return imm.dist_imm(a, b).total_cross


# ----------------------------------------------------------------------
# relative approximation error


def _lattice_nodes(mesh: Triangulation, order: int):
    lat = _lattice(mesh.k, order)
    ids = np.repeat(np.arange(mesh.ns), lat.shape[0])
    return ids, np.tile(lat, (mesh.ns, 1))


def _second_derivative_sup(probe: fn.SampledImmersion, ids, bary, h=1e-5) -> float:
    mesh = probe.mesh
    grads = _bary_gradients(mesh)[ids]  # (n, k+1, d)
    d = mesh.points.shape[1]
    worst = 0.0
    for j in range(d):
        # move by +-h e_j in parameter space, expressed in barycentrics
        step = h * grads[:, :, j]
        bp, bm = bary + step, bary - step
        ok = np.all(bp >= 0, 1) & np.all(bm >= 0, 1)
        if not np.any(ok):
            continue
        _, jp = probe.evaluate(ids[ok], bp[ok])
        _, jm = probe.evaluate(ids[ok], bm[ok])
        worst = max(worst, float(np.max(np.linalg.norm((jp - jm) / (2 * h), axis=(1, 2)))))
    return worst


def rho_estimate(t: Triangulation, curve, probes: Sequence, order: int = 4) -> float:
    """Empirical relative approximation error of the PL interpolation on ``t``.

    For each probe (a chart or a sampled immersion on ``t``), computes
    ``max(|f - I f|_inf, |df - d I f|_inf) / |df|_{W^{1,inf}}`` over a
    barycentric lattice of every simplex and along every boundary face, with
    ``I`` vertex interpolation. Second derivatives in the denominator are
    central differences. Probes with vanishing derivative are skipped with a
    warning.
    """
    ids, bary = _lattice_nodes(t, order)
    best = 0.0
    used = 0
    for probe in probes:
        p = probe if isinstance(probe, fn.SampledImmersion) else fn.from_chart(t, probe)
        if p.mesh is not t:
            p = p.on_mesh(t)
        x, jac = p.evaluate(ids, bary)
        d1 = float(np.max(np.linalg.norm(jac, axis=(1, 2))))
        if d1 == 0.0:
            warnings.warn(f"probe {p.name} has zero derivative; skipped")
            continue
        used += 1
        vert = p.at_vertices()
        pl = fn.pl_evaluator(t, vert)
        xi, ji = pl(ids, bary)
        e0 = float(np.max(np.linalg.norm(x - xi, axis=1)))
        e1 = float(np.max(np.linalg.norm(jac - ji, axis=(1, 2))))
        # boundary restriction: tangential derivative versus chord slope
        eb = 0.0
        if t.boundary_faces.size:
            owners = t.boundary_face_simplex
            col_a = np.argmax(t.simplices[owners] == t.boundary_faces[:, :1], axis=1)
            col_b = np.argmax(t.simplices[owners] == t.boundary_faces[:, 1:2], axis=1)
            s = np.linspace(0, 1, order + 1)
            fid = np.repeat(np.arange(owners.size), s.size)
            bb = np.zeros((fid.size, t.k + 1))
            bb[np.arange(fid.size), col_a[fid]] = 1 - np.tile(s, owners.size)
            bb[np.arange(fid.size), col_b[fid]] = np.tile(s, owners.size)
            xb, jb = p.evaluate(owners[fid], bb)
            pa = t.points[t.boundary_faces[:, 0]]
            pb = t.points[t.boundary_faces[:, 1]]
            ln = np.linalg.norm(pb - pa, axis=1)
            tang = ((pb - pa) / ln[:, None])[fid]
            chord = ((vert[t.boundary_faces[:, 1]] - vert[t.boundary_faces[:, 0]]) / ln[:, None])[fid]
            eb = float(np.max(np.linalg.norm(np.einsum("nij,nj->ni", jb, tang) - chord, axis=1)))
        d2 = _second_derivative_sup(p, ids, bary)
        best = max(best, max(e0, e1, eb) / (d1 + d2))
    if used == 0:
        raise DomainError("no usable probes for the approximation estimate")
    return best


# ----------------------------------------------------------------------
# finite metric spaces


@dataclass(frozen=True)
class FiniteMetricSet:
    """Points ``0..n-1`` with a symmetric distance table."""

    dist: np.ndarray
    labels: tuple = ()

    def __post_init__(self):
        d = np.asarray(self.dist, float)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise DomainError("distance table must be square")
        if np.any(np.abs(np.diag(d)) > 0) or np.any(d < 0):
            raise DomainError("distance table must be nonnegative with zero diagonal")
        if np.any(np.abs(d - d.T) > 1e-12 * max(1.0, float(np.max(d)))):
            raise DomainError("distance table is not symmetric")
        object.__setattr__(self, "dist", d)

    @classmethod
    def from_points(cls, points) -> FiniteMetricSet:
        p = np.asarray(points, float)
        if p.ndim == 1:
            p = p[:, None]
        d = np.linalg.norm(p[:, None, :] - p[None, :, :], axis=2)
        return cls(d)

    @property
    def n(self) -> int:
        return self.dist.shape[0]

    def separation(self) -> float:
        off = self.dist[~np.eye(self.n, dtype=bool)]
        return float(np.min(off)) if off.size else np.inf

    def dist_to(self, a: Iterable[int]) -> np.ndarray:
        a = sorted(a)
        if not a:
            return np.full(self.n, np.inf)
        return np.min(self.dist[:, a], axis=1)


def thicken(space: FiniteMetricSet, a: Iterable[int], r: float, closed: bool = True) -> frozenset:
    """``{x : dist(x, a) <= r}`` (or ``< r`` when not ``closed``)."""
    if r < 0:
        raise DomainError("thickening radius must be nonnegative")
    d = space.dist_to(a)
    mask = d <= r if closed else d < r
    return frozenset(np.flatnonzero(mask).tolist())


@dataclass(frozen=True)
class FiniteLimits:
    li: frozenset
    ls: frozenset
    eps_grid: tuple
    tail_start: int


def eps_grid_for(space: FiniteMetricSet) -> tuple:
    """Powers ``2^-j`` from the space's diameter down below its separation."""
    diam = float(np.max(space.dist)) if space.n > 1 else 1.0
    sep = space.separation()
    j0 = int(np.floor(-np.log2(max(diam, 1e-300)))) - 1
    grid = []
    j = j0
    while True:
        e = 2.0 ** (-j)
        grid.append(e)
        if e < sep or len(grid) > 2000:
            break
        j += 1
    return tuple(grid)


def _check_schedule(space, radius_schedule, n_sets, tail_start):
    r = np.asarray(radius_schedule, float)
    if r.shape != (n_sets,):
        raise DomainError("radius schedule must have one radius per set")
    if np.any(r < 0):
        raise DomainError("radii must be nonnegative")
    q = max(1, n_sets // 4)
    if np.any(r > 0) and not np.max(r[-q:]) < np.min(r[:q]):
        raise DomainError("radius schedule does not decay (last quarter >= first quarter)")
    if np.any(r[tail_start:] >= space.separation()):
        raise DomainError("tail radii must fall below the separation of the ground set")


def finite_limits(space: FiniteMetricSet, sets: Sequence[Iterable[int]],
                  radius_schedule: Sequence[float] | None = None,
                  eps_grid: Sequence[float] | None = None) -> FiniteLimits:
    """Inner and outer limits of a finite sequence of subsets.

    The quantifiers over neighbourhoods run over ``eps_grid`` (default: see
    :func:`eps_grid_for`) and the tail quantifier ``exists n`` / ``forall n``
    over ``n <= len(sets) // 2``::

        li = {x : all eps, some n <= N/2, all k >= n: dist(x, A_k) < eps}
        ls = {x : all eps, all n <= N/2, some k >= n: dist(x, A_k) < eps}

    With a ``radius_schedule`` the result is also computed for the closed
    thickenings ``B(A_k, r_k)`` and required to coincide.
    """
    sets = [frozenset(s) for s in sets]
    n_sets = len(sets)
    if n_sets == 0:
        raise DomainError("empty sequence of sets")
    tail_start = n_sets // 2
    grid = tuple(eps_grid) if eps_grid is not None else eps_grid_for(space)
    res = _limits(space, sets, grid, tail_start)
    if radius_schedule is not None:
        _check_schedule(space, radius_schedule, n_sets, tail_start)
        thick = [thicken(space, s, r) for s, r in zip(sets, radius_schedule)]
        res_t = _limits(space, thick, grid, tail_start)
        if res_t.li != res.li or res_t.ls != res.ls:
            raise CertificateViolation("set limits changed under vanishing thickenings")
    if not res.li <= res.ls:
        raise CertificateViolation("inner limit is not contained in the outer limit")
    return res


def _limits(space, sets, grid, tail_start) -> FiniteLimits:
    d = np.stack([space.dist_to(s) for s in sets])  # (N, n)
    n_sets = len(sets)
    li = np.ones(space.n, bool)
    ls = np.ones(space.n, bool)
    for eps in grid:
        close = d < eps  # (N, n)
        # all_from[n] = close for every k >= n
        all_from = np.flip(np.logical_and.accumulate(np.flip(close, 0), 0), 0)
        any_from = np.flip(np.logical_or.accumulate(np.flip(close, 0), 0), 0)
        li &= np.any(all_from[: tail_start + 1], axis=0)
        ls &= np.all(any_from[: min(tail_start + 1, n_sets)], axis=0)
    return FiniteLimits(frozenset(np.flatnonzero(li).tolist()),
                        frozenset(np.flatnonzero(ls).tolist()), tuple(grid), tail_start)


def hausdorff_distance(space: FiniteMetricSet, a: Iterable[int], b: Iterable[int]) -> float:
    a, b = sorted(a), sorted(b)
    if not a or not b:
        raise DomainError("Hausdorff distance of an empty set")
    sub = space.dist[np.ix_(a, b)]
    return float(max(np.max(np.min(sub, axis=1)), np.max(np.min(sub, axis=0))))


def hausdorff_from_table(table) -> float:
    """Hausdorff distance from a cross-distance table ``d(a_i, b_j)``."""
    t = np.asarray(table, float)
    if t.size == 0:
        raise DomainError("Hausdorff distance of an empty set")
    return float(max(np.max(np.min(t, axis=1)), np.max(np.min(t, axis=0))))


def pushforward_argmin(values: Sequence[tuple[Hashable, float]],
                       fibers: Mapping[Hashable, Hashable], rho: float) -> frozenset:
    """``argmin^rho`` of the pushforward ``(psi_# F)(c) = min_{psi(y) = c} F(y)``.

    Also checks the finite equality case ``psi(argmin^rho F) = argmin^rho(psi_# F)``.
    """
    if not values:
        raise DomainError("no values")
    vals = dict(values)
    if not all(np.isfinite(v) for v in vals.values()):
        raise DomainError("values must be finite")
    push: dict = {}
    for y, v in vals.items():
        c = fibers[y]
        push[c] = min(push.get(c, np.inf), v)
    inf = min(push.values())
    if np.isinf(rho):
        out = frozenset(push)
    else:
        out = frozenset(c for c, v in push.items() if v <= inf + rho)
    if inf != min(vals.values()):
        raise CertificateViolation("pushforward changed the infimum")
    direct = frozenset(fibers[y] for y, v in vals.items() if v <= inf + rho)
    if direct != out:
        raise CertificateViolation("pushforward argmin differs from the image of the argmin")
    return out


# ----------------------------------------------------------------------
# CSV


REPORT_COLUMNS = ("level", "delta_sampling", "delta_reconstruction", "delta_total",
                  "eps_sampling", "eps_reconstruction", "eps_total", "rho", "inf_gap",
                  "inf_smooth", "inf_discrete", "n_smooth", "n_discrete", "n_failures")


def reports_to_csv(reports: Mapping[int, ErrorReport]) -> str:
    buf = io.StringIO()
    buf.write("# minsurf error-report v1\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_COLUMNS)
    for level in sorted(reports):
        row = reports[level].row()
        row["level"] = level
        w.writerow([_fmt(row[c]) for c in REPORT_COLUMNS])
    return buf.getvalue()


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))
