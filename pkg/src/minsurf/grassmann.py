"""Ray-space distances between injective linear maps.

For injective ``A, B: V1 -> V2`` the sup-angle distance is

.. math::
    d(A, B) = \\sup_{u \\neq 0} \\angle(Au, Bu).

Angles are evaluated as ``atan2(|Au ^ Bu|, <Au, Bu>)``. Both the wedge
components and the inner product are quadratic forms in ``u``, so their
coefficients are assembled once per map pair and the angular search only
evaluates trigonometric polynomials. This keeps small angles accurate (no
``arccos`` near 1) and lets ``k = 2`` be vectorized over thousands of
simplices.
"""

from __future__ import annotations

import numpy as np

from . import posdef
from .errors import CertificateViolation, DomainError, checked

RAY_TOL = 1e-6
"""Documented accuracy (radians) of :func:`dist_ray_sup`."""

INJ_RTOL = 1e-12
GRID_POINTS = 4096
GOLDEN_TOL = 1e-9
RESTARTS = 64
PINV_COND_MAX = 1e8

_CHUNK = 256
_INVPHI = (np.sqrt(5.0) - 1.0) / 2.0


def _as_maps(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim < 2:
        raise DomainError(f"expected (..., m, k) array, got shape {a.shape}")
    if a.shape[-1] > a.shape[-2]:
        raise DomainError(f"map {a.shape[-2]}x{a.shape[-1]} cannot be injective")
    if not np.all(np.isfinite(a)):
        raise DomainError("map has non-finite entries")
    return a


def singular_values(a) -> np.ndarray:
    return np.linalg.svd(_as_maps(a), compute_uv=False)


def is_injective(a) -> bool:
    s = singular_values(a)
    return bool(np.all(s[..., -1] > INJ_RTOL * s[..., 0]))


def check_injective(a, name: str = "map") -> np.ndarray:
    a = _as_maps(a)
    s = np.linalg.svd(a, compute_uv=False)
    bad = ~(s[..., -1] > INJ_RTOL * s[..., 0])
    if np.any(bad):
        worst = float(np.min(s[..., -1][bad]))
        raise DomainError(f"{name} is not injective (smallest singular value {worst:.6e})")
    return a


def ray_angle(u, v) -> float:
    """Angle in ``[0, pi]`` between two nonzero vectors.

    Equal to ``arccos(<u, v> / (|u| |v|))`` but evaluated through ``atan2`` so
    that nearly parallel vectors keep full relative precision.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise DomainError("ray_angle of a zero vector")
    return float(_column_angles(u[:, None] / nu, v[:, None] / nv))


def _column_angles(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # k = 1: the sup is attained at the only ray
    x, y = a[..., 0], b[..., 0]
    dot = np.sum(x * y, axis=-1)
    w = x[..., :, None] * y[..., None, :]
    wedge = np.sqrt(np.maximum(np.sum((w - np.swapaxes(w, -1, -2)) ** 2, axis=(-2, -1)) / 2, 0))
    return np.arctan2(wedge, dot)


def _quadratic_coeffs(a: np.ndarray, b: np.ndarray):
    """Coefficients of ``<Au,Bu>`` and the wedge ``Au ^ Bu`` for k = 2.

    Returns ``dot (n, 3)`` and ``wedge (n, p, 3)`` with the convention
    ``q(phi) = c0 cos^2 + c1 cos sin + c2 sin^2``.
    """
    a0, a1 = a[..., 0], a[..., 1]
    b0, b1 = b[..., 0], b[..., 1]
    dot = np.stack([
        np.sum(a0 * b0, -1),
        np.sum(a0 * b1 + a1 * b0, -1),
        np.sum(a1 * b1, -1),
    ], axis=-1)
    m = a.shape[-2]
    iu, ju = np.triu_indices(m, 1)

    def wedge(x, y):
        return x[..., iu] * y[..., ju] - x[..., ju] * y[..., iu]

    wed = np.stack([wedge(a0, b0), wedge(a0, b1) + wedge(a1, b0), wedge(a1, b1)], axis=-1)
    return dot, wed


def _angle_at(dot, wed, phi):
    # dot (n, 3), wed (n, p, 3), phi (n, g) -> (n, g)
    c, s = np.cos(phi), np.sin(phi)
    basis = np.stack([c * c, c * s, s * s], axis=-1)  # (n, g, 3)
    d = np.einsum("ngj,nj->ng", basis, dot)
    w = np.einsum("ngj,npj->ngp", basis, wed)
    return np.arctan2(np.sqrt(np.sum(w * w, axis=-1)), d)


def _sup_k2(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = a.shape[0]
    out = np.empty(n)
    h = np.pi / GRID_POINTS
    grid = np.arange(GRID_POINTS) * h
    for lo in range(0, n, _CHUNK):
        sl = slice(lo, min(n, lo + _CHUNK))
        dot, wed = _quadratic_coeffs(a[sl], b[sl])
        nn = dot.shape[0]
        vals = _angle_at(dot, wed, np.broadcast_to(grid, (nn, GRID_POINTS)))
        best = np.argmax(vals, axis=1)
        left = (best - 1) * h
        right = (best + 1) * h
        x1 = right - _INVPHI * (right - left)
        x2 = left + _INVPHI * (right - left)
        f1 = _angle_at(dot, wed, x1[:, None])[:, 0]
        f2 = _angle_at(dot, wed, x2[:, None])[:, 0]
        while np.max(right - left) > GOLDEN_TOL:
            up = f1 < f2
            left = np.where(up, x1, left)
            right = np.where(up, right, x2)
            nx1 = right - _INVPHI * (right - left)
            nx2 = left + _INVPHI * (right - left)
            x1n = np.where(up, x2, nx1)
            x2n = np.where(up, nx2, x1)
            f1n = np.where(up, f2, np.nan)
            f2n = np.where(up, np.nan, f1)
            fresh = _angle_at(dot, wed, np.where(up, x2n, x1n)[:, None])[:, 0]
            f1 = np.where(up, f1n, fresh)
            f2 = np.where(up, fresh, f2n)
            x1, x2 = x1n, x2n
        refined = _angle_at(dot, wed, (0.5 * (left + right))[:, None])[:, 0]
        out[sl] = np.maximum(refined, vals[np.arange(nn), best])
    return out


def _angle_and_grad(a, b, u):
    # u (r, k) unit vectors
    au, bu = u @ a.T, u @ b.T
    d = np.sum(au * bu, axis=1)
    w = au[:, :, None] * bu[:, None, :]
    w = w - np.swapaxes(w, 1, 2)
    s = np.sqrt(np.maximum(np.sum(w * w, axis=(1, 2)) / 2, 0.0))
    theta = np.arctan2(s, d)
    # gradients of d and s^2 w.r.t. u
    gd = au @ b + bu @ a
    gs2 = 2 * (np.sum(bu * bu, 1)[:, None] * (au @ a) + np.sum(au * au, 1)[:, None] * (bu @ b)
               - d[:, None] * gd)
    r2 = s * s + d * d
    with np.errstate(invalid="ignore", divide="ignore"):
        gs = np.where(s[:, None] > 0, gs2 / (2 * s[:, None]), 0.0)
        g = (d[:, None] * gs - s[:, None] * gd) / r2[:, None]
    return theta, np.nan_to_num(g)


def _sup_general(a: np.ndarray, b: np.ndarray, rng: np.random.Generator) -> float:
    k = a.shape[1]
    u = rng.standard_normal((RESTARTS, k))
    u[:k] = np.eye(k)
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    step = np.full(RESTARTS, 0.5)
    theta, g = _angle_and_grad(a, b, u)
    for _ in range(2000):
        gt = g - np.sum(g * u, 1, keepdims=True) * u
        if np.max(np.linalg.norm(gt, axis=1) * step) < GOLDEN_TOL:
            break
        cand = u + step[:, None] * gt
        cand /= np.linalg.norm(cand, axis=1, keepdims=True)
        th2, g2 = _angle_and_grad(a, b, cand)
        ok = th2 >= theta
        u = np.where(ok[:, None], cand, u)
        theta = np.where(ok, th2, theta)
        g = np.where(ok[:, None], g2, g)
        step = np.where(ok, step * 1.5, step * 0.5)
    return float(np.max(theta))


def dist_ray_sup(a, b, seed: int = 0):
    """Supremum over rays of the angle between ``a u`` and ``b u``.

    Parameters
    ----------
    a, b : array_like, shape (m, k) or (n, m, k)
        Injective maps. Stacks are evaluated pairwise.
    seed : int
        Seed for the random restarts used when ``k >= 3``.

    Returns
    -------
    float or ndarray
        Angles in radians, accurate to :data:`RAY_TOL`.

    Notes
    -----
    ``k = 1`` is closed form. ``k = 2`` scans a grid of
    :data:`GRID_POINTS` directions on the half circle and refines the best
    bracket by golden section to :data:`GOLDEN_TOL`. The angle field is
    Lipschitz in the direction with constant at most
    ``2 (|a| |a^+| + |b| |b^+|)``, so the grid value alone is within that
    constant times ``pi / (2 GRID_POINTS)`` of the supremum; the refinement
    closes the gap whenever the maximizing bracket is the grid's best one.
    ``k >= 3`` uses :data:`RESTARTS` restarts of projected gradient ascent.
    The result is always an attained value, hence a lower bound.
    """
    a = check_injective(a, "a")
    b = check_injective(b, "b")
    if a.shape != b.shape:
        raise DomainError(f"shape mismatch {a.shape} vs {b.shape}")
    single = a.ndim == 2
    a2 = a.reshape((-1,) + a.shape[-2:])
    b2 = b.reshape((-1,) + b.shape[-2:])
    k = a.shape[-1]
    if k == 1:
        out = _column_angles(a2, b2)
    elif k == 2:
        out = _sup_k2(a2, b2)
    else:
        rng = np.random.default_rng(seed)
        out = np.array([_sup_general(x, y, rng) for x, y in zip(a2, b2)])
    if single:
        return float(out[0])
    return out.reshape(a.shape[:-2])


def angle_lipschitz(a, b) -> float:
    """Lipschitz bound of ``u -> angle(a u, b u)`` on the unit sphere."""
    na, nb = np.linalg.norm(a, 2), np.linalg.norm(b, 2)
    pa, pb = np.linalg.norm(pseudoinverse(a), 2), np.linalg.norm(pseudoinverse(b), 2)
    return float(2 * (na * pa + nb * pb))


def pseudoinverse(a) -> np.ndarray:
    """Moore-Penrose pseudoinverse ``(a^T a)^{-1} a^T`` of an injective map."""
    a = check_injective(a, "a")
    ata = np.swapaxes(a, -1, -2) @ a
    if np.all(np.linalg.cond(ata) < PINV_COND_MAX):
        lo = np.linalg.cholesky(ata)
        y = np.linalg.solve(lo, np.swapaxes(a, -1, -2))
        return np.linalg.solve(np.swapaxes(lo, -1, -2), y)
    return np.linalg.pinv(a)


def frob_g(x, g=None) -> float:
    """Frobenius norm of ``x`` with the domain carrying inner product ``g``."""
    x = np.asarray(x, dtype=float)
    if g is None:
        return float(np.linalg.norm(x))
    lo = np.linalg.cholesky(posdef.check_spd(g, "g1"))
    return float(np.linalg.norm(np.linalg.solve(lo, x.T)))


def opnorm_g(x, g=None) -> float:
    """Operator norm of ``x`` with the domain carrying inner product ``g``."""
    x = np.asarray(x, dtype=float)
    if g is not None:
        lo = np.linalg.cholesky(posdef.check_spd(g, "g1"))
        x = np.linalg.solve(lo, x.T).T
    return float(np.linalg.norm(x, 2))


def _pinv_norm_g(a, g=None) -> float:
    # |a^+| with domain metric g: 1 / sigma_min of a whitened by g
    if g is not None:
        lo = np.linalg.cholesky(posdef.check_spd(g, "g1"))
        a = np.linalg.solve(lo, a.T).T
    return float(1.0 / np.linalg.svd(a, compute_uv=False)[-1])


def _gram(a) -> np.ndarray:
    return a.T @ a


def certify_map_perturbation_metric(a, b, g1=None):
    """Perturbing an injective map moves its pullback metric boundedly.

    With ``l = d_P(g1, a^T a)``: if ``|a - b|_F < exp(-3l/2) / 3`` then ``b``
    is injective and ``d_P(a^T a, b^T b) <= 7/3 exp(3l/2) |a - b|_F``.
    """
    a = check_injective(a, "a")
    b = _as_maps(b)
    k = a.shape[1]
    g1 = np.eye(k) if g1 is None else g1
    ell = posdef.dist_p(g1, _gram(a))
    eps = frob_g(a - b, g1)
    applicable = eps < np.exp(-1.5 * ell) / 3.0
    bound = 7.0 / 3.0 * np.exp(1.5 * ell) * eps
    if not applicable:
        return checked(False, bound, np.nan, "HomembInj1")
    if not is_injective(b):
        raise CertificateViolation("HomembInj1: perturbed map is not injective")
    return checked(True, bound, posdef.dist_p(_gram(a), _gram(b)), "HomembInj1")


def certify_map_perturbation_ray(a, b, g1=None):
    """Perturbing an injective map moves its rays boundedly.

    If ``|a - b|_F < 1 / (2 |a^+|)`` then ``b`` is injective and
    ``dist_ray_sup(a, b) <= pi sqrt(24) |a^+| |a - b|_F``.
    """
    a = check_injective(a, "a")
    b = _as_maps(b)
    pn = _pinv_norm_g(a, g1)
    eps = frob_g(a - b, g1)
    applicable = eps < 0.5 / pn
    bound = np.pi * np.sqrt(24.0) * pn * eps
    if not applicable:
        return checked(False, bound, np.nan, "HomembInj2")
    if not is_injective(b):
        raise CertificateViolation("HomembInj2: perturbed map is not injective")
    return checked(True, bound, dist_ray_sup(a, b), "HomembInj2")


def reverse_bound_linear(a, b, g1=None):
    """Pullback metric and rays together control the map.

    If ``d_P(a^T a, b^T b) < 5/2`` then
    ``|a - b|_op <= exp(d_P(g1, a^T a)) (dist_ray_sup(a, b) + d_P(a^T a, b^T b))``.
    """
    a = check_injective(a, "a")
    b = check_injective(b, "b")
    k = a.shape[1]
    g1 = np.eye(k) if g1 is None else g1
    dm = posdef.dist_p(_gram(a), _gram(b))
    applicable = dm < 2.5
    if not applicable:
        return checked(False, np.nan, np.nan, "InjembHom")
    bound = np.exp(posdef.dist_p(g1, _gram(a))) * (dist_ray_sup(a, b) + dm)
    # the ray distance is a lower estimate; pad the bound by its tolerance
    return checked(True, bound + np.exp(posdef.dist_p(g1, _gram(a))) * RAY_TOL,
                   opnorm_g(a - b, g1), "InjembHom")
