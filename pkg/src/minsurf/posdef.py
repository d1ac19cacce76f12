"""Geometry of the cone of inner products P(V).

A point of P(V) is handled through its Gram matrix in a fixed basis; a
tangent vector is a symmetric matrix. Every function accepts either a single
``(k, k)`` matrix or a stack ``(..., k, k)`` and broadcasts over the leading
axes, because the immersion layer evaluates these per simplex.

The distance is the affine-invariant one,

.. math::
    d_P(b, c) = \\Vert \\log(L^{-T} C L^{-1}) \\Vert_F
              = (\\textstyle\\sum_i \\log(\\lambda_i)^2)^{1/2},

with :math:`L^T L = B` and :math:`\\lambda_i` the eigenvalues of ``C``
relative to ``B``.
"""

from __future__ import annotations

import numpy as np

from .errors import CertificateViolation, DomainError, checked

SYM_RTOL = 1e-12
SPD_RTOL = 1e-14
EIG_FLOOR = 1e-300


def _asarray(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise DomainError(f"expected square matrix/matrices, got shape {a.shape}")
    return a


def check_symmetric(x, name: str = "matrix") -> np.ndarray:
    x = _asarray(x)
    scale = np.max(np.abs(x), axis=(-2, -1), keepdims=True)
    asym = np.max(np.abs(x - np.swapaxes(x, -1, -2)), axis=(-2, -1), keepdims=True)
    if np.any(asym > SYM_RTOL * np.maximum(scale, np.finfo(float).tiny)):
        raise DomainError(f"{name} is not symmetric (asymmetry {float(np.max(asym)):.3e})")
    return 0.5 * (x + np.swapaxes(x, -1, -2))


def check_spd(b, name: str = "matrix") -> np.ndarray:
    """Validate and symmetrize a (stack of) Gram matrices.

    Raises :class:`DomainError` naming ``name`` and the smallest eigenvalue
    when some matrix is not positive definite.
    """
    b = check_symmetric(b, name)
    if not np.all(np.isfinite(b)):
        raise DomainError(f"{name} has non-finite entries")
    w = np.linalg.eigvalsh(b)
    lo, hi = w[..., 0], w[..., -1]
    bad = ~(lo > SPD_RTOL * np.abs(hi))
    if np.any(bad):
        worst = float(np.min(lo[bad])) if np.ndim(lo) else float(lo)
        raise DomainError(f"{name} is not positive definite (smallest eigenvalue {worst:.6e})")
    return b


def is_spd(b) -> bool:
    try:
        check_spd(b)
    except DomainError:
        return False
    return True


def _upper_factor(b: np.ndarray) -> np.ndarray:
    # U with U^T U = B
    return np.swapaxes(np.linalg.cholesky(b), -1, -2)


def whiten(b, c) -> np.ndarray:
    """Return ``U^{-T} C U^{-1}`` for the Cholesky factor ``U^T U = B``."""
    u = _upper_factor(b)
    # solve U^T Y = C, then Y U^{-1}: (U^{-T} (U^{-T} C)^T)^T
    y = np.linalg.solve(np.swapaxes(u, -1, -2), c)
    w = np.linalg.solve(np.swapaxes(u, -1, -2), np.swapaxes(y, -1, -2))
    return 0.5 * (w + np.swapaxes(w, -1, -2))


def relative_eigenvalues(b, c) -> np.ndarray:
    """Eigenvalues of ``c`` with respect to ``b`` (ascending)."""
    b = check_spd(b, "b")
    c = check_spd(c, "c")
    lam = np.linalg.eigvalsh(whiten(b, c))
    if np.any(lam < EIG_FLOOR):
        raise DomainError(f"relative eigenvalue {float(np.min(lam)):.3e} underflows")
    return lam


def dist_p(b, c) -> np.ndarray | float:
    """Geodesic distance between inner products given by Gram matrices."""
    lam = relative_eigenvalues(b, c)
    d = np.sqrt(np.sum(np.log(lam) ** 2, axis=-1))
    return float(d) if np.ndim(d) == 0 else d


def sym_funm(w: np.ndarray, fn) -> np.ndarray:
    """Apply a scalar function to a symmetric matrix through its eigenbasis."""
    lam, q = np.linalg.eigh(w)
    return (q * fn(lam)[..., None, :]) @ np.swapaxes(q, -1, -2)


def inner_product_at(b, x, y) -> np.ndarray | float:
    """Riemannian inner product ``tr(B^-1 X^T B^-1 Y)`` at base point ``b``."""
    b = check_spd(b, "b")
    x = check_symmetric(x, "x")
    y = check_symmetric(y, "y")
    bx = np.linalg.solve(b, np.swapaxes(x, -1, -2))
    by = np.linalg.solve(b, y)
    val = np.trace(bx @ by, axis1=-2, axis2=-1)
    return float(val) if np.ndim(val) == 0 else val


def norm_at(b, x) -> np.ndarray | float:
    v = inner_product_at(b, x, x)
    return np.sqrt(np.maximum(v, 0.0))


def geodesic(b, x, t: float) -> np.ndarray:
    """Point at time ``t`` on the geodesic from ``b`` with initial velocity ``x``."""
    b = check_spd(b, "b")
    x = check_symmetric(x, "x")
    u = _upper_factor(b)
    w = whiten(b, x)
    e = sym_funm(t * w, np.exp)
    out = np.swapaxes(u, -1, -2) @ e @ u
    return 0.5 * (out + np.swapaxes(out, -1, -2))


def vol_ratio(b, g) -> np.ndarray | float:
    """Ratio ``vol_b / vol_g`` of the induced volume densities.

    Uses ``sqrt(det B / det G)``: the density of ``g`` is normalized to one on
    ``g``-orthonormal bases, which forces the square root.
    """
    b = check_spd(b, "b")
    g = check_spd(g, "g")
    _, lb = np.linalg.slogdet(b)
    _, lg = np.linalg.slogdet(g)
    r = np.exp(0.5 * (lb - lg))
    return float(r) if np.ndim(r) == 0 else r


def dist_vol(b, g) -> np.ndarray | float:
    b = check_spd(b, "b")
    g = check_spd(g, "g")
    _, lb = np.linalg.slogdet(b)
    _, lg = np.linalg.slogdet(g)
    d = 0.5 * np.abs(lb - lg)
    return float(d) if np.ndim(d) == 0 else d


def vol_lipschitz(k: int, convention: str = "sqrt") -> float:
    """Lipschitz constant of ``g -> vol_g`` w.r.t. ``d_P``.

    ``"sqrt"`` is the sharp constant sqrt(k)/2 for the square-root volume
    ratio; ``"paper"`` is the weaker sqrt(k).
    """
    if convention == "sqrt":
        return 0.5 * np.sqrt(k)
    if convention == "paper":
        return float(np.sqrt(k))
    raise ValueError(f"unknown convention {convention!r}")


def certify_spd_perturbation(b, g, x, bound: str = "stated"):
    """Openness of P(V) in Sym(V), quantified.

    If ``|x|_g < exp(-d_P(b, g))`` then ``b + x`` is positive definite and
    ``d_P(b, b + x) <= exp(d_P(g, b)) |x|_g``.

    The stated bound relies on ``|log(I + Y)| <= |Y|``, which fails for
    negative eigenvalues of ``Y`` (``b = g = I``, ``x = -0.1 I`` violates it).
    ``bound="corrected"`` uses ``r / (1 - r)`` with ``r = exp(d_P(g, b)) |x|_g``,
    from ``|log(1 + y)| <= |y| / (1 - |y|)``.
    """
    b = check_spd(b, "b")
    g = check_spd(g, "g")
    x = check_symmetric(x, "x")
    dbg = dist_p(b, g)
    xn = float(norm_at(g, x))
    applicable = xn < np.exp(-dbg)
    r = float(np.exp(dbg) * xn)
    if bound == "stated":
        value = r
    elif bound == "corrected":
        value = r / (1.0 - r) if applicable else np.inf
    else:
        raise ValueError(f"unknown bound {bound!r}")
    if not applicable:
        return checked(False, value, np.nan, "PosDefopeninSym")
    if not is_spd(b + x):
        raise CertificateViolation("PosDefopeninSym: b + x left the positive cone")
    actual = dist_p(b, b + x)
    return checked(True, value, actual, "PosDefopeninSym")
