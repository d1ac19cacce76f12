"""Closed-form parameterizations over the reference domains.

Each chart is called as ``chart(x, anchor) -> (pos (n, m), jac (n, m, 2))``
with ``x`` parameter points and ``anchor`` a point of the same mesh simplex
(its centroid). Charts built from the polygonal gauge are smooth on every
polygon sector; the sector rays are mesh lines of the reference
triangulations and of all their 4:1 refinements, so the anchor identifies
the branch unambiguously.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def smoothstep(u):
    """Quintic smoothstep (C^2) on [0, 1] and its derivative."""
    u = np.clip(u, 0.0, 1.0)
    return u**3 * (10 - 15 * u + 6 * u * u), 30 * u * u * (1 - u) ** 2


@dataclass(frozen=True)
class PolygonGauge:
    """Sector-wise coordinates of a regular ``n``-gon of circumradius 1.

    A point ``x`` in sector ``i`` is written ``x = s (v_i + tau (v_{i+1} - v_i))``
    with gauge ``s`` and side fraction ``tau``. Both ``s`` and ``s tau`` are
    linear on the sector, so everything below is smooth there.
    """

    n: int

    def sector(self, anchor):
        ang = np.mod(np.arctan2(anchor[:, 1], anchor[:, 0]), 2 * np.pi)
        return np.minimum((ang / (2 * np.pi / self.n)).astype(int), self.n - 1)

    def coords(self, x, anchor):
        """Return ``s, tau, t, grad_s, grad_tau`` (t = (i + tau) / n)."""
        i = self.sector(anchor)
        a0 = 2 * np.pi * i / self.n
        a1 = 2 * np.pi * (i + 1) / self.n
        v0 = np.stack([np.cos(a0), np.sin(a0)], 1)
        v1 = np.stack([np.cos(a1), np.sin(a1)], 1)
        m = np.stack([v0, v1 - v0], axis=2)  # columns
        minv = np.linalg.inv(m)
        ss = np.einsum("nij,nj->ni", minv, x)
        s, sig = ss[:, 0], ss[:, 1]
        grad_s, grad_sig = minv[:, 0, :], minv[:, 1, :]
        with np.errstate(invalid="ignore", divide="ignore"):
            tau = np.where(s > 0, sig / s, 0.0)
            grad_tau = np.where(s[:, None] > 0, (grad_sig - tau[:, None] * grad_s) / s[:, None], 0.0)
        t = (i + tau) / self.n
        return s, tau, t, grad_s, grad_tau


def _circle(t):
    w = 2 * np.pi
    c, s = np.cos(w * t), np.sin(w * t)
    return np.stack([c, s], 1), w * np.stack([-s, c], 1)


@dataclass(frozen=True)
class FlatDiskChart:
    """Hexagon -> unit disk, identity for gauge below 1/2.

    ``Phi(x) = x + beta(s) (gamma(t) - x / s)`` with ``gamma`` the unit circle,
    ``beta`` a C^2 smoothstep from ``s = 1/2`` to ``s = 1``. On the hexagon
    boundary ``Phi = gamma(t)`` with ``t`` the normalized arc length, matching
    the boundary parameters of :func:`~minsurf.mesh.build_disk`.
    """

    ambient: int = 3
    name: str = "flat-disk"

    def planar(self, x, anchor):
        x = np.asarray(x, float)
        n = x.shape[0]
        gauge = PolygonGauge(6)
        s, _, t, gs, gtau = gauge.coords(x, anchor)
        beta, dbeta = smoothstep(2 * s - 1)
        dbeta = 2 * dbeta
        pos = x.copy()
        jac = np.broadcast_to(np.eye(2), (n, 2, 2)).copy()
        act = beta > 0
        if np.any(act):
            s_a, xa = s[act], x[act]
            p = xa / s_a[:, None]
            g, dg = _circle(t[act])
            gt = gtau[act] / 6.0
            # dp/dx = (I - p grad_s^T) / s
            dp = (np.eye(2)[None] - p[:, :, None] * gs[act][:, None, :]) / s_a[:, None, None]
            dgam = dg[:, :, None] * gt[:, None, :]
            pos[act] = xa + beta[act, None] * (g - p)
            jac[act] += (dbeta[act, None, None] * (g - p)[:, :, None] * gs[act][:, None, :]
                         + beta[act, None, None] * (dgam - dp))
        return pos, jac

    def __call__(self, x, anchor):
        pos, jac = self.planar(x, anchor)
        n = pos.shape[0]
        if self.ambient == 2:
            return pos, jac
        pad = self.ambient - 2
        return (np.concatenate([pos, np.zeros((n, pad))], 1),
                np.concatenate([jac, np.zeros((n, pad, 2))], 1))


@dataclass(frozen=True)
class CapChart:
    """Paraboloid cap ``(Phi, eps (1 - |Phi|^2))`` over the flat disk map."""

    eps: float
    name: str = "cap"

    def __call__(self, x, anchor):
        p, dp = FlatDiskChart(2).planar(x, anchor)
        z = self.eps * (1 - np.sum(p * p, axis=1))
        dz = -2 * self.eps * np.einsum("ni,nij->nj", p, dp)
        return np.concatenate([p, z[:, None]], 1), np.concatenate([dp, dz[:, None, :]], 1)


@dataclass(frozen=True)
class CatenoidChart:
    """Catenoid over a polygonal annulus.

    The gauge ``s`` runs from ``r_in`` (inner ring, height ``-a``) to
    ``r_out`` (outer ring, height ``+a``) and is mapped linearly to the
    height ``z``; the angle is ``2 pi t``. The image is the catenoid
    ``r = cosh z`` with boundary circles of radius ``cosh a``.
    """

    n_around: int
    r_in: float
    r_out: float
    a: float = 0.5
    name: str = "catenoid"

    def __call__(self, x, anchor):
        x = np.asarray(x, float)
        s, _, t, gs, gtau = PolygonGauge(self.n_around).coords(x, anchor)
        c = 2 * self.a / (self.r_out - self.r_in)
        z = -self.a + c * (s - self.r_in)
        w = 2 * np.pi
        r, dr = np.cosh(z), np.sinh(z)
        co, si = np.cos(w * t), np.sin(w * t)
        pos = np.stack([r * co, r * si, z], 1)
        dz = c * gs
        dt = gtau / self.n_around
        jac = np.stack([
            (dr * co)[:, None] * dz - (r * si * w)[:, None] * dt,
            (dr * si)[:, None] * dz + (r * co * w)[:, None] * dt,
            dz,
        ], 1)
        return pos, jac


def catenoid_area(a: float) -> float:
    """Area of the catenoid ``r = cosh z`` for ``|z| <= a``."""
    return float(2 * np.pi * (a + np.sinh(a) * np.cosh(a)))


@dataclass(frozen=True)
class QuadraticProbe:
    """``(x, y, x^2 + y^2)`` in parameter coordinates."""

    name: str = "quadratic"

    def __call__(self, x, anchor=None):
        x = np.asarray(x, float)
        n = x.shape[0]
        pos = np.concatenate([x, np.sum(x * x, 1)[:, None]], 1)
        jac = np.concatenate([np.broadcast_to(np.eye(2), (n, 2, 2)), 2 * x[:, None, :]], 1)
        return pos, jac


@dataclass(frozen=True)
class AffineProbe:
    """``M x + q``."""

    matrix: tuple = ((1.0, 0.0), (0.0, 1.0), (0.3, -0.2))
    offset: tuple = (0.0, 0.0, 0.1)
    name: str = "affine"

    def __call__(self, x, anchor=None):
        m = np.asarray(self.matrix, float)
        x = np.asarray(x, float)
        return x @ m.T + np.asarray(self.offset), np.broadcast_to(m, (x.shape[0],) + m.shape).copy()
