"""Closed parametric boundary curves with exact derivatives.

Every component is a 1-periodic map ``t -> R^m`` returning position, first
and second derivative. Mesh boundary vertices store ``(component, t)`` and
are pinned to ``curve(component, t)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import DomainError

CHECK_POINTS = 10_000
SPEED_FLOOR = 1e-9

Component = Callable[[np.ndarray], tuple[np.ndarray, np.ndarray, np.ndarray]]


@dataclass(frozen=True)
class BoundaryCurve:
    """A union of closed curves.

    Parameters
    ----------
    components : sequence of callables
        ``c(t) -> (x, dx, ddx)`` with arrays of shape ``(n, m)``.
    injective : bool
        Whether the union is known to be embedded.
    name : str
        Label used in reports.
    """

    components: Sequence[Component]
    injective: bool = True
    name: str = "curve"
    dim: int = field(init=False)

    def __post_init__(self):
        t = np.arange(CHECK_POINTS) / CHECK_POINTS
        dims = set()
        for i, c in enumerate(self.components):
            x, dx, _ = c(t)
            dims.add(x.shape[1])
            speed = np.linalg.norm(dx, axis=1)
            if np.min(speed) <= SPEED_FLOOR:
                raise DomainError(f"component {i} has vanishing derivative "
                                  f"(min speed {np.min(speed):.3e})")
        if len(dims) != 1:
            raise DomainError("components live in different dimensions")
        object.__setattr__(self, "dim", dims.pop())

    @property
    def arity(self) -> int:
        return len(self.components)

    def evaluate(self, component, t, order: int = 0) -> np.ndarray:
        """Position (``order=0``) or derivative of the given order, shape (n, m)."""
        component = np.broadcast_to(np.asarray(component, dtype=int), np.shape(t))
        t = np.asarray(t, dtype=float)
        out = np.empty(t.shape + (self.dim,))
        for c in np.unique(component):
            mask = component == c
            out[mask] = self.components[c](t[mask])[order]
        return out

    __call__ = evaluate

    def pin(self, mesh) -> np.ndarray:
        """Positions of the mesh's boundary vertices on the curve."""
        return self.evaluate(mesh.boundary_component, mesh.boundary_t)

    def bbox_diagonal(self, samples: int = 2048) -> float:
        t = np.arange(samples) / samples
        pts = np.concatenate([c(t)[0] for c in self.components])
        return float(np.linalg.norm(pts.max(0) - pts.min(0)))


def _circle_component(radius: float, center, axis_u, axis_v, phase: float = 0.0) -> Component:
    center = np.asarray(center, float)
    u = np.asarray(axis_u, float)
    v = np.asarray(axis_v, float)
    w = 2 * np.pi

    def comp(t):
        a = w * np.asarray(t, float)[:, None] + phase
        c, s = np.cos(a), np.sin(a)
        x = center + radius * (c * u + s * v)
        dx = radius * w * (-s * u + c * v)
        ddx = -radius * w * w * (c * u + s * v)
        return x, dx, ddx

    return comp


def circle(radius: float = 1.0, ambient: int = 3) -> BoundaryCurve:
    """Circle of the given radius in the first coordinate plane."""
    e = np.eye(ambient)
    return BoundaryCurve([_circle_component(radius, np.zeros(ambient), e[0], e[1])],
                         name=f"circle({radius:g})")


def coaxial_circles(radius: float | Callable[[float], float], half_height: float) -> BoundaryCurve:
    """Two circles about the z axis at heights ``-h`` (component 0) and ``+h``.

    ``radius`` is a number or a function of the height.
    """
    rf = radius if callable(radius) else (lambda z, r=radius: r)
    e = np.eye(3)
    comps = [_circle_component(float(rf(z)), z * e[2], e[0], e[1])
             for z in (-half_height, half_height)]
    return BoundaryCurve(comps, name=f"coaxial-circles(h={half_height:g})")


def catenoid_boundary(a: float = 0.5) -> BoundaryCurve:
    return coaxial_circles(np.cosh, a)


def torus_knot(p: int = 2, q: int = 3, R: float = 2.0, r: float = 1.0) -> BoundaryCurve:
    """The (p, q) torus knot on the torus of radii ``R > r``."""
    w = 2 * np.pi

    def comp(t):
        s = w * np.asarray(t, float)
        rho = R + r * np.cos(q * s)
        drho = -r * q * np.sin(q * s)
        ddrho = -r * q * q * np.cos(q * s)
        cp, sp = np.cos(p * s), np.sin(p * s)
        x = np.stack([rho * cp, rho * sp, r * np.sin(q * s)], 1)
        dx = np.stack([drho * cp - p * rho * sp, drho * sp + p * rho * cp,
                       r * q * np.cos(q * s)], 1)
        ddx = np.stack([
            ddrho * cp - 2 * p * drho * sp - p * p * rho * cp,
            ddrho * sp + 2 * p * drho * cp - p * p * rho * sp,
            -r * q * q * np.sin(q * s),
        ], 1)
        return x, w * dx, w * w * ddx

    return BoundaryCurve([comp], injective=bool(np.gcd(p, q) == 1), name=f"torus-knot({p},{q})")


def borromean_rings(a: float = 1.0, b: float = 0.5) -> BoundaryCurve:
    """Three mutually perpendicular ellipses forming the Borromean rings."""
    e = np.eye(3)
    comps = [
        _ellipse(e[0], e[1], a, b),
        _ellipse(e[1], e[2], a, b),
        _ellipse(e[2], e[0], a, b),
    ]
    return BoundaryCurve(comps, name="borromean")


def _ellipse(u, v, a, b) -> Component:
    w = 2 * np.pi

    def comp(t):
        s = w * np.asarray(t, float)[:, None]
        c, sn = np.cos(s), np.sin(s)
        x = a * c * u + b * sn * v
        dx = w * (-a * sn * u + b * c * v)
        ddx = -w * w * (a * c * u + b * sn * v)
        return x, dx, ddx

    return comp


def from_samples(points) -> BoundaryCurve:
    """Periodic cubic spline through samples of one closed curve.

    The parameter is normalized chord length.
    """
    pts = np.asarray(points, float)
    if pts.ndim != 2 or pts.shape[0] < 4:
        raise DomainError("need at least 4 sample points")
    closed = np.vstack([pts, pts[:1]])
    seg = np.linalg.norm(np.diff(closed, axis=0), axis=1)
    if np.any(seg == 0):
        raise DomainError("repeated consecutive sample points")
    knots = np.concatenate([[0.0], np.cumsum(seg)]) / seg.sum()
    spline = CubicSpline(knots, closed, bc_type="periodic")

    def comp(t):
        t = np.mod(np.asarray(t, float), 1.0)
        return spline(t), spline(t, 1), spline(t, 2)

    return BoundaryCurve([comp], name="file")


def from_file(path) -> BoundaryCurve:
    """Read whitespace-separated samples (one point per line) of a closed curve."""
    return from_samples(np.loadtxt(path, ndmin=2))


def from_spec(kind: str, **kw) -> BoundaryCurve:
    kind = kind.strip().lower()
    if kind == "circle":
        return circle(float(kw.get("radius", 1.0)))
    if kind in ("coaxial-circles", "catenoid"):
        h = float(kw.get("half_height", 0.5))
        if "radius" in kw:
            return coaxial_circles(float(kw["radius"]), h)
        return catenoid_boundary(h)
    if kind == "torus-knot":
        return torus_knot(int(kw.get("p", 2)), int(kw.get("q", 3)),
                          float(kw.get("R", 2.0)), float(kw.get("r", 1.0)))
    if kind == "borromean":
        return borromean_rings()
    if kind == "file":
        return from_file(kw["path"])
    raise DomainError(f"unknown curve kind {kind!r}")
