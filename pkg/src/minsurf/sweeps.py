"""Randomized sweeps over the perturbation certificates.

Each sweep draws random instances that satisfy the certificate's smallness
hypothesis (perturbations are scaled to a random fraction of the admissible
radius) and counts bound violations. A violation is a bug, so the expected
count is always zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import functional as fn
from . import grassmann, posdef
from . import immersion as imm
from .errors import CertificateViolation, DomainError
from .mesh import build_disk, refine


@dataclass(frozen=True)
class SweepResult:
    name: str
    applicable: int
    violations: int
    worst_ratio: float  # max actual / bound over applicable instances
    messages: tuple = ()


def random_spd(rng, k: int, spread: float = 1.0) -> np.ndarray:
    q, _ = np.linalg.qr(rng.standard_normal((k, k)))
    return (q * np.exp(spread * rng.standard_normal(k))) @ q.T


def random_sym(rng, k: int, scale: float = 1.0) -> np.ndarray:
    x = rng.standard_normal((k, k)) * scale
    return 0.5 * (x + x.T)


def random_injective(rng, m: int, k: int) -> np.ndarray:
    while True:
        a = rng.standard_normal((m, k))
        s = np.linalg.svd(a, compute_uv=False)
        if s[-1] > 0.05 * s[0]:
            return a


def random_immersion(rng, level: int = 0, m: int = 3, noise: float = 0.1) -> imm.DiscreteImmersion:
    """A perturbed graph over the disk mesh, in general position."""
    mesh = refine(build_disk(1), level)
    while True:
        p = mesh.points
        z = rng.uniform(-0.5, 0.5) * p[:, 0] ** 2 + rng.uniform(-0.5, 0.5) * p[:, 1]
        pos = np.zeros((mesh.nv, m))
        pos[:, :2] = p
        pos[:, 2] = z
        pos += noise * rng.standard_normal(pos.shape)
        f = imm.DiscreteImmersion(mesh, pos, check=False)
        q = np.linalg.svd(f.differentials, compute_uv=False)
        if np.all(q[:, -1] > 0.1 * q[:, 0]):
            return f


def _scaled(direction, norm_value, target):
    return direction * (target / norm_value)


def _run(name, n, rng, draw) -> SweepResult:
    applicable = 0
    violations = 0
    worst = 0.0
    msgs = []
    attempts = 0
    while applicable < n:
        attempts += 1
        if attempts > 20 * n + 100:
            raise DomainError(f"{name}: could not draw applicable instances")
        try:
            cert = draw(rng)
        except CertificateViolation as exc:
            applicable += 1
            violations += 1
            msgs.append(str(exc))
            continue
        if cert is None or not cert.applicable:
            continue
        applicable += 1
        if cert.bound > 0:
            worst = max(worst, cert.actual / cert.bound)
    return SweepResult(name, applicable, violations, worst, tuple(msgs[:5]))


def _draw_spd(rng, bound="stated"):
    k = int(rng.integers(1, 4))
    b = random_spd(rng, k)
    g = random_spd(rng, k)
    x = random_sym(rng, k)
    radius = np.exp(-posdef.dist_p(b, g))
    x = _scaled(x, float(posdef.norm_at(g, x)), rng.uniform(0.01, 0.999) * radius)
    return posdef.certify_spd_perturbation(b, g, x, bound)


def _map_pair(rng):
    k = int(rng.integers(1, 3))
    m = int(rng.integers(k, 4))
    return random_injective(rng, m, k), rng.standard_normal((m, k)), k


def _draw_inj1(rng):
    a, e, k = _map_pair(rng)
    g1 = random_spd(rng, k, 0.5)
    ell = posdef.dist_p(g1, a.T @ a)
    e = _scaled(e, grassmann.frob_g(e, g1), rng.uniform(0.01, 0.999) * np.exp(-1.5 * ell) / 3)
    return grassmann.certify_map_perturbation_metric(a, a + e, g1)


def _draw_inj2(rng):
    a, e, k = _map_pair(rng)
    pn = grassmann._pinv_norm_g(a)
    e = _scaled(e, grassmann.frob_g(e), rng.uniform(0.01, 0.999) * 0.5 / pn)
    return grassmann.certify_map_perturbation_ray(a, a + e)


def _draw_injhom(rng):
    a, e, k = _map_pair(rng)
    g1 = random_spd(rng, k, 0.5)
    e *= 10 ** rng.uniform(-4, 0) * np.linalg.norm(a)
    b = a + e
    if not grassmann.is_injective(b):
        return None
    return grassmann.reverse_bound_linear(a, b, g1)


def _random_field(rng, f, spread=0.2):
    """Reference field near the pullback: ``M^T (f^# g0) M`` with ``M`` near the identity."""
    grams = np.swapaxes(f.differentials, 1, 2) @ f.differentials
    m = np.eye(f.k) + spread * rng.standard_normal((grams.shape[0], f.k, f.k))
    g = np.swapaxes(m, 1, 2) @ grams @ m
    return imm.PullbackField(0.5 * (g + np.swapaxes(g, 1, 2)))


def _draw_w1lip(rng):
    f = random_immersion(rng, int(rng.integers(0, 2)))
    g_ref = _random_field(rng, f)
    ell = imm.apriori_membership_discrete(f, g_ref, np.inf).worst
    e = rng.standard_normal(f.positions.shape)
    e[f.mesh.boundary_vertices] *= rng.uniform(0, 1)
    w = imm.w1inf_norm(f.positions, f.positions + e, f.mesh, g_ref, "fro")
    e *= rng.uniform(0.01, 0.999) * np.exp(-1.5 * ell) / 3 / w
    return imm.certify_immersion_perturbation(f, f.positions + e, g_ref)


def _draw_lipw1(rng):
    f = random_immersion(rng, int(rng.integers(0, 2)))
    g_ref = _random_field(rng, f)
    e = rng.standard_normal(f.positions.shape) * 10 ** rng.uniform(-4, -0.5)
    h = imm.DiscreteImmersion(f.mesh, f.positions + e, check=False)
    if not np.all(h.general_position_mask()):
        return None
    return imm.certify_reverse_bound(f, h, g_ref)


def _draw_volume(rng):
    f = random_immersion(rng, int(rng.integers(0, 2)))
    e = rng.standard_normal(f.positions.shape) * 10 ** rng.uniform(-4, -0.5)
    h = imm.DiscreteImmersion(f.mesh, f.positions + e, check=False)
    if not np.all(h.general_position_mask()):
        return None
    return fn.certify_volume_modulus(f, h)


def _draw_spd_corrected(rng):
    return _draw_spd(rng, "corrected")


SWEEPS = {
    "PosDefopeninSym": _draw_spd,
    "HomembInj1": _draw_inj1,
    "HomembInj2": _draw_inj2,
    "InjembHom": _draw_injhom,
    "W1inftyembLip": _draw_w1lip,
    "LipembW1infty": _draw_lipw1,
    "volumeislipschitz1": _draw_volume,
}
EXTRA_SWEEPS = {"PosDefopeninSym-corrected": _draw_spd_corrected}


def run_sweep(name: str, n: int = 1000, seed: int = 0) -> SweepResult:
    draw = SWEEPS.get(name) or EXTRA_SWEEPS.get(name)
    if draw is None:
        raise DomainError(f"unknown sweep {name!r}")
    return _run(name, n, np.random.default_rng(seed), draw)


def run_all(n: int = 1000, seed: int = 0) -> list[SweepResult]:
    return [run_sweep(name, n, seed + i) for i, name in enumerate(SWEEPS)]
