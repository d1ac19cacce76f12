import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from minsurf import immersion as imm
from minsurf import posdef
from minsurf.errors import CertificateViolation, DomainError
from minsurf.grassmann import RAY_TOL
from minsurf.mesh import Triangulation, build_disk, refine
from minsurf.sweeps import random_immersion


def unit_square():
    pts = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]
    return Triangulation(pts, [[0, 1, 2], [0, 2, 3]], [0, 1, 2, 3], [0] * 4, [0, 0.25, 0.5, 0.75])


def flat(mesh, m=3):
    pos = np.zeros((mesh.nv, m))
    pos[:, :2] = mesh.points
    return imm.DiscreteImmersion(mesh, pos)


def bumped_disk(level=1, seed=0):
    mesh = refine(build_disk(1), level)
    rng = np.random.default_rng(seed)
    pos = np.zeros((mesh.nv, 3))
    pos[:, :2] = mesh.points
    pos[mesh.interior_vertices] += 0.05 * rng.standard_normal((mesh.interior_vertices.size, 3))
    return imm.DiscreteImmersion(mesh, pos)


def test_pullback_examples():
    sq = unit_square()
    f = imm.DiscreteImmersion(sq, sq.points)
    assert np.allclose(imm.pullback(f).grams, np.eye(2))
    assert np.allclose(imm.pullback(f.with_positions(3 * sq.points)).grams, 9 * np.eye(2))
    a = 0.7
    g = np.column_stack([sq.points, a * sq.points[:, 0]])
    assert np.allclose(imm.pullback(f.with_positions(g)).grams, [[1 + a * a, 0], [0, 1]])


def test_degenerate_simplex_rejected():
    sq = unit_square()
    pos = sq.points.copy()
    pos[2] = pos[0]
    with pytest.raises(DomainError):
        imm.DiscreteImmersion(sq, pos)
    f = imm.DiscreteImmersion(sq, pos, check=False)
    with pytest.raises(DomainError):
        imm.pullback(f)


def test_pin_check():
    from minsurf.curves import circle
    mesh = build_disk(1)
    pos = np.zeros((mesh.nv, 3))
    pos[:, :2] = mesh.points
    pos[mesh.boundary_vertices] = circle().pin(mesh)
    imm.DiscreteImmersion(mesh, pos, circle())
    pos[mesh.boundary_vertices[0], 2] = 1e-6
    with pytest.raises(DomainError):
        imm.DiscreteImmersion(mesh, pos, circle())


def test_dist_imm_examples():
    f = flat(unit_square())
    d = imm.dist_imm(f, f)
    assert d.total_cross == 0.0
    c = np.array([0.3, -0.4, 1.2])
    d = imm.dist_imm(f, f.with_positions(f.positions + c))
    assert d.sup_pos == pytest.approx(np.linalg.norm(c), rel=1e-15)
    assert d.sup_metric == 0.0 and d.sup_ray == 0.0
    d = imm.dist_imm(f, f.with_positions(2 * f.positions))
    assert d.sup_metric == pytest.approx(np.sqrt(2) * np.log(4), rel=1e-12)
    assert d.sup_ray == pytest.approx(0.0, abs=RAY_TOL)
    # independent oracle for the metric part
    assert d.sup_metric == pytest.approx(float(posdef.dist_p(np.eye(2), 4 * np.eye(2))), rel=1e-12)


def test_dist_imm_boundary_terms():
    f = bumped_disk()
    h = f.with_positions(f.positions + [0, 0, 0.5])
    d = imm.dist_imm(f, h)
    assert d.boundary_pos == pytest.approx(0.5)
    assert d.total_cross == pytest.approx(2 * d.sup_pos, abs=1e-12)


def test_mesh_mismatch():
    f = bumped_disk(1)
    g = bumped_disk(2)
    with pytest.raises(DomainError):
        imm.dist_imm(f, g)


def test_dist_shape_upper():
    f = bumped_disk(1)
    perm = imm.point_symmetry(f.mesh, imm.rotation2(np.pi / 3))
    h = f.compose(perm)
    assert imm.dist_shape_upper(f, f) == 0.0
    assert imm.dist_shape_upper(f, h, [perm]) == 0.0
    assert imm.dist_shape_upper(f, h) > 0.1
    assert imm.dist_shape_upper(f, h) == imm.dist_imm(f, h).total_cross


def test_non_automorphism_rejected():
    f = bumped_disk(1)
    perm = np.arange(f.mesh.nv)
    perm[[0, 1]] = perm[[1, 0]]
    with pytest.raises(DomainError):
        imm.dist_shape_upper(f, f, [perm])
    with pytest.raises(DomainError):
        imm.point_symmetry(f.mesh, [[1.0, 0.2], [0.0, 1.0]])


def test_apriori_examples():
    sq = unit_square()
    f = flat(sq)
    g = imm.pullback(f)
    assert imm.apriori_membership_discrete(f, g, 0.0).member
    # scaling by s multiplies the pullback by s^2, so d = sqrt(2) * 2 log s
    m = imm.apriori_membership_discrete(f.with_positions(np.sqrt(np.e) * f.positions), g, np.sqrt(2))
    assert m.worst == pytest.approx(np.sqrt(2), rel=1e-12) and m.member
    assert not imm.apriori_membership_discrete(
        f.with_positions(np.sqrt(np.e) * f.positions), g, np.sqrt(2) - 1e-6).member
    m = imm.apriori_membership_discrete(f.with_positions(np.e * f.positions), g, np.inf)
    assert m.worst == pytest.approx(2 * np.sqrt(2), rel=1e-12)
    pos = f.positions.copy()
    pos[2] = pos[0]
    m = imm.apriori_membership_discrete(f.with_positions(pos, check=False), g, 10.0)
    assert not m.member and "degenerate" in m.diagnostic


def test_certificates_examples(rng):
    f = flat(unit_square())
    assert imm.certify_immersion_perturbation(f, f).actual == 0.0
    e = rng.standard_normal(f.positions.shape)
    e *= 0.001 / np.max(np.linalg.norm(e, axis=1))
    c = imm.certify_immersion_perturbation(f, f.positions + e)
    assert c.applicable and c.actual <= c.bound
    c = imm.certify_reverse_bound(f, f)
    assert c.applicable and c.actual == 0.0
    t = f.with_positions(f.positions + [0.1, 0.2, 0.0])
    c = imm.certify_reverse_bound(f, t)
    assert c.actual == pytest.approx(np.hypot(0.1, 0.2)) and c.actual <= c.bound


def test_large_perturbation_is_not_applicable():
    f = flat(unit_square())
    c = imm.certify_immersion_perturbation(f, f.positions + 1.0)
    assert not c.applicable


def test_w1inf_norms_match_on_rank_one():
    f = flat(unit_square())
    g = imm.PullbackField.identity(f.mesh)
    d = np.zeros_like(f.positions)
    d[:, 2] = f.mesh.points[:, 0]  # differential difference has rank one
    assert imm.w1inf_norm(f.positions, f.positions + d, f.mesh, g, "fro") == pytest.approx(
        imm.w1inf_norm(f.positions, f.positions + d, f.mesh, g, "op"))
    with pytest.raises(ValueError):
        imm.w1inf_norm(f.positions, f.positions, f.mesh, g, "max")


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_dist_imm_is_a_metric(seed):
    rng = np.random.default_rng(seed)
    a, b, c = (random_immersion(rng, 0) for _ in range(3))
    dab = imm.dist_imm(a, b).total
    assert dab == imm.dist_imm(b, a).total or abs(dab - imm.dist_imm(b, a).total) <= 2 * RAY_TOL
    assert imm.dist_imm(a, a).total == 0.0 and dab > 0
    assert dab <= imm.dist_imm(a, c).total + imm.dist_imm(c, b).total + 2 * RAY_TOL


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 5))
def test_reparameterization_invariance(seed, j):
    rng = np.random.default_rng(seed)
    f, h = random_immersion(rng, 1), random_immersion(rng, 1)
    perm = imm.point_symmetry(f.mesh, imm.rotation2(j * np.pi / 3))
    a = imm.dist_imm(f, h).total
    b = imm.dist_imm(f.compose(perm), h.compose(perm)).total
    assert abs(a - b) <= 2 * RAY_TOL
    assert imm.dist_shape_upper(f, h, [perm]) <= imm.dist_imm(f, h).total_cross


def test_cauchy_sequence_converges_to_immersion():
    f = bumped_disk(1)
    target = f.positions
    rng = np.random.default_rng(7)
    noise = rng.standard_normal(target.shape)
    g = imm.pullback(f)
    seq = [f.with_positions(target + 2.0 ** -n * 0.05 * noise) for n in range(1, 12)]
    worst = [imm.apriori_membership_discrete(s, g, np.inf).worst for s in seq]
    assert max(worst) < 1.0
    gaps = [imm.dist_imm(seq[i], seq[i + 1]).total for i in range(len(seq) - 1)]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    limit = f.with_positions(target)
    assert imm.dist_imm(seq[-1], limit).total < 1e-3
