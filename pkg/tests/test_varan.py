import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from minsurf import charts
from minsurf import functional as fn
from minsurf import immersion as imm
from minsurf import varan
from minsurf.curves import BoundaryCurve, circle
from minsurf.errors import CertificateViolation, DomainError
from minsurf.mesh import annulus_ratio, build_cylinder, build_disk, refine
from minsurf.sweeps import random_immersion

from oracles import brute_hausdorff, brute_limits, brute_pushforward_argmin, random_finite_instance


def hexagon_curve():
    """The hexagon boundary itself, so that gamma_T = gamma on every refinement."""
    ang = 2 * np.pi * np.arange(7) / 6
    v = np.stack([np.cos(ang), np.sin(ang), np.zeros(7)], 1)
    knots = np.arange(7) / 6

    def comp(t):
        t = np.mod(np.asarray(t, float), 1.0)
        i = np.minimum((t * 6).astype(int), 5)
        s = (t - knots[i])[:, None] * 6
        x = v[i] + s * (v[i + 1] - v[i])
        dx = 6 * (v[i + 1] - v[i])
        return x, dx, np.zeros_like(x)

    return BoundaryCurve([comp], name="hexagon")


def flat_hexagon(level):
    mesh = refine(build_disk(1), level)
    pos = np.zeros((mesh.nv, 3))
    pos[:, :2] = mesh.points
    return imm.DiscreteImmersion(mesh, pos, hexagon_curve())


def test_chi():
    s = np.array([0.0, 0.5, 1.0, 2.0])
    v, dv = varan.chi(s)
    assert v[0] == 1.0 and v[2] == 0.0 and v[3] == 0.0
    assert v[1] == pytest.approx(np.exp(-1.0))
    h = 1e-6
    fd = (varan.chi(0.5 + h)[0] - varan.chi(0.5 - h)[0]) / (2 * h)
    assert dv[1] == pytest.approx(fd, rel=1e-6)


def test_sample_of_pl_interpolant_is_identity():
    f = random_immersion(np.random.default_rng(1), 1)
    s = varan.sample_op(fn.as_sampled(f))
    assert np.array_equal(s.positions, f.positions)


def test_sample_flat_disk_is_inscribed():
    mesh = refine(build_disk(1), 1)
    s = varan.sample_op(fn.from_chart(mesh, charts.FlatDiskChart()), circle())
    assert np.allclose(np.linalg.norm(s.positions[mesh.boundary_vertices], axis=1), 1.0)
    assert fn.discrete_volume(s) < np.pi


def test_sample_catenoid_level0():
    mesh = build_cylinder(6, 1)
    chart = charts.CatenoidChart(6, 1.0, annulus_ratio(6), 0.5)
    s = varan.sample_op(fn.from_chart(mesh, chart))
    assert np.isfinite(imm.apriori_membership_discrete(s, imm.PullbackField.identity(mesh), np.inf).worst)


def test_sample_rejects_curve_mismatch_and_degeneracy():
    mesh = build_disk(1)
    with pytest.raises(DomainError):
        varan.sample_op(fn.from_chart(mesh, charts.QuadraticProbe()), circle(2.0))

    def collapse(x, anchor):
        return np.zeros((x.shape[0], 3)), np.zeros((x.shape[0], 3, 2))

    with pytest.raises(DomainError, match="refine"):
        varan.sample_op(fn.from_chart(mesh, collapse))


def test_reconstruct_is_pl_when_boundary_is_pl():
    f = flat_hexagon(1)
    r = varan.reconstruct_op(f, hexagon_curve())
    ids, bary, _ = fn.quadrature_nodes(f.mesh, 4)
    p, j = r.evaluate(ids, bary)
    q, k = fn.as_sampled(f).evaluate(ids, bary)
    assert np.max(np.abs(p - q)) < 1e-15 and np.max(np.abs(j - k)) < 1e-14


def test_reconstruct_boundary_trace_is_the_curve():
    mesh = build_disk(1)
    f = varan.sample_op(fn.from_chart(mesh, charts.FlatDiskChart()), circle())
    r = varan.reconstruct_op(f, circle())
    owners = mesh.boundary_face_simplex
    s = np.linspace(0, 1, 9)
    for face, sid in zip(mesh.boundary_faces, owners):
        ca = int(np.flatnonzero(mesh.simplices[sid] == face[0])[0])
        cb = int(np.flatnonzero(mesh.simplices[sid] == face[1])[0])
        bary = np.zeros((s.size, 3))
        bary[:, ca], bary[:, cb] = 1 - s, s
        x, _ = r.evaluate(np.full(s.size, sid), bary)
        assert np.max(np.abs(np.linalg.norm(x[:, :2], axis=1) - 1)) < 1e-10
        assert np.max(np.abs(x[:, 2])) == 0.0


def test_correction_size_halves():
    sizes = [varan.correction_size(refine(build_disk(1), L), circle()) for L in range(1, 5)]
    ratios = np.array(sizes[1:]) / np.array(sizes[:-1])
    assert np.all((ratios > 0.4) & (ratios < 0.6))


def dented_curve(a):
    """``r = 1 - a sin^2(3 theta)``: through the hexagon vertices, dipping inside the chords."""
    w = 2 * np.pi

    def comp(t):
        th = w * np.asarray(t, float)
        r = 1 - a * np.sin(3 * th) ** 2
        dr = -3 * a * np.sin(6 * th)
        ddr = -18 * a * np.cos(6 * th)
        c, s, z = np.cos(th), np.sin(th), np.zeros_like(th)
        x = np.stack([r * c, r * s, z], 1)
        dx = w * np.stack([dr * c - r * s, dr * s + r * c, z], 1)
        ddx = w * w * np.stack([ddr * c - 2 * dr * s - r * c, ddr * s + 2 * dr * c - r * s, z], 1)
        return x, dx, ddx

    return BoundaryCurve([comp], name="dented")


def test_reconstruct_reports_threshold_when_correction_folds():
    mesh = build_disk(1)
    c = dented_curve(0.5)
    pos = np.column_stack([mesh.points, np.zeros(mesh.nv)])
    varan.reconstruct_op(imm.DiscreteImmersion(mesh, pos, c), c)
    # move the centre toward a boundary edge: the inward correction now folds the collar
    pos[mesh.interior_vertices[0], :2] = 0.6 * np.array([np.cos(np.pi / 6), np.sin(np.pi / 6)])
    with pytest.raises(DomainError, match="threshold"):
        varan.reconstruct_op(imm.DiscreteImmersion(mesh, pos, c), c)


def test_consistency_zero_for_pl_data():
    cands = [flat_hexagon(1)]
    rng = np.random.default_rng(0)
    pos = np.array(cands[0].positions)
    iv = cands[0].mesh.interior_vertices
    pos[iv, 2] += 0.1 * rng.standard_normal(iv.size)
    cands.append(cands[0].with_positions(pos))
    rep = varan.consistency_errors([fn.as_sampled(c) for c in cands], cands, hexagon_curve())
    assert rep.delta_sampling < 1e-12 and rep.delta_reconstruction < 1e-12
    assert not rep.failures
    rep = varan.proximity_errors([fn.as_sampled(c) for c in cands], cands, hexagon_curve())
    assert rep.eps_reconstruction < 1e-12 and rep.eps_sampling < 1e-12


def flat_family_report(level, proximity=False):
    mesh = refine(build_disk(1), level)
    smooth = [fn.from_chart(mesh, charts.FlatDiskChart()), fn.from_chart(mesh, charts.CapChart(0.1))]
    rep = varan.consistency_errors(smooth, [], circle())
    if proximity:
        varan.proximity_errors(smooth[:1], [varan.sample_op(smooth[0], circle())], circle(), report=rep)
    return rep


def test_flat_disk_consistency_trend():
    reps = [flat_family_report(L) for L in range(4)]
    d = np.array([r.delta_total for r in reps])
    assert np.all(np.diff(d) < 0)
    assert np.all((d[1:] / d[:-1] >= 0.2) & (d[1:] / d[:-1] <= 0.7))
    for r in reps:
        assert r.inf_gap <= max(r.delta_sampling, r.delta_reconstruction) * (1 + 1e-12)
        assert r.delta_total == r.delta_sampling + r.delta_reconstruction
        assert r.delta_sampling >= 0 and r.delta_reconstruction >= 0


def test_flat_disk_proximity_trend():
    reps = [flat_family_report(L, True) for L in range(4)]
    eps_r = np.array([r.eps_reconstruction for r in reps])
    assert np.all((eps_r[1:] / eps_r[:-1] > 0.4) & (eps_r[1:] / eps_r[:-1] < 0.6))
    # sampling proximity is pre-asymptotic on the coarsest meshes
    eps_t = np.array([r.eps_total for r in reps])
    assert eps_t[3] < eps_t[2] and eps_t[3] / eps_t[2] < 0.7
    assert all(r.eps_total == max(r.eps_sampling, r.eps_reconstruction) for r in reps)


def test_consistency_requires_candidates():
    with pytest.raises(DomainError):
        varan.consistency_errors([], [], circle())


def test_lower_level_set_assertion_fires():
    # a fabricated sampling table where the only smooth minimizer samples badly
    f_smooth = np.array([1.0, 2.0])
    s_of_smooth = np.array([5.0, 1.5])
    f_disc = np.array([1.5, 5.0])
    r_of_disc = np.array([2.0, 1.0])
    with pytest.raises(CertificateViolation):
        varan.check_lower_level_sets(f_smooth, s_of_smooth, f_disc, r_of_disc, 0.1)


def test_infdist_assertion_fires():
    rep = varan.ErrorReport(delta_sampling=0.1, delta_reconstruction=0.1, inf_smooth=1.0, inf_discrete=2.0)
    with pytest.raises(CertificateViolation):
        varan.check_infdist(rep)


def test_rho_affine_probe_is_zero():
    mesh = refine(build_disk(1), 1)
    assert varan.rho_estimate(mesh, circle(), [charts.AffineProbe()]) < 1e-14


def test_rho_quadratic_probe_halves():
    r = [varan.rho_estimate(refine(build_disk(1), L), circle(), [charts.QuadraticProbe()])
         for L in range(1, 5)]
    ratios = np.array(r[1:]) / np.array(r[:-1])
    assert np.all((ratios > 0.4) & (ratios < 0.6))


def test_rho_zero_derivative_probe():
    mesh = build_disk(1)

    def const(x, anchor):
        return np.ones((x.shape[0], 3)), np.zeros((x.shape[0], 3, 2))

    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        r = varan.rho_estimate(mesh, circle(), [const, charts.QuadraticProbe()])
        assert r > 0 and any("zero derivative" in str(x.message) for x in w)
    with pytest.warns(UserWarning), pytest.raises(DomainError):
        varan.rho_estimate(mesh, circle(), [const])
    with pytest.raises(DomainError):
        varan.rho_estimate(mesh, circle(), [])


def test_reports_csv():
    rep = varan.ErrorReport(delta_sampling=0.5, delta_reconstruction=0.25, eps_sampling=1.0,
                            eps_reconstruction=2.0, rho=0.1, inf_smooth=3.0, inf_discrete=2.5,
                            n_smooth=2, n_discrete=3)
    text = varan.reports_to_csv({2: rep, 1: rep})
    lines = text.splitlines()
    assert lines[0] == "# minsurf error-report v1"
    assert lines[1].split(",") == list(varan.REPORT_COLUMNS)
    row = dict(zip(varan.REPORT_COLUMNS, lines[2].split(",")))
    assert row["level"] == "1" and float(row["delta_total"]) == 0.75
    assert float(row["eps_total"]) == 2.0 and float(row["inf_gap"]) == 0.5


# ----------------------------------------------------------------------
# finite metric engine


def line(n):
    return varan.FiniteMetricSet.from_points(np.arange(n, dtype=float))


def test_metric_set_validation():
    with pytest.raises(DomainError):
        varan.FiniteMetricSet(np.array([[0.0, 1.0], [2.0, 0.0]]))
    with pytest.raises(DomainError):
        varan.FiniteMetricSet(np.array([[1.0, 1.0], [1.0, 0.0]]))
    with pytest.raises(DomainError):
        varan.FiniteMetricSet(np.zeros((2, 3)))


def test_thicken_examples():
    sp = line(3)
    assert varan.thicken(sp, {0}, 0.0) == {0}
    assert varan.thicken(sp, {0}, 1.0) == {0, 1}
    assert varan.thicken(sp, {0}, 1.0, closed=False) == {0}
    with pytest.raises(DomainError):
        varan.thicken(sp, {0}, -1.0)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_thicken_monotone(seed):
    rng = np.random.default_rng(seed)
    sp = varan.FiniteMetricSet.from_points(rng.uniform(0, 1, (12, 2)))
    a = set(rng.choice(12, 3, replace=False).tolist())
    b = a | set(rng.choice(12, 2).tolist())
    r1, r2 = sorted(rng.uniform(0, 1, 2))
    assert a <= varan.thicken(sp, a, 0.0)
    assert varan.thicken(sp, a, r1) <= varan.thicken(sp, a, r2)
    assert varan.thicken(sp, a, r1) <= varan.thicken(sp, b, r1)


def test_limits_constant_sequence():
    sp = line(5)
    res = varan.finite_limits(sp, [{1, 3}] * 10)
    assert res.li == res.ls == {1, 3}


def test_limits_alternating():
    sp = line(2)
    res = varan.finite_limits(sp, [{0}, {1}] * 10)
    assert res.li == set() and res.ls == {0, 1}
    li, ls = brute_limits(sp.dist, [{0}, {1}] * 10, res.eps_grid, res.tail_start)
    assert (li, ls) == (set(), {0, 1})


def test_limits_rounded_grid():
    grid = np.arange(21) / 20
    sp = varan.FiniteMetricSet.from_points(grid)
    sets = [{int(np.argmin(np.abs(grid - 1 / n)))} for n in range(1, 101)]
    res = varan.finite_limits(sp, sets)
    assert res.li == res.ls == {0}
    radii = [0.5 / n for n in range(1, 101)]
    assert varan.finite_limits(sp, sets, radii).li == {0}


def test_schedule_must_decay():
    sp = line(3)
    with pytest.raises(DomainError):
        varan.finite_limits(sp, [{0}] * 8, [0.1] * 8)
    with pytest.raises(DomainError):
        varan.finite_limits(sp, [{0}] * 8, [0.1] * 7)
    # decaying but too large in the tail for a unit-spaced ground set
    with pytest.raises(DomainError):
        varan.finite_limits(sp, [{0}] * 8, [4, 4, 3, 3, 2, 2, 1.5, 1.5])
    varan.finite_limits(sp, [{0}] * 8, [0.0] * 8)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_limits_match_brute_force(seed):
    rng = np.random.default_rng(seed)
    dist, sets = random_finite_instance(rng)
    sp = varan.FiniteMetricSet(dist)
    N = len(sets)
    radii = sp.separation() * 0.9 * 2.0 ** -np.arange(N)
    res = varan.finite_limits(sp, sets, radii)
    assert (res.li, res.ls) == brute_limits(dist, sets, res.eps_grid, res.tail_start)
    assert res.li <= res.ls


def test_hausdorff_examples():
    sp = line(3)
    assert varan.hausdorff_distance(sp, {0, 1}, {0, 1}) == 0.0
    assert varan.hausdorff_distance(sp, {0}, {0, 1}) == 1.0
    with pytest.raises(DomainError):
        varan.hausdorff_distance(sp, set(), {0})
    assert varan.hausdorff_from_table([[0.0, 2.0], [1.0, 3.0]]) == 2.0


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_hausdorff_properties(seed):
    rng = np.random.default_rng(seed)
    sp = varan.FiniteMetricSet.from_points(rng.uniform(0, 1, (10, 2)))
    a, b, c = (set(rng.choice(10, int(rng.integers(1, 5)), replace=False).tolist()) for _ in range(3))
    dab = varan.hausdorff_distance(sp, a, b)
    assert dab == varan.hausdorff_distance(sp, b, a)
    assert dab == pytest.approx(brute_hausdorff(sp.dist, a, b), abs=0)
    assert (dab == 0) == (a == b)
    assert dab <= varan.hausdorff_distance(sp, a, c) + varan.hausdorff_distance(sp, c, b) + 1e-15


def test_pushforward_examples():
    vals = [("a", 1.0), ("b", 5.0), ("c", 2.0)]
    ident = {"a": "a", "b": "b", "c": "c"}
    assert varan.pushforward_argmin(vals, ident, 0.0) == {"a"}
    assert varan.pushforward_argmin(vals, ident, 1.0) == {"a", "c"}
    same = {"a": "X", "b": "X", "c": "Y"}
    assert varan.pushforward_argmin(vals, same, 0.0) == {"X"}
    assert varan.pushforward_argmin([("a", 3.0), ("b", 5.0), ("c", 2.0)], same, 0.0) == {"Y"}
    assert varan.pushforward_argmin(vals, same, np.inf) == {"X", "Y"}
    with pytest.raises(DomainError):
        varan.pushforward_argmin([], {}, 0.0)
    with pytest.raises(DomainError):
        varan.pushforward_argmin([("a", np.nan)], {"a": 0}, 0.0)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_pushforward_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 15))
    vals = [(i, float(rng.integers(0, 6))) for i in range(n)]
    fibers = {i: int(rng.integers(0, 4)) for i in range(n)}
    rho = float(rng.choice([0.0, 0.5, 1.0, 3.0]))
    assert varan.pushforward_argmin(vals, fibers, rho) == brute_pushforward_argmin(vals, fibers, rho)
