import csv

import numpy as np
import pytest

from minsurf import functional as fn
from minsurf import immersion as imm
from minsurf import solve
from minsurf.curves import BoundaryCurve, circle
from minsurf.errors import DomainError
from minsurf.mesh import build_disk, refine


def polygon_area(n):
    return 0.5 * n * np.sin(2 * np.pi / n)


def bumpy_start(level=1, seed=0, amp=0.2):
    mesh = refine(build_disk(1), level)
    rng = np.random.default_rng(seed)
    pos = np.zeros((mesh.nv, 3))
    pos[:, :2] = mesh.points
    pos[mesh.boundary_vertices] = circle().pin(mesh)
    iv = mesh.interior_vertices
    pos[iv, 2] = amp * rng.uniform(0.5, 1, iv.size)
    return imm.DiscreteImmersion(mesh, pos, circle())


@pytest.mark.parametrize("method", solve.METHODS)
def test_planar_boundary_converges_flat(method):
    f = bumpy_start()
    res = solve.minimize(f, solve.SolverConfig(method=method))
    assert res.converged and not res.stagnated
    nb = f.mesh.boundary_vertices.size
    assert res.value == pytest.approx(polygon_area(nb), rel=1e-9)
    assert np.max(np.abs(res.immersion.positions[:, 2])) < 1e-6


def test_value_sequence_monotone_and_quality_floor():
    f = bumpy_start(2, amp=0.5)
    cfg = solve.SolverConfig(method="gradient-descent", quality_floor=1e-3, max_iters=400)
    res = solve.minimize(f, cfg)
    vals = [row[1] for row in res.trace]
    assert all(b <= a for a, b in zip(vals, vals[1:]))
    assert min(row[3] for row in res.trace[1:]) >= 1e-3


def test_apriori_preserved_along_iterates():
    f = bumpy_start(1, amp=0.4)
    g = imm.pullback(f)
    floor = 1e-3
    cfg = solve.SolverConfig(quality_floor=floor, max_iters=50)
    res = solve.minimize(f, cfg)
    before = imm.apriori_membership_discrete(f, g, np.inf).worst
    after = imm.apriori_membership_discrete(res.immersion, g, np.inf).worst
    assert after <= before + np.log(1 / floor)


def test_methods_agree_on_disk():
    f = bumpy_start(2)
    a = solve.minimize(f, solve.SolverConfig(method="h1-iteration")).value
    b = solve.minimize(f, solve.SolverConfig(method="gradient-descent")).value
    assert a == pytest.approx(b, rel=1e-6)


def test_determinism():
    f = bumpy_start(2)
    cfg = solve.SolverConfig(method="gradient-descent", max_iters=30)
    r1, r2 = solve.minimize(f, cfg), solve.minimize(f, cfg)
    assert np.array_equal(r1.immersion.positions, r2.immersion.positions)
    assert r1.trace == r2.trace
    m1 = solve.multistart_minimize(f.mesh, circle(), solve.SolverConfig(multistart_count=4, seed=5))
    m2 = solve.multistart_minimize(f.mesh, circle(), solve.SolverConfig(multistart_count=4, seed=5))
    assert [e.value for e in m1.entries] == [e.value for e in m2.entries]


def test_trace_file(tmp_path):
    path = tmp_path / "trace.csv"
    res = solve.minimize(bumpy_start(), solve.SolverConfig(trace_path=str(path)))
    lines = path.read_text().splitlines()
    assert lines[0] == "# minsurf trace v1"
    rows = list(csv.reader(lines[1:]))
    assert rows[0] == ["iter", "value", "grad_norm", "min_quality", "step_length"]
    assert len(rows) - 1 == res.iterations + 1
    assert float(rows[-1][1]) == res.value


def test_residual():
    f = bumpy_start()
    res = solve.minimize(f, solve.SolverConfig())
    assert solve.minimality_residual(res.immersion) <= 1e-6
    pos = np.array(res.immersion.positions)
    pos[f.mesh.interior_vertices[0], 2] += 0.05
    assert solve.minimality_residual(res.immersion.with_positions(pos)) > 0


def saddle_curve():
    w = 2 * np.pi

    def comp(t):
        s = w * np.asarray(t, float)
        x = np.stack([np.cos(s), np.sin(s), 0.3 * np.cos(2 * s)], 1)
        dx = w * np.stack([-np.sin(s), np.cos(s), -0.6 * np.sin(2 * s)], 1)
        ddx = w * w * np.stack([-np.cos(s), -np.sin(s), -1.2 * np.cos(2 * s)], 1)
        return x, dx, ddx

    return BoundaryCurve([comp], name="saddle")


def test_residual_decreases_along_descent():
    c = saddle_curve()
    mesh = refine(build_disk(1), 1)
    x = solve.harmonic_positions(mesh, c.pin(mesh), 3)
    x[mesh.interior_vertices, 2] += 0.2
    f = imm.DiscreteImmersion(mesh, x, c)
    resid = [solve.minimality_residual(f)]
    for _ in range(10):
        f = solve.minimize(f, solve.SolverConfig(max_iters=1)).immersion
        resid.append(solve.minimality_residual(f))
    assert all(b <= a for a, b in zip(resid, resid[1:]))
    assert resid[-1] < 0.05 * resid[0]


def test_non_immersed_start_rejected():
    f = bumpy_start()
    pos = np.array(f.positions)
    s = f.mesh.simplices[0]
    pos[s[1]] = pos[s[0]]
    with pytest.raises(DomainError):
        solve.minimize(f.with_positions(pos, check=False))


def test_config_validation():
    with pytest.raises(DomainError):
        solve.SolverConfig(method="newton")
    with pytest.raises(DomainError):
        solve.SolverConfig(grad_tol=0)
    with pytest.raises(DomainError):
        solve.SolverConfig(multistart_count=0)


def test_multistart_planar_single_entry():
    mesh = refine(build_disk(1), 2)
    mins = solve.multistart_minimize(mesh, circle(), solve.SolverConfig(multistart_count=6))
    assert len(mins) == 1
    assert mins.delta < 1e-9
    assert mins.best.value == pytest.approx(polygon_area(mesh.boundary_vertices.size), rel=1e-9)
    vals = [e.value for e in mins.entries]
    assert vals == sorted(vals)


def test_multistart_count_one():
    mesh = refine(build_disk(1), 1)
    mins = solve.multistart_minimize(mesh, circle(), solve.SolverConfig(multistart_count=1))
    assert len(mins) == 1 and mins.best.start == "harmonic"


def test_initializations_order():
    mesh = refine(build_disk(1), 1)
    names = [n for n, _ in solve.initializations(mesh, circle(), 5, 0, previous=np.zeros((mesh.nv, 3)))]
    assert names[:3] == ["prolonged", "harmonic", "cone"]
    assert names[3].startswith("jitter-prolonged")


def test_point_triangle_distance():
    a, b, c = np.array([[0.0, 0, 0]]), np.array([[1.0, 0, 0]]), np.array([[0.0, 1, 0]])
    pts = np.array([[0.2, 0.2, 3.0], [2.0, 0, 0], [-1.0, -1, 0], [1.0, 1, 0]])
    d = solve.point_triangle_distance(pts, np.repeat(a, 4, 0), np.repeat(b, 4, 0), np.repeat(c, 4, 0))
    assert np.allclose(d, [3.0, 1.0, np.sqrt(2), np.sqrt(0.5)])


def test_image_distance_ignores_tangential_moves():
    f = bumpy_start(2, amp=0.0)
    pos = np.array(f.positions)
    iv = f.mesh.interior_vertices
    pos[iv, :2] *= 0.95  # slide within the plane
    h = f.with_positions(pos)
    assert solve.image_distance(f, h) < 1e-12
    assert imm.dist_imm(f, h).total > 1e-3
    pos[iv, 2] = 0.1
    assert solve.image_distance(f, f.with_positions(pos)) > 0.05
    assert fn.discrete_volume(f) == pytest.approx(fn.discrete_volume(h), rel=1e-12)
