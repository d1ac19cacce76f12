import numpy as np
import pytest

from minsurf import charts
from minsurf import functional as fn
from minsurf.curves import catenoid_boundary, circle
from minsurf.mesh import annulus_ratio, build_cylinder, build_disk, refine


def jacobian_fd(chart, x, anchor, h=1e-6):
    cols = []
    for j in range(2):
        e = np.zeros(2)
        e[j] = h
        cols.append((chart(x + e, anchor)[0] - chart(x - e, anchor)[0]) / (2 * h))
    return np.stack(cols, axis=2)


def interior_samples(mesh, rng, n=200):
    ids = rng.integers(0, mesh.ns, n)
    bary = rng.dirichlet(np.ones(3) * 4, n)
    x = np.einsum("ni,nij->nj", bary, mesh.points[mesh.simplices[ids]])
    anchor = mesh.points[mesh.simplices[ids]].mean(axis=1)
    return x, anchor


@pytest.mark.parametrize("chart,mesh", [
    (charts.FlatDiskChart(), refine(build_disk(1), 2)),
    (charts.CapChart(0.25), refine(build_disk(1), 2)),
    (charts.CatenoidChart(6, 1.0, annulus_ratio(6), 0.5), refine(build_cylinder(6, 1), 2)),
    (charts.QuadraticProbe(), build_disk(2)),
    (charts.AffineProbe(), build_disk(2)),
])
def test_jacobian_matches_finite_differences(chart, mesh, rng):
    x, anchor = interior_samples(mesh, rng)
    _, jac = chart(x, anchor)
    assert np.allclose(jac, jacobian_fd(chart, x, anchor), atol=1e-6)


def test_flat_disk_chart_boundary_and_centre():
    mesh = refine(build_disk(1), 2)
    f = fn.from_chart(mesh, charts.FlatDiskChart())
    v = f.at_vertices()
    bv = mesh.boundary_vertices
    assert np.allclose(v[bv], circle().pin(mesh), atol=1e-14)
    centre = np.linalg.norm(mesh.points, axis=1) < 0.4
    assert np.allclose(v[centre, :2], mesh.points[centre])


def test_cap_chart_boundary():
    mesh = refine(build_disk(1), 1)
    v = fn.from_chart(mesh, charts.CapChart(0.1)).at_vertices()
    assert np.allclose(v[mesh.boundary_vertices], circle().pin(mesh), atol=1e-14)


def test_catenoid_chart_boundary():
    mesh = refine(build_cylinder(6, 1), 1)
    chart = charts.CatenoidChart(6, 1.0, annulus_ratio(6), 0.5)
    v = fn.from_chart(mesh, chart).at_vertices()
    assert np.allclose(v[mesh.boundary_vertices], catenoid_boundary(0.5).pin(mesh), atol=1e-13)
    r = np.linalg.norm(v[:, :2], axis=1)
    assert np.allclose(r, np.cosh(v[:, 2]))


def test_smoothstep():
    s, ds = charts.smoothstep(np.array([-1.0, 0.0, 0.5, 1.0, 2.0]))
    assert s.tolist() == [0.0, 0.0, 0.5, 1.0, 1.0]
    assert ds[0] == 0.0 and ds[-1] == 0.0 and ds[2] == pytest.approx(1.875)
