import numpy as np
import pytest

from minsurf import study
from minsurf.errors import DomainError
from minsurf.objio import read_obj

CONFIG = """
[study]
domain = disk
levels = 2
apriori_r = 3.0
proximity = true   ; also compute proximity errors

[mesh]
n_rings = 1

[curve]
kind = circle
radius = 1.0

[solver]
method = h1-iteration
multistart_count = 2
seed = 7
grad_tol = 1e-9
"""


def test_parse_config():
    cfg = study.parse_config(CONFIG)
    assert cfg.domain == "disk" and cfg.levels == 2 and cfg.proximity
    assert cfg.solver.seed == 7 and cfg.solver.grad_tol == 1e-9 and cfg.solver.multistart_count == 2
    assert cfg.build_curve().name == "circle(1)"
    assert cfg.base_mesh().nv == 7


def test_config_errors(tmp_path):
    with pytest.raises(DomainError):
        study.parse_config("[study]\ndomain = sphere\n")
    with pytest.raises(DomainError):
        study.parse_config("[study]\nlevels = -1\n")
    with pytest.raises(DomainError):
        study.parse_config("[solver]\nstep = 3\n")
    with pytest.raises(DomainError):
        study.parse_config("[study]\nlevels = many\n")
    with pytest.raises(DomainError):
        study.parse_config("levels = 3\n")
    with pytest.raises(DomainError):
        study.parse_config("[curve]\nkind = file\npath = missing.txt\n")
    with pytest.raises(DomainError):
        study.load_config(tmp_path / "nope.ini")


def test_curve_file_relative_to_config(tmp_path):
    s = np.arange(16) / 16
    np.savetxt(tmp_path / "c.txt", np.stack([np.cos(2 * np.pi * s), np.sin(2 * np.pi * s), 0 * s], 1))
    (tmp_path / "study.ini").write_text("[curve]\nkind = file\npath = c.txt\n")
    cfg = study.load_config(tmp_path / "study.ini")
    assert cfg.build_curve().name == "file"
    assert study.analytic_reference(cfg, cfg.build_curve()) is None


def test_references():
    disk = study.StudyConfig()
    ref = study.analytic_reference(disk, disk.build_curve())
    assert ref.area == pytest.approx(np.pi)
    cyl = study.StudyConfig(domain="cylinder", curve={"kind": "catenoid", "half_height": "0.5"})
    ref = study.analytic_reference(cyl, cyl.build_curve())
    assert ref.area == pytest.approx(2 * np.pi * (0.5 + np.sinh(0.5) * np.cosh(0.5)))
    big = study.StudyConfig(curve={"kind": "circle", "radius": "2"})
    assert study.analytic_reference(big, big.build_curve()) is None


def test_study_outputs_and_determinism(tmp_path):
    cfg = study.parse_config(CONFIG)
    from dataclasses import replace
    a = study.run_converge_study(replace(cfg, outputs=str(tmp_path / "a")))
    b = study.run_converge_study(replace(cfg, outputs=str(tmp_path / "b")))
    csv_a = (tmp_path / "a" / "summary.csv").read_bytes()
    assert csv_a == (tmp_path / "b" / "summary.csv").read_bytes()
    lines = csv_a.decode().splitlines()
    assert lines[0] == "# " + study.CSV_VERSION
    assert lines[1].split(",") == list(study.CSV_COLUMNS)
    assert len(lines) == 2 + 3
    areas = a.areas
    assert np.all(np.diff(areas) > 0) and np.all(areas < np.pi)
    assert np.array_equal(areas, b.areas)
    for r in a.levels:
        mesh, pos = read_obj(tmp_path / "a" / f"level_{r.level}.obj")
        assert np.array_equal(pos, r.minimizers.best.immersion.positions)
        assert np.array_equal(mesh.simplices, r.mesh.simplices)
    row = dict(zip(study.CSV_COLUMNS, lines[3].split(",")))
    assert float(row["eps_total"]) > 0 and float(row["rho"]) > 0
    assert float(row["hausdorff_prev"]) > 0
